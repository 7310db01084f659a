#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "als/config.hpp"
#include "als/geometry.hpp"
#include "als/synthdata.hpp"

namespace als {

// On-disk dataset layout written by `als gen-data`:
//
//   manifest.json                 resolved config, mean pixel, split sizes
//   train/annotations.jsonl       one record per line (see AnnotationRecord)
//   train/images/NNNNNN.pgm       P5 graymaps
//   train/masks/NNNNNN.pgm        P5, 0 = background, 255 = object
//   val/...                       same layout for the validation split

/// P5 (binary 8-bit) graymap.
void write_pgm(const std::filesystem::path& path, const Raster& image);
Raster read_pgm(const std::filesystem::path& path);
void write_mask_pgm(const std::filesystem::path& path, const ObjectMask& mask);
ObjectMask read_mask_pgm(const std::filesystem::path& path);

/// { "image": path, "class": int, "box": [x,y,w,h], "frame": [W,H] } plus the
/// optional "id", "mask" and "background" fields this project writes.
struct AnnotationRecord {
  std::int64_t id = 0;
  std::string image;
  std::optional<std::string> mask;
  int class_id = 0;
  std::optional<int> background;
  BoundingBox box;
  ImageFrame frame;
  std::optional<AugmentTransform> transform;  // per-record override for `als label`
};

std::string annotation_line(const AnnotationRecord& rec);
AnnotationRecord parse_annotation(const std::string& line);
std::vector<AnnotationRecord> read_annotations(const std::filesystem::path& path);

AugmentTransform transform_from_json(const nlohmann::json& j);

struct DatasetOnDisk {
  ExperimentConfig config;
  Dataset train;
  std::vector<AnnotatedSample> val;
};

void write_dataset(const std::filesystem::path& dir, const ExperimentConfig& config, const Dataset& train,
                   const std::vector<AnnotatedSample>& val);
DatasetOnDisk load_dataset(const std::filesystem::path& dir);

/// Writes `contents` to `path` through a temporary file and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace als
