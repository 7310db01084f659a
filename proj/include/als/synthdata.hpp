#pragma once

#include <cstdint>
#include <vector>

#include "als/geometry.hpp"
#include "als/rng.hpp"

namespace als {

/// Scene generator settings. Each class c has a distinctive striped glyph and
/// an associated background texture (texture id c); `context_correlation` is
/// the probability that a sample's background texture is its own class's.
struct SceneSpec {
  int num_classes = 10;
  int width = 64;
  int height = 64;
  double min_object_size = 0.25;  // fraction of each frame side
  double max_object_size = 0.75;
  double context_correlation = 0.9;
  std::uint64_t seed = 0;

  void validate() const;
  ImageFrame frame() const { return {width, height}; }
};

/// One single-object image with exact ground truth.
struct AnnotatedSample {
  std::int64_t index = 0;
  Raster image;
  ObjectMask mask;
  int class_id = 0;
  int background = 0;  // texture id
  BoundingBox box;
  ImageFrame frame;
};

enum class Split { Train, Validation };

/// Pure function of (spec, split, index). Pixel values are multiples of 1/255
/// so samples survive an 8-bit round trip bit-exactly.
AnnotatedSample generate_sample(const SceneSpec& spec, std::int64_t index, Split split = Split::Train);

std::vector<AnnotatedSample> generate_samples(const SceneSpec& spec, std::int64_t count, Split split);

/// Mean pixel over all images, rounded to the nearest multiple of 1/255.
float dataset_mean_pixel(const std::vector<AnnotatedSample>& samples);

/// Image with every mask pixel replaced by `mean_pixel`.
Raster remove_objects(const AnnotatedSample& sample, float mean_pixel);

struct Dataset {
  SceneSpec spec;
  std::vector<AnnotatedSample> samples;
  float mean_pixel = 0.0f;
};

Dataset generate_dataset(const SceneSpec& spec, std::int64_t n_train);

struct SamplerConfig {
  double context_fraction = 0.15;
  double min_crop_area = 0.08;  // fraction of frame area
  double max_crop_area = 1.0;
  int out_w = 32;
  int out_h = 32;
  std::uint64_t seed = 0;

  void validate() const;
};

/// One training input: the augmented image plus what labeling needs.
struct TrainingItem {
  Raster image;
  int class_id = 0;
  double objectness = 0.0;
  bool context = false;  // object removed; labeled uniformly
  std::int64_t sample_index = 0;
  AugmentTransform transform;
};

/// Random resized crop: area fraction uniform in [min_area, max_area],
/// aspect ratio uniform in [3/4, 4/3], uniform position, 50% horizontal flip.
/// Falls back to the full frame after 10 rejected draws.
AugmentTransform random_resized_crop(Rng& rng, const ImageFrame& frame, const SamplerConfig& cfg);

/// Deterministic stream of training items. Draw t belongs to epoch t / N and
/// visits samples in a per-epoch permutation; its crop and its context coin
/// come from independent streams keyed by t, so changing context_fraction
/// leaves every non-context draw unchanged.
///
/// Not thread-safe: the current epoch's permutation is cached.
class TrainingSampler {
 public:
  TrainingSampler(const Dataset& dataset, SamplerConfig cfg);

  TrainingItem draw(std::int64_t t) const;
  std::int64_t dataset_size() const { return static_cast<std::int64_t>(dataset_->samples.size()); }
  const SamplerConfig& config() const { return cfg_; }

 private:
  const std::vector<std::int64_t>& permutation(std::int64_t epoch) const;

  const Dataset* dataset_;
  SamplerConfig cfg_;
  mutable std::int64_t cached_epoch_ = -1;
  mutable std::vector<std::int64_t> perm_;
};

struct EvalItem {
  std::int64_t id = 0;
  Raster image;
  int class_id = 0;
  double objectness = 0.0;
};

struct EvalSets {
  std::vector<AnnotatedSample> samples;  // full-resolution validation samples
  std::vector<EvalItem> object;          // center crops with their objectness
  std::vector<EvalItem> context;         // same crops with the object removed
};

struct EvalCrop {
  double side_fraction = 0.875;
  int out_w = 32;
  int out_h = 32;
};

/// Center-cropped evaluation sets derived from given validation samples.
EvalSets make_eval_sets(std::vector<AnnotatedSample> samples, float mean_pixel, const EvalCrop& crop);

/// Validation samples come from their own seed stream, disjoint from training.
EvalSets build_eval_sets(const SceneSpec& spec, std::int64_t n_val, float mean_pixel, const EvalCrop& crop);

}  // namespace als
