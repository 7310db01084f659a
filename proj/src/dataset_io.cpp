#include "als/dataset_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "als/error.hpp"

namespace als {

using nlohmann::json;
using nlohmann::ordered_json;

namespace fs = std::filesystem;

void write_file_atomic(const fs::path& path, const std::string& contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + tmp.string());
    f.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!f) throw IoError("cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
}

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

namespace {

std::string pgm_bytes(int w, int h, const std::vector<std::uint8_t>& levels) {
  std::string out = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  out.append(levels.begin(), levels.end());
  return out;
}

struct Pgm {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> levels;
};

Pgm parse_pgm(const std::string& data, const fs::path& path) {
  std::size_t pos = 0;
  auto fail = [&](const std::string& why) { return IoError("bad PGM " + path.string() + ": " + why); };
  auto token = [&]() {
    while (pos < data.size()) {
      if (data[pos] == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(data[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
    if (start == pos) throw fail("truncated header");
    return data.substr(start, pos - start);
  };
  if (token() != "P5") throw fail("not a binary graymap");
  Pgm p;
  try {
    p.width = std::stoi(token());
    p.height = std::stoi(token());
    if (std::stoi(token()) != 255) throw fail("only 8-bit maxval 255 is supported");
  } catch (const std::logic_error&) {
    throw fail("malformed header");
  }
  if (p.width <= 0 || p.height <= 0) throw fail("non-positive size");
  ++pos;  // single whitespace before the raster
  const std::size_t n = static_cast<std::size_t>(p.width) * p.height;
  if (data.size() < pos + n) throw fail("truncated raster");
  p.levels.assign(data.begin() + static_cast<std::ptrdiff_t>(pos),
                  data.begin() + static_cast<std::ptrdiff_t>(pos + n));
  return p;
}

std::string sample_name(std::int64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06lld.pgm", static_cast<long long>(index));
  return buf;
}

void write_split(const fs::path& dir, const std::vector<AnnotatedSample>& samples) {
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "masks");
  std::string lines;
  for (const auto& s : samples) {
    const std::string name = sample_name(s.index);
    write_pgm(dir / "images" / name, s.image);
    write_mask_pgm(dir / "masks" / name, s.mask);
    AnnotationRecord rec;
    rec.id = s.index;
    rec.image = "images/" + name;
    rec.mask = "masks/" + name;
    rec.class_id = s.class_id;
    rec.background = s.background;
    rec.box = s.box;
    rec.frame = s.frame;
    lines += annotation_line(rec);
    lines += '\n';
  }
  write_file_atomic(dir / "annotations.jsonl", lines);
}

std::vector<AnnotatedSample> read_split(const fs::path& dir) {
  std::vector<AnnotatedSample> out;
  for (const auto& rec : read_annotations(dir / "annotations.jsonl")) {
    AnnotatedSample s;
    s.index = rec.id;
    s.image = read_pgm(dir / rec.image);
    s.class_id = rec.class_id;
    s.background = rec.background.value_or(rec.class_id);
    s.box = rec.box;
    s.frame = rec.frame;
    s.mask = rec.mask ? read_mask_pgm(dir / *rec.mask) : mask_from_box(rec.box, rec.frame);
    if (s.image.width != s.frame.W || s.image.height != s.frame.H)
      throw IoError("image size disagrees with its annotation frame: " + (dir / rec.image).string());
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

void write_pgm(const fs::path& path, const Raster& image) {
  std::vector<std::uint8_t> levels(image.pixels.size());
  for (std::size_t i = 0; i < levels.size(); ++i)
    levels[i] = static_cast<std::uint8_t>(level_from_pixel(image.pixels[i]));
  write_file_atomic(path, pgm_bytes(image.width, image.height, levels));
}

Raster read_pgm(const fs::path& path) {
  const Pgm p = parse_pgm(read_file(path), path);
  Raster r(p.width, p.height);
  for (std::size_t i = 0; i < r.pixels.size(); ++i) r.pixels[i] = pixel_from_level(p.levels[i]);
  return r;
}

void write_mask_pgm(const fs::path& path, const ObjectMask& mask) {
  std::vector<std::uint8_t> levels(mask.bits.size());
  for (std::size_t i = 0; i < levels.size(); ++i) levels[i] = mask.bits[i] ? 255 : 0;
  write_file_atomic(path, pgm_bytes(mask.width, mask.height, levels));
}

ObjectMask read_mask_pgm(const fs::path& path) {
  const Pgm p = parse_pgm(read_file(path), path);
  ObjectMask m(p.width, p.height);
  for (std::size_t i = 0; i < m.bits.size(); ++i) m.bits[i] = p.levels[i] >= 128 ? 1 : 0;
  return m;
}

std::string annotation_line(const AnnotationRecord& rec) {
  ordered_json j;
  j["id"] = rec.id;
  j["image"] = rec.image;
  if (rec.mask) j["mask"] = *rec.mask;
  j["class"] = rec.class_id;
  if (rec.background) j["background"] = *rec.background;
  j["box"] = {rec.box.x, rec.box.y, rec.box.w, rec.box.h};
  j["frame"] = {rec.frame.W, rec.frame.H};
  if (rec.transform) {
    const AugmentTransform& t = *rec.transform;
    j["transform"] = {{"crop", {t.crop.x, t.crop.y, t.crop.w, t.crop.h}},
                      {"output_size", {t.out_w, t.out_h}},
                      {"hflip", t.hflip}};
  }
  return j.dump();
}

namespace {

std::vector<int> int_array(const json& j, const char* key, std::size_t n) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_array() || it->size() != n)
    throw InvalidInput(std::string("'") + key + "' must be an array of " + std::to_string(n) + " integers");
  std::vector<int> out;
  for (const auto& v : *it) {
    if (!v.is_number_integer()) throw InvalidInput(std::string("'") + key + "' must hold integers");
    out.push_back(v.get<int>());
  }
  return out;
}

}  // namespace

AugmentTransform transform_from_json(const json& j) {
  if (!j.is_object()) throw InvalidInput("transform must be an object");
  for (const auto& [key, _] : j.items())
    if (key != "crop" && key != "output_size" && key != "hflip")
      throw InvalidInput("unknown transform key '" + key + "'");
  const auto crop = int_array(j, "crop", 4);
  AugmentTransform t;
  t.crop = {crop[0], crop[1], crop[2], crop[3]};
  if (j.contains("output_size")) {
    const auto out = int_array(j, "output_size", 2);
    t.out_w = out[0];
    t.out_h = out[1];
  } else {
    t.out_w = t.crop.w;
    t.out_h = t.crop.h;
  }
  if (j.contains("hflip")) {
    if (!j["hflip"].is_boolean()) throw InvalidInput("'hflip' must be a boolean");
    t.hflip = j["hflip"].get<bool>();
  }
  return t;
}

AnnotationRecord parse_annotation(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string("malformed annotation: ") + e.what());
  }
  if (!j.is_object()) throw InvalidInput("annotation must be a JSON object");
  AnnotationRecord rec;
  try {
    rec.image = j.at("image").get<std::string>();
    rec.class_id = j.at("class").get<int>();
    if (j.contains("id")) rec.id = j["id"].get<std::int64_t>();
    if (j.contains("mask")) rec.mask = j["mask"].get<std::string>();
    if (j.contains("background")) rec.background = j["background"].get<int>();
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed annotation: ") + e.what());
  }
  const auto box = int_array(j, "box", 4);
  const auto frame = int_array(j, "frame", 2);
  rec.box = {box[0], box[1], box[2], box[3]};
  rec.frame = {frame[0], frame[1]};
  if (rec.box.w <= 0 || rec.box.h <= 0) throw InvalidInput("annotation box must have positive size");
  if (rec.frame.W <= 0 || rec.frame.H <= 0) throw InvalidInput("annotation frame must have positive size");
  if (j.contains("transform")) rec.transform = transform_from_json(j["transform"]);
  return rec;
}

std::vector<AnnotationRecord> read_annotations(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open annotations: " + path.string());
  std::vector<AnnotationRecord> out;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      AnnotationRecord rec = parse_annotation(line);
      if (!json::parse(line).contains("id")) rec.id = static_cast<std::int64_t>(out.size());
      out.push_back(std::move(rec));
    } catch (const InvalidInput& e) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_dataset(const fs::path& dir, const ExperimentConfig& config, const Dataset& train,
                   const std::vector<AnnotatedSample>& val) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create dataset directory " + dir.string() + ": " + ec.message());
  write_split(dir / "train", train.samples);
  write_split(dir / "val", val);
  ordered_json manifest;
  manifest["format"] = "als-dataset";
  manifest["version"] = 1;
  manifest["config"] = to_json(config);
  manifest["mean_pixel"] = train.mean_pixel;
  manifest["mean_pixel_level"] = level_from_pixel(train.mean_pixel);
  manifest["n_train"] = train.samples.size();
  manifest["n_val"] = val.size();
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

DatasetOnDisk load_dataset(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  json manifest;
  try {
    manifest = json::parse(read_file(manifest_path));
  } catch (const json::parse_error& e) {
    throw IoError("cannot parse " + manifest_path.string() + ": " + e.what());
  }
  if (manifest.value("format", "") != "als-dataset" || manifest.value("version", 0) != 1)
    throw IoError("not an als dataset manifest: " + manifest_path.string());
  DatasetOnDisk d;
  d.config = config_from_json(manifest.at("config"));
  d.train.spec = d.config.scene;
  d.train.samples = read_split(dir / "train");
  d.train.mean_pixel = pixel_from_level(manifest.at("mean_pixel_level").get<int>());
  d.val = read_split(dir / "val");
  if (d.train.samples.empty()) throw IoError("dataset has no training samples: " + dir.string());
  return d;
}

}  // namespace als
