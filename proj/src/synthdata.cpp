#include "als/synthdata.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "als/error.hpp"

namespace als {

namespace {

constexpr double kTwoPi = 6.283185307179586;
constexpr int kMaxSizeRetries = 16;
constexpr int kMaxCropAttempts = 10;

float quantize(double v) {
  const double c = std::clamp(v, 0.0, 1.0);
  return pixel_from_level(static_cast<int>(std::lround(c * 255.0)));
}

double frac(double v) { return v - std::floor(v); }

// Smooth, low-contrast texture. Parameters are spread over texture ids with
// low-discrepancy sequences so neighbouring ids look different.
struct Texture {
  double base;
  double cos_a;
  double sin_a;
  double cycles;
};

Texture texture(int id) {
  const double t = static_cast<double>(id);
  const double angle = 3.141592653589793 * frac(0.381966 * t + 0.1);
  return {0.3 + 0.4 * frac(0.618034 * t + 0.05), std::cos(angle), std::sin(angle),
          1.0 + 3.0 * frac(0.754878 * t + 0.3)};
}

struct Palette {
  double on;
  double off;
};

constexpr std::array<Palette, 4> kPalettes{{{1.0, 0.0}, {0.0, 0.6}, {0.75, 0.15}, {0.2, 0.9}}};

// High-contrast glyph for class c: one of five stripe layouts, a palette,
// and (beyond 20 classes) a finer stripe count.
bool glyph_on(int cls, int lx, int ly, int w, int h) {
  const int layout = cls % 5;
  const long long stripes = 4 + 2 * (cls / 20);
  const long long u = lx * stripes / w;
  const long long v = ly * stripes / h;
  const long long wh = static_cast<long long>(w) * h;
  switch (layout) {
    case 0:
      return v % 2 == 0;
    case 1:
      return u % 2 == 0;
    case 2:
      return (u + v) % 2 == 0;
    case 3:
      return ((static_cast<long long>(lx) * h + static_cast<long long>(ly) * w) * stripes / wh) % 2 == 0;
    default:
      return ((static_cast<long long>(lx) * h + static_cast<long long>(h - 1 - ly) * w) * stripes / wh) % 2 ==
             0;
  }
}

std::uint64_t split_salt(Split split) {
  return split == Split::Train ? salt::kTrainSamples : salt::kValSamples;
}

}  // namespace

void SceneSpec::validate() const {
  if (num_classes < 2) throw InvalidInput("scene needs at least 2 classes");
  if (width <= 0 || height <= 0) throw InvalidInput("scene frame must be positive");
  if (!(min_object_size > 0.0 && min_object_size <= max_object_size && max_object_size <= 1.0))
    throw InvalidInput("object size fractions must satisfy 0 < min <= max <= 1");
  if (!(context_correlation >= 0.0 && context_correlation <= 1.0))
    throw InvalidInput("context correlation must lie in [0, 1]");
}

AnnotatedSample generate_sample(const SceneSpec& spec, std::int64_t index, Split split) {
  spec.validate();
  Rng rng(derive_seed({spec.seed, split_salt(split), static_cast<std::uint64_t>(index)}));

  AnnotatedSample s;
  s.index = index;
  s.frame = spec.frame();
  s.class_id = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.num_classes)));
  s.background = rng.bernoulli(spec.context_correlation)
                     ? s.class_id
                     : static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.num_classes)));

  int w = 0;
  int h = 0;
  for (int attempt = 0;; ++attempt) {
    if (attempt == kMaxSizeRetries)
      throw InvalidInput("object cannot fit the frame at the configured size range");
    const double size = rng.uniform(spec.min_object_size, spec.max_object_size);
    w = static_cast<int>(std::lround(size * spec.width));
    h = static_cast<int>(std::lround(size * spec.height));
    if (w >= 1 && h >= 1 && w <= spec.width && h <= spec.height) break;
  }
  s.box = {static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.width - w + 1))),
           static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.height - h + 1))), w, h};
  s.mask = mask_from_box(s.box, s.frame);

  const Texture tex = texture(s.background);
  const double phase = rng.uniform(0.0, kTwoPi);
  const Palette pal = kPalettes[static_cast<std::size_t>((s.class_id / 5) % kPalettes.size())];
  s.image = Raster(spec.width, spec.height);
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      const double noise = rng.uniform(-0.04, 0.04);
      double v;
      if (s.mask.at(x, y)) {
        v = glyph_on(s.class_id, x - s.box.x, y - s.box.y, w, h) ? pal.on : pal.off;
      } else {
        const double proj = (tex.cos_a * x + tex.sin_a * y) / spec.width;
        v = tex.base + 0.12 * std::sin(kTwoPi * tex.cycles * proj + phase);
      }
      s.image.at(x, y) = quantize(v + noise);
    }
  }
  return s;
}

std::vector<AnnotatedSample> generate_samples(const SceneSpec& spec, std::int64_t count, Split split) {
  if (count < 0) throw InvalidInput("sample count must be non-negative");
  std::vector<AnnotatedSample> out;
  out.reserve(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) out.push_back(generate_sample(spec, i, split));
  return out;
}

float dataset_mean_pixel(const std::vector<AnnotatedSample>& samples) {
  if (samples.empty()) throw InvalidInput("mean pixel of an empty dataset");
  // Pixels are k/255, so summing the integer levels is exact.
  std::int64_t levels = 0;
  std::int64_t n = 0;
  for (const auto& s : samples) {
    for (float p : s.image.pixels) levels += level_from_pixel(p);
    n += static_cast<std::int64_t>(s.image.pixels.size());
  }
  return quantize(static_cast<double>(levels) / (255.0 * static_cast<double>(n)));
}

Raster remove_objects(const AnnotatedSample& sample, float mean_pixel) {
  Raster out = sample.image;
  for (std::size_t i = 0; i < out.pixels.size(); ++i)
    if (sample.mask.bits[i]) out.pixels[i] = mean_pixel;
  return out;
}

Dataset generate_dataset(const SceneSpec& spec, std::int64_t n_train) {
  if (n_train < 1) throw InvalidInput("training split must hold at least one sample");
  Dataset d;
  d.spec = spec;
  d.samples = generate_samples(spec, n_train, Split::Train);
  d.mean_pixel = dataset_mean_pixel(d.samples);
  return d;
}

void SamplerConfig::validate() const {
  if (!(context_fraction >= 0.0 && context_fraction < 1.0))
    throw InvalidInput("context fraction must lie in [0, 1)");
  if (!(min_crop_area > 0.0 && min_crop_area <= max_crop_area && max_crop_area <= 1.0))
    throw InvalidInput("crop area range must satisfy 0 < min <= max <= 1");
  if (out_w <= 0 || out_h <= 0) throw InvalidInput("sampler output size must be positive");
}

AugmentTransform random_resized_crop(Rng& rng, const ImageFrame& frame, const SamplerConfig& cfg) {
  const double area = static_cast<double>(frame.area());
  AugmentTransform t{frame.as_box(), cfg.out_w, cfg.out_h, false};
  for (int attempt = 0; attempt < kMaxCropAttempts; ++attempt) {
    const double target = area * rng.uniform(cfg.min_crop_area, cfg.max_crop_area);
    const double aspect = rng.uniform(3.0 / 4.0, 4.0 / 3.0);
    const int w = static_cast<int>(std::lround(std::sqrt(target * aspect)));
    const int h = static_cast<int>(std::lround(std::sqrt(target / aspect)));
    if (w < 1 || h < 1 || w > frame.W || h > frame.H) continue;
    t.crop = {static_cast<int>(rng.below(static_cast<std::uint64_t>(frame.W - w + 1))),
              static_cast<int>(rng.below(static_cast<std::uint64_t>(frame.H - h + 1))), w, h};
    break;
  }
  t.hflip = rng.bernoulli(0.5);
  return t;
}

TrainingSampler::TrainingSampler(const Dataset& dataset, SamplerConfig cfg)
    : dataset_(&dataset), cfg_(cfg) {
  cfg_.validate();
  if (dataset.samples.empty()) throw InvalidInput("training sampler needs a non-empty dataset");
}

const std::vector<std::int64_t>& TrainingSampler::permutation(std::int64_t epoch) const {
  if (epoch == cached_epoch_) return perm_;
  const auto n = static_cast<std::size_t>(dataset_size());
  perm_.resize(n);
  for (std::size_t i = 0; i < n; ++i) perm_[i] = static_cast<std::int64_t>(i);
  Rng rng(derive_seed({cfg_.seed, salt::kSamplerEpoch, static_cast<std::uint64_t>(epoch)}));
  for (std::size_t i = n; i > 1; --i) std::swap(perm_[i - 1], perm_[rng.below(i)]);
  cached_epoch_ = epoch;
  return perm_;
}

TrainingItem TrainingSampler::draw(std::int64_t t) const {
  const std::int64_t n = dataset_size();
  const std::int64_t idx = permutation(t / n)[static_cast<std::size_t>(t % n)];
  const AnnotatedSample& s = dataset_->samples[static_cast<std::size_t>(idx)];

  Rng crop_rng(derive_seed({cfg_.seed, salt::kSamplerStep, static_cast<std::uint64_t>(t)}));
  Rng coin(derive_seed({cfg_.seed, salt::kContextDraw, static_cast<std::uint64_t>(t)}));

  TrainingItem item;
  item.sample_index = idx;
  item.class_id = s.class_id;
  item.transform = random_resized_crop(crop_rng, s.frame, cfg_);
  item.context = coin.bernoulli(cfg_.context_fraction);
  if (item.context) {
    item.image = apply_transform(remove_objects(s, dataset_->mean_pixel), item.transform);
    item.objectness = 0.0;
  } else {
    item.image = apply_transform(s.image, item.transform);
    item.objectness = transformed_objectness(s.box, s.frame, item.transform);
  }
  return item;
}

EvalSets make_eval_sets(std::vector<AnnotatedSample> samples, float mean_pixel, const EvalCrop& crop) {
  EvalSets sets;
  sets.object.reserve(samples.size());
  sets.context.reserve(samples.size());
  for (const auto& s : samples) {
    const AugmentTransform t = center_crop_transform(s.frame, crop.side_fraction, crop.out_w, crop.out_h);
    sets.object.push_back({s.index, apply_transform(s.image, t), s.class_id,
                           transformed_objectness(s.box, s.frame, t)});
    sets.context.push_back({s.index, apply_transform(remove_objects(s, mean_pixel), t), s.class_id, 0.0});
  }
  sets.samples = std::move(samples);
  return sets;
}

EvalSets build_eval_sets(const SceneSpec& spec, std::int64_t n_val, float mean_pixel, const EvalCrop& crop) {
  if (n_val < 1) throw InvalidInput("validation split must hold at least one sample");
  return make_eval_sets(generate_samples(spec, n_val, Split::Validation), mean_pixel, crop);
}

}  // namespace als
