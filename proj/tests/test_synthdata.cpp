#include <doctest.h>

#include <cmath>

#include "als/error.hpp"
#include "als/synthdata.hpp"

using namespace als;

namespace {

Dataset small_dataset(std::int64_t n = 200, std::uint64_t seed = 0) {
  SceneSpec spec;
  spec.seed = seed;
  return generate_dataset(spec, n);
}

}  // namespace

TEST_CASE("samples are a pure function of seed and index") {
  SceneSpec spec;
  spec.seed = 42;
  const AnnotatedSample a = generate_sample(spec, 17), b = generate_sample(spec, 17);
  CHECK(a.image == b.image);
  CHECK(a.mask == b.mask);
  CHECK(a.box == b.box);
  CHECK(a.class_id == b.class_id);
  CHECK_FALSE(generate_sample(spec, 18).image == a.image);
  CHECK_FALSE(generate_sample(spec, 17, Split::Validation).image == a.image);
  spec.seed = 43;
  CHECK_FALSE(generate_sample(spec, 17).image == a.image);
}

TEST_CASE("sample ground truth") {
  SceneSpec spec;
  for (std::int64_t i = 0; i < 200; ++i) {
    const AnnotatedSample s = generate_sample(spec, i);
    REQUIRE(s.box.w == s.box.h);  // square frame, one size fraction per side
    const double side = static_cast<double>(s.box.w) / spec.width;
    REQUIRE(objectness_analytic(s.box, s.frame) == doctest::Approx(side * side).epsilon(1e-15));
    REQUIRE(side >= spec.min_object_size - 1.0 / spec.width);
    REQUIRE(side <= spec.max_object_size + 1.0 / spec.width);
    REQUIRE(*tight_box(s.mask) == s.box);
    REQUIRE(objectness_pixels(s.mask) == objectness_analytic(s.box, s.frame));
    REQUIRE(transformed_objectness(s.box, s.frame, {s.box, 32, 32, false}) == 1.0);
    for (float p : s.image.pixels) REQUIRE(p == pixel_from_level(level_from_pixel(p)));
  }
}

TEST_CASE("context correlation") {
  SceneSpec spec;
  spec.context_correlation = 1.0;
  for (std::int64_t i = 0; i < 100; ++i) {
    const AnnotatedSample s = generate_sample(spec, i);
    REQUIRE(s.background == s.class_id);
  }
  spec.context_correlation = 0.9;
  int same = 0;
  const int n = 4000;
  for (std::int64_t i = 0; i < n; ++i) {
    const AnnotatedSample s = generate_sample(spec, i);
    same += s.background == s.class_id;
  }
  // P(same) = 0.9 + 0.1 / K = 0.91; sd over 4000 draws ~ 0.0045
  CHECK(std::abs(same / static_cast<double>(n) - 0.91) < 0.02);
}

TEST_CASE("removing objects") {
  const Dataset d = small_dataset(50);
  SUBCASE("no mask leaves the image alone") {
    AnnotatedSample s = d.samples[0];
    s.mask = ObjectMask(s.frame.W, s.frame.H);
    CHECK(remove_objects(s, d.mean_pixel) == s.image);
  }
  SUBCASE("full mask gives a constant image") {
    AnnotatedSample s = d.samples[1];
    s.mask = mask_from_box(s.frame.as_box(), s.frame);
    for (float p : remove_objects(s, d.mean_pixel).pixels) CHECK(p == d.mean_pixel);
  }
  SUBCASE("object pixels become the mean, nothing else changes") {
    for (const auto& s : d.samples) {
      const Raster r = remove_objects(s, d.mean_pixel);
      for (std::size_t i = 0; i < r.pixels.size(); ++i) {
        if (s.mask.bits[i]) {
          REQUIRE(r.pixels[i] == d.mean_pixel);
        } else {
          REQUIRE(r.pixels[i] == s.image.pixels[i]);
        }
      }
    }
  }
}

TEST_CASE("dataset mean pixel") {
  const Dataset d = small_dataset(30);
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& s : d.samples)
    for (float p : s.image.pixels) {
      total += p;
      ++n;
    }
  CHECK(std::abs(d.mean_pixel - total / static_cast<double>(n)) <= 0.5 / 255.0 + 1e-6);
  CHECK(d.mean_pixel == pixel_from_level(level_from_pixel(d.mean_pixel)));
}

TEST_CASE("property: class balance within 3 sigma") {
  SceneSpec spec;
  const int n = 5000;
  std::vector<int> counts(static_cast<std::size_t>(spec.num_classes), 0);
  for (std::int64_t i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(generate_sample(spec, i).class_id)];
  const double p = 1.0 / spec.num_classes;
  const double sigma = std::sqrt(n * p * (1 - p));
  for (int c : counts) CHECK(std::abs(c - n * p) <= 3 * sigma);
}

TEST_CASE("random resized crop") {
  Rng rng(3);
  SamplerConfig cfg;
  const ImageFrame f{64, 64};
  for (int i = 0; i < 2000; ++i) {
    const AugmentTransform t = random_resized_crop(rng, f, cfg);
    REQUIRE(t.crop.x >= 0);
    REQUIRE(t.crop.y >= 0);
    REQUIRE(t.crop.right() <= 64);
    REQUIRE(t.crop.bottom() <= 64);
    REQUIRE(t.crop.area() >= 1);
    REQUIRE(t.out_w == 32);
    REQUIRE(t.out_h == 32);
  }
  // an impossible aspect range for a 1-pixel-high frame falls back to the frame
  cfg.min_crop_area = 0.9;
  const AugmentTransform t = random_resized_crop(rng, {200, 1}, cfg);
  CHECK(t.crop == BoundingBox{0, 0, 200, 1});
}

TEST_CASE("training sampler") {
  const Dataset d = small_dataset(100);
  SamplerConfig cfg;
  cfg.seed = 9;

  SUBCASE("draws are deterministic and random-access") {
    const TrainingSampler a(d, cfg), b(d, cfg);
    for (std::int64_t t : {0, 5, 250, 99, 100, 1}) {
      const TrainingItem x = a.draw(t), y = b.draw(t);
      REQUIRE(x.image == y.image);
      REQUIRE(x.objectness == y.objectness);
      REQUIRE(x.context == y.context);
    }
  }
  SUBCASE("each epoch visits every sample once") {
    const TrainingSampler s(d, cfg);
    for (std::int64_t epoch : {0, 3}) {
      std::vector<int> seen(100, 0);
      for (std::int64_t j = 0; j < 100; ++j) ++seen[static_cast<std::size_t>(s.draw(epoch * 100 + j).sample_index)];
      for (int v : seen) REQUIRE(v == 1);
    }
  }
  SUBCASE("context fraction zero never emits context items") {
    cfg.context_fraction = 0.0;
    const TrainingSampler s(d, cfg);
    for (std::int64_t t = 0; t < 10000; ++t) REQUIRE_FALSE(s.draw(t).context);
  }
  SUBCASE("context draws leave the non-context stream untouched") {
    SamplerConfig none = cfg;
    none.context_fraction = 0.0;
    const TrainingSampler with(d, cfg), without(d, none);
    int context = 0;
    for (std::int64_t t = 0; t < 500; ++t) {
      const TrainingItem a = with.draw(t), b = without.draw(t);
      REQUIRE(a.sample_index == b.sample_index);
      REQUIRE(a.transform == b.transform);
      if (a.context) {
        ++context;
        REQUIRE(a.objectness == 0.0);
        const AnnotatedSample& s = d.samples[static_cast<std::size_t>(a.sample_index)];
        REQUIRE(a.image == apply_transform(remove_objects(s, d.mean_pixel), a.transform));
      } else {
        REQUIRE(a.image == b.image);
      }
    }
    CHECK(context > 0);
  }
  SUBCASE("objectness agrees with the transformed mask") {
    const TrainingSampler s(d, cfg);
    for (std::int64_t t = 0; t < 2000; ++t) {
      const TrainingItem it = s.draw(t);
      if (it.context) continue;
      const AnnotatedSample& src = d.samples[static_cast<std::size_t>(it.sample_index)];
      const double pixels = objectness_pixels(apply_transform(src.mask, it.transform));
      REQUIRE(std::abs(it.objectness - pixels) <= 2.0 / std::min(it.transform.out_w, it.transform.out_h) + 1e-12);
    }
  }
}

TEST_CASE("property: context rate over 1e5 draws") {
  const Dataset d = small_dataset(64);
  SamplerConfig cfg;
  const TrainingSampler s(d, cfg);
  std::int64_t hits = 0;
  const std::int64_t n = 100000;
  for (std::int64_t t = 0; t < n; ++t) hits += s.draw(t).context ? 1 : 0;
  CHECK(std::abs(static_cast<double>(hits) / n - 0.15) <= 0.005);
}

TEST_CASE("evaluation sets") {
  SceneSpec spec;
  const Dataset d = small_dataset(20);
  const EvalSets ev = build_eval_sets(spec, 40, d.mean_pixel, {});
  REQUIRE(ev.object.size() == 40);
  REQUIRE(ev.context.size() == 40);
  for (std::size_t i = 0; i < 40; ++i) {
    const AnnotatedSample& s = ev.samples[i];
    CHECK(ev.context[i].objectness == 0.0);
    CHECK(ev.object[i].class_id == ev.context[i].class_id);
    CHECK(ev.object[i].objectness > 0.0);
    const AugmentTransform t = center_crop_transform(s.frame, 0.875, 32, 32);
    CHECK(ev.object[i].objectness == transformed_objectness(s.box, s.frame, t));
    // the pair differs only where the transformed mask is set
    const ObjectMask m = apply_transform(s.mask, t);
    for (std::size_t p = 0; p < m.bits.size(); ++p)
      if (!m.bits[p]) REQUIRE(ev.object[i].image.pixels[p] == ev.context[i].image.pixels[p]);
  }
  // validation samples are not training samples
  CHECK_FALSE(ev.samples[0].image == generate_sample(spec, 0).image);
  CHECK_THROWS_AS(build_eval_sets(spec, 0, d.mean_pixel, {}), InvalidInput);
}

TEST_CASE("validation of settings") {
  SceneSpec bad;
  bad.num_classes = 1;
  CHECK_THROWS_AS(generate_sample(bad, 0), InvalidInput);
  bad = SceneSpec{};
  bad.context_correlation = 1.5;
  CHECK_THROWS_AS(generate_sample(bad, 0), InvalidInput);
  SamplerConfig cfg;
  cfg.context_fraction = 1.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
  cfg = SamplerConfig{};
  cfg.min_crop_area = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidInput);
}
