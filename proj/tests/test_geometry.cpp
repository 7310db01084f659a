#include <doctest.h>

#include "als/error.hpp"
#include "als/geometry.hpp"
#include "als/rng.hpp"
#include "oracles.hpp"

using namespace als;

TEST_CASE("analytic objectness") {
  const ImageFrame f{100, 100};
  CHECK(objectness_analytic({0, 0, 100, 100}, f) == 1.0);
  CHECK(objectness_analytic({200, 200, 10, 10}, f) == 0.0);
  CHECK(objectness_analytic({10, 10, 40, 50}, f) == doctest::Approx(0.20).epsilon(1e-15));
  // clamped to the frame first
  CHECK(objectness_analytic({-20, 0, 40, 100}, f) == doctest::Approx(0.20).epsilon(1e-15));
}

TEST_CASE("pixel objectness") {
  ObjectMask ones(7, 3);
  std::fill(ones.bits.begin(), ones.bits.end(), 1);
  CHECK(objectness_pixels(ones) == 1.0);
  CHECK(objectness_pixels(ObjectMask(7, 3)) == 0.0);
  ObjectMask m(10, 10);
  for (int i = 0; i < 25; ++i) m.bits[static_cast<std::size_t>(i * 4)] = 1;
  CHECK(objectness_pixels(m) == 0.25);
  CHECK_THROWS_AS(objectness_pixels(ObjectMask(0, 5)), InvalidInput);
}

TEST_CASE("transformed objectness") {
  const ImageFrame f{100, 100};
  const BoundingBox box{0, 0, 50, 50};
  CHECK(transformed_objectness(box, f, {{10, 10, 20, 20}, 20, 20, false}) == 1.0);
  CHECK(transformed_objectness(box, f, {{60, 60, 20, 20}, 20, 20, false}) == 0.0);
  CHECK(transformed_objectness(box, f, {{25, 25, 50, 50}, 50, 50, false}) == 0.25);
  CHECK_THROWS_AS(transformed_objectness(box, f, {{150, 0, 20, 20}, 8, 8, false}), InvalidInput);
}

TEST_CASE("apply_transform on masks") {
  const ImageFrame f{8, 8};
  const ObjectMask m = mask_from_box({0, 0, 4, 4}, f);
  SUBCASE("identity") { CHECK(apply_transform(m, identity_transform(f)) == m); }
  SUBCASE("crop away from the object") {
    const ObjectMask out = apply_transform(m, {{4, 4, 4, 4}, 4, 4, false});
    CHECK(out.count() == 0);
  }
  SUBCASE("left half") {
    const ObjectMask out = apply_transform(m, {{0, 0, 4, 8}, 4, 8, false});
    CHECK(out.width == 4);
    CHECK(out.height == 8);
    CHECK(out.count() == 16);
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 4; ++x) CHECK(out.at(x, y) == (y < 4 ? 1 : 0));
  }
  SUBCASE("flip mirrors columns") {
    const ObjectMask out = apply_transform(m, {{0, 0, 8, 8}, 8, 8, true});
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) CHECK(out.at(x, y) == m.at(7 - x, y));
  }
  SUBCASE("upsampling by 2 replicates pixels") {
    const ObjectMask out = apply_transform(m, {{2, 2, 4, 4}, 8, 8, false});
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) CHECK(out.at(x, y) == m.at(2 + x / 2, 2 + y / 2));
  }
}

TEST_CASE("images and masks go through the same resampling") {
  Rng rng(7);
  const ImageFrame f{23, 17};
  Raster img(f.W, f.H);
  ObjectMask m(f.W, f.H);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    m.bits[i] = rng.bernoulli(0.5) ? 1 : 0;
    img.pixels[i] = m.bits[i] ? 1.0f : 0.0f;
  }
  for (int trial = 0; trial < 200; ++trial) {
    AugmentTransform t;
    t.crop = {static_cast<int>(rng.below(20)) - 3, static_cast<int>(rng.below(14)) - 3, 1 + static_cast<int>(rng.below(25)),
              1 + static_cast<int>(rng.below(20))};
    t.out_w = 1 + static_cast<int>(rng.below(40));
    t.out_h = 1 + static_cast<int>(rng.below(40));
    t.hflip = rng.bernoulli(0.5);
    const ObjectMask om = apply_transform(m, t);
    const Raster oi = apply_transform(img, t);
    for (std::size_t i = 0; i < om.bits.size(); ++i) REQUIRE(oi.pixels[i] == (om.bits[i] ? 1.0f : 0.0f));
  }
}

TEST_CASE("mask helpers") {
  const ImageFrame f{16, 12};
  const BoundingBox b{3, 2, 5, 7};
  const ObjectMask m = mask_from_box(b, f);
  CHECK(m.bits == oracle::box_pixels(b, f.W, f.H));
  REQUIRE(tight_box(m).has_value());
  CHECK(*tight_box(m) == b);
  CHECK_FALSE(tight_box(ObjectMask(4, 4)).has_value());
  const ObjectMask u = mask_union(m, mask_from_box({10, 0, 3, 3}, f));
  CHECK(u.count() == 35 + 9);
  const ObjectMask clipped = mask_from_box({-2, -2, 5, 5}, f);
  CHECK(*tight_box(clipped) == BoundingBox{0, 0, 3, 3});
}

TEST_CASE("center crop") {
  const AugmentTransform t = center_crop_transform({64, 64}, 0.875, 32, 32);
  CHECK(t.crop == BoundingBox{4, 4, 56, 56});
  CHECK(t.out_w == 32);
  CHECK_THROWS_AS(center_crop_transform({64, 64}, 0.0, 32, 32), InvalidInput);
}

TEST_CASE("property: pixel count equals analytic ratio at grid-aligned scale") {
  Rng rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const ImageFrame f{8 + static_cast<int>(rng.below(57)), 8 + static_cast<int>(rng.below(57))};
    const BoundingBox box{static_cast<int>(rng.below(static_cast<std::uint64_t>(f.W))) - 4,
                          static_cast<int>(rng.below(static_cast<std::uint64_t>(f.H))) - 4,
                          1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(f.W))),
                          1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(f.H)))};
    const int cx = static_cast<int>(rng.below(static_cast<std::uint64_t>(f.W)));
    const int cy = static_cast<int>(rng.below(static_cast<std::uint64_t>(f.H)));
    const BoundingBox crop{cx, cy, 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(f.W - cx))),
                           1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(f.H - cy)))};
    const AugmentTransform t{crop, crop.w, crop.h, rng.bernoulli(0.5)};
    const double analytic = transformed_objectness(box, f, t);
    const double pixels = objectness_pixels(apply_transform(mask_from_box(box, f), t));
    REQUIRE(analytic == pixels);
    REQUIRE(analytic == oracle::crop_coverage(box, crop, f.W, f.H));
  }
}

TEST_CASE("property: resampling error bounded by 2 / min output side") {
  Rng rng(2);
  for (int trial = 0; trial < 1000; ++trial) {
    const ImageFrame f{64, 64};
    const BoundingBox box{static_cast<int>(rng.below(60)), static_cast<int>(rng.below(60)), 1 + static_cast<int>(rng.below(48)),
                          1 + static_cast<int>(rng.below(48))};
    const int cw = 4 + static_cast<int>(rng.below(61)), ch = 4 + static_cast<int>(rng.below(61));
    const BoundingBox crop{static_cast<int>(rng.below(static_cast<std::uint64_t>(65 - cw))),
                           static_cast<int>(rng.below(static_cast<std::uint64_t>(65 - ch))), cw, ch};
    const int ow = 4 + static_cast<int>(rng.below(61)), oh = 4 + static_cast<int>(rng.below(61));
    const AugmentTransform t{crop, ow, oh, rng.bernoulli(0.5)};
    const double analytic = transformed_objectness(box, f, t);
    const double pixels = objectness_pixels(apply_transform(mask_from_box(box, f), t));
    REQUIRE(std::abs(analytic - pixels) <= 2.0 / std::min(ow, oh) + 1e-12);
    // analytic value ignores output size
    REQUIRE(transformed_objectness(box, f, {crop, crop.w, crop.h, false}) == analytic);
  }
}

TEST_CASE("property: flips never change objectness") {
  Rng rng(3);
  const ImageFrame f{40, 30};
  for (int trial = 0; trial < 300; ++trial) {
    const BoundingBox box{static_cast<int>(rng.below(30)), static_cast<int>(rng.below(20)), 1 + static_cast<int>(rng.below(20)),
                          1 + static_cast<int>(rng.below(20))};
    const BoundingBox crop{static_cast<int>(rng.below(20)), static_cast<int>(rng.below(15)), 1 + static_cast<int>(rng.below(20)),
                           1 + static_cast<int>(rng.below(15))};
    const int ow = 1 + static_cast<int>(rng.below(33)), oh = 1 + static_cast<int>(rng.below(33));
    const ObjectMask m = mask_from_box(box, f);
    REQUIRE(objectness_pixels(apply_transform(m, {crop, ow, oh, false})) ==
            objectness_pixels(apply_transform(m, {crop, ow, oh, true})));
    REQUIRE(transformed_objectness(box, f, {crop, ow, oh, false}) == transformed_objectness(box, f, {crop, ow, oh, true}));
  }
}

TEST_CASE("property: growing the crop around a contained object never raises objectness") {
  Rng rng(4);
  const ImageFrame f{64, 64};
  for (int trial = 0; trial < 300; ++trial) {
    const BoundingBox box{20 + static_cast<int>(rng.below(10)), 20 + static_cast<int>(rng.below(10)),
                          1 + static_cast<int>(rng.below(14)), 1 + static_cast<int>(rng.below(14))};
    BoundingBox crop{box.x - static_cast<int>(rng.below(3)), box.y - static_cast<int>(rng.below(3)),
                     box.w + 3, box.h + 3};
    double prev = transformed_objectness(box, f, {crop, 8, 8, false});
    for (int grow = 0; grow < 10; ++grow) {
      crop.x -= static_cast<int>(rng.below(3));
      crop.y -= static_cast<int>(rng.below(3));
      crop.w += 3 + static_cast<int>(rng.below(3));
      crop.h += 3 + static_cast<int>(rng.below(3));
      const BoundingBox clamped = clamp_to_frame(crop, f);
      const double now = transformed_objectness(box, f, {clamped, 8, 8, false});
      REQUIRE(now <= prev);
      prev = now;
    }
  }
}
