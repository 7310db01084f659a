#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace als {

/// Axis-aligned pixel box; (x, y) is the top-left corner.
struct BoundingBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  std::int64_t area() const { return static_cast<std::int64_t>(w) * h; }
  bool empty() const { return w <= 0 || h <= 0; }
  int right() const { return x + w; }
  int bottom() const { return y + h; }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct ImageFrame {
  int W = 0;
  int H = 0;

  std::int64_t area() const { return static_cast<std::int64_t>(W) * H; }
  BoundingBox as_box() const { return {0, 0, W, H}; }

  friend bool operator==(const ImageFrame&, const ImageFrame&) = default;
};

/// Row-major binary raster, 1 = object pixel.
struct ObjectMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  ObjectMask() = default;
  ObjectMask(int w, int h);

  std::uint8_t at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return bits[static_cast<std::size_t>(y) * width + x]; }
  std::int64_t count() const;

  friend bool operator==(const ObjectMask&, const ObjectMask&) = default;
};

/// 8-bit level <-> pixel value. Generated images only hold these values, so
/// they survive a PGM round trip bit-exactly.
inline float pixel_from_level(int level) { return static_cast<float>(level / 255.0); }
inline int level_from_pixel(float v) {
  const float c = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
  return static_cast<int>(c * 255.0f + 0.5f);
}

/// Row-major single-channel image with values in [0, 1].
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<float> pixels;

  Raster() = default;
  Raster(int w, int h, float fill = 0.0f);

  float at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  float& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }

  friend bool operator==(const Raster&, const Raster&) = default;
};

/// Crop window in source space, nearest-neighbour resize to `out_w` x `out_h`,
/// then an optional horizontal flip. Applied identically to images and masks.
struct AugmentTransform {
  BoundingBox crop;
  int out_w = 0;
  int out_h = 0;
  bool hflip = false;

  friend bool operator==(const AugmentTransform&, const AugmentTransform&) = default;
};

BoundingBox intersect(const BoundingBox& a, const BoundingBox& b);
BoundingBox clamp_to_frame(const BoundingBox& box, const ImageFrame& frame);

/// w*h / (W*H) of the box after clamping to the frame, i.e. 1 - alpha.
double objectness_analytic(const BoundingBox& box, const ImageFrame& frame);

/// Fraction of set pixels.
double objectness_pixels(const ObjectMask& mask);

/// |box ∩ crop| / |crop| with both clamped to the frame. Resizing and flipping
/// leave the ratio unchanged, so only the crop window matters.
double transformed_objectness(const BoundingBox& box, const ImageFrame& frame,
                              const AugmentTransform& t);

ObjectMask apply_transform(const ObjectMask& mask, const AugmentTransform& t);
Raster apply_transform(const Raster& image, const AugmentTransform& t);

ObjectMask mask_from_box(const BoundingBox& box, const ImageFrame& frame);
ObjectMask mask_union(const ObjectMask& a, const ObjectMask& b);
std::optional<BoundingBox> tight_box(const ObjectMask& mask);

AugmentTransform identity_transform(const ImageFrame& frame);

/// Centered square crop with side round(side_fraction * min(W, H)).
AugmentTransform center_crop_transform(const ImageFrame& frame, double side_fraction,
                                       int out_w, int out_h);

}  // namespace als
