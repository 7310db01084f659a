#include "als/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "als/error.hpp"

namespace als {

ObjectMask::ObjectMask(int w, int h) : width(w), height(h) {
  if (w < 0 || h < 0) throw InvalidInput("mask dimensions must be non-negative");
  bits.assign(static_cast<std::size_t>(w) * h, 0);
}

std::int64_t ObjectMask::count() const {
  return std::count(bits.begin(), bits.end(), std::uint8_t{1});
}

Raster::Raster(int w, int h, float fill) : width(w), height(h) {
  if (w < 0 || h < 0) throw InvalidInput("raster dimensions must be non-negative");
  pixels.assign(static_cast<std::size_t>(w) * h, fill);
}

BoundingBox intersect(const BoundingBox& a, const BoundingBox& b) {
  const int x0 = std::max(a.x, b.x);
  const int y0 = std::max(a.y, b.y);
  const int x1 = std::min(a.right(), b.right());
  const int y1 = std::min(a.bottom(), b.bottom());
  if (x1 <= x0 || y1 <= y0) return {x0, y0, 0, 0};
  return {x0, y0, x1 - x0, y1 - y0};
}

BoundingBox clamp_to_frame(const BoundingBox& box, const ImageFrame& frame) {
  return intersect(box, frame.as_box());
}

namespace {

void check_frame(const ImageFrame& frame) {
  if (frame.W <= 0 || frame.H <= 0) {
    throw InvalidInput("degenerate image frame " + std::to_string(frame.W) + "x" +
                       std::to_string(frame.H));
  }
}

void check_output(const AugmentTransform& t) {
  if (t.out_w <= 0 || t.out_h <= 0) throw InvalidInput("transform output size must be positive");
}

// Nearest-neighbour source index for output index `o` when `n_src` source
// samples starting at `origin` are stretched over `n_out` outputs. Samples at
// pixel centres: floor((o + 0.5) * n_src / n_out).
inline int source_index(int o, int origin, int n_src, int n_out) {
  return origin + static_cast<int>((2LL * o + 1) * n_src / (2LL * n_out));
}

// Grid is ObjectMask or Raster; out-of-crop or empty crops yield zeros.
template <typename Grid>
Grid resample(const Grid& src, const AugmentTransform& t) {
  check_output(t);
  Grid out(t.out_w, t.out_h);
  const BoundingBox crop = clamp_to_frame(t.crop, {src.width, src.height});
  if (crop.empty()) return out;
  std::vector<int> cols(static_cast<std::size_t>(t.out_w));
  for (int ox = 0; ox < t.out_w; ++ox) {
    const int sample = t.hflip ? t.out_w - 1 - ox : ox;
    cols[static_cast<std::size_t>(ox)] = source_index(sample, crop.x, crop.w, t.out_w);
  }
  for (int oy = 0; oy < t.out_h; ++oy) {
    const int sy = source_index(oy, crop.y, crop.h, t.out_h);
    for (int ox = 0; ox < t.out_w; ++ox) out.at(ox, oy) = src.at(cols[static_cast<std::size_t>(ox)], sy);
  }
  return out;
}

}  // namespace

double objectness_analytic(const BoundingBox& box, const ImageFrame& frame) {
  check_frame(frame);
  const BoundingBox c = clamp_to_frame(box, frame);
  if (c.empty()) return 0.0;
  return static_cast<double>(c.area()) / static_cast<double>(frame.area());
}

double objectness_pixels(const ObjectMask& mask) {
  if (mask.width <= 0 || mask.height <= 0) throw InvalidInput("zero-area mask");
  return static_cast<double>(mask.count()) /
         (static_cast<double>(mask.width) * static_cast<double>(mask.height));
}

ObjectMask apply_transform(const ObjectMask& mask, const AugmentTransform& t) {
  return resample(mask, t);
}

Raster apply_transform(const Raster& image, const AugmentTransform& t) {
  return resample(image, t);
}

ObjectMask mask_from_box(const BoundingBox& box, const ImageFrame& frame) {
  check_frame(frame);
  ObjectMask m(frame.W, frame.H);
  const BoundingBox c = clamp_to_frame(box, frame);
  for (int y = c.y; y < c.bottom(); ++y)
    for (int x = c.x; x < c.right(); ++x) m.at(x, y) = 1;
  return m;
}

ObjectMask mask_union(const ObjectMask& a, const ObjectMask& b) {
  if (a.width != b.width || a.height != b.height) throw InvalidInput("mask size mismatch in union");
  ObjectMask m(a.width, a.height);
  for (std::size_t i = 0; i < m.bits.size(); ++i) m.bits[i] = (a.bits[i] | b.bits[i]) ? 1 : 0;
  return m;
}

std::optional<BoundingBox> tight_box(const ObjectMask& mask) {
  int x0 = mask.width, y0 = mask.height, x1 = -1, y1 = -1;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  }
  if (x1 < 0) return std::nullopt;
  return BoundingBox{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

AugmentTransform identity_transform(const ImageFrame& frame) {
  check_frame(frame);
  return {frame.as_box(), frame.W, frame.H, false};
}

AugmentTransform center_crop_transform(const ImageFrame& frame, double side_fraction, int out_w,
                                       int out_h) {
  check_frame(frame);
  if (!(side_fraction > 0.0 && side_fraction <= 1.0))
    throw InvalidInput("center crop fraction must lie in (0, 1]");
  const int side = std::max(1, static_cast<int>(std::lround(side_fraction * std::min(frame.W, frame.H))));
  return {{(frame.W - side) / 2, (frame.H - side) / 2, side, side}, out_w, out_h, false};
}

double transformed_objectness(const BoundingBox& box, const ImageFrame& frame,
                              const AugmentTransform& t) {
  check_frame(frame);
  const BoundingBox crop = clamp_to_frame(t.crop, frame);
  if (crop.empty()) throw InvalidInput("crop window has zero area inside the frame");
  const BoundingBox obj = clamp_to_frame(box, frame);
  const BoundingBox inter = intersect(obj, crop);
  if (inter.empty()) return 0.0;
  return static_cast<double>(inter.area()) / static_cast<double>(crop.area());
}

}  // namespace als
