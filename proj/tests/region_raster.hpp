#pragma once

// Analytic rasterization of one asymmetric region under a known affine map,
// used to check the region descriptor's invariance without interpolation.

#include <cmath>

#include "armatch/affine.hpp"
#include "armatch/image.hpp"
#include "armatch/mser.hpp"

namespace armatch::test {

// An ellipse with a smaller disc attached to one side, centred on (0, 0).
inline bool in_shape(Vec2 p) {
  const bool ellipse = (p.x * p.x) / (36.0 * 36.0) + (p.y * p.y) / (22.0 * 22.0) <= 1.0;
  const double dx = p.x - 30.0, dy = p.y + 14.0;
  return ellipse || dx * dx + dy * dy <= 14.0 * 14.0;
}

inline double shape_intensity(Vec2 p) { return 120.0 + 1.2 * p.x + 0.7 * p.y; }

struct RasterRegion {
  GrayImage image;
  Region region;
  Affine2 source_to_image;
};

/// The shape seen through `a` (source -> image), centred on a 300x300 canvas.
inline RasterRegion raster(const Mat2& a) {
  RasterRegion r;
  r.image = GrayImage(300, 300, 0);
  r.source_to_image = {a, {150.0, 150.0}};
  const Affine2 inv = r.source_to_image.inverse();
  r.region.id = 1;
  for (int y = 0; y < 300; ++y)
    for (int x = 0; x < 300; ++x) {
      const Vec2 s = inv({double(x), double(y)});
      if (!in_shape(s)) continue;
      r.image(x, y) = static_cast<std::uint8_t>(std::lround(shape_intensity(s)));
      r.region.pixels.push_back(y * 300 + x);
    }
  r.region.area = static_cast<int>(r.region.pixels.size());
  return r;
}

}  // namespace armatch::test
