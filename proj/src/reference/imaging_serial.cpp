#include <algorithm>
#include <cmath>

#include "../imaging_detail.hpp"
#include "armatch/error.hpp"
#include "armatch/reference.hpp"

namespace armatch::reference {

using namespace armatch::detail;

GrayImage clahe(const GrayImage& img, int tile_rows, int tile_cols, int clip_limit) {
  require(tile_cols <= img.width() && tile_rows <= img.height(),
          "CLAHE tile grid is larger than the image");
  require(clip_limit >= 1, "clip_limit must be >= 1");
  const TileGrid gx = make_tile_grid(img.width(), tile_cols);
  const TileGrid gy = make_tile_grid(img.height(), tile_rows);

  std::vector<std::array<std::uint8_t, 256>> maps;
  for (int r = 0; r < tile_rows; ++r) {
    for (int c = 0; c < tile_cols; ++c) {
      std::array<int, 256> hist{};
      for (int y = gy.start[r]; y < gy.start[r + 1]; ++y)
        for (int x = gx.start[c]; x < gx.start[c + 1]; ++x) ++hist[img(x, y)];
      maps.push_back(tile_map(hist, clip_limit));
    }
  }

  GrayImage out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    const Blend by = blend_at(gy, y);
    for (int x = 0; x < img.width(); ++x) {
      const Blend bx = blend_at(gx, x);
      const std::uint8_t v = img(x, y);
      out(x, y) = bilinear_blend(maps[by.lo * tile_cols + bx.lo][v], maps[by.lo * tile_cols + bx.hi][v],
                                 maps[by.hi * tile_cols + bx.lo][v], maps[by.hi * tile_cols + bx.hi][v],
                                 bx.weight, by.weight);
    }
  }
  return out;
}

GrayImage bilateral(const GrayImage& img, int window, double delta_d, double delta_r) {
  require(window % 2 == 1 && window >= 3, "bilateral window must be odd and >= 3");
  require(window <= std::min(img.width(), img.height()), "bilateral window exceeds the image");
  const int r = window / 2;
  GrayImage out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const int center = img(x, y);
      double num = 0.0, den = 0.0;
      for (int sy = std::max(0, y - r); sy <= std::min(img.height() - 1, y + r); ++sy) {
        for (int sx = std::max(0, x - r); sx <= std::min(img.width() - 1, x + r); ++sx) {
          const int v = img(sx, sy);
          const int dx = sx - x, dy = sy - y, dv = v - center;
          const double w = gaussian_weight(double(dx * dx + dy * dy), delta_d) *
                           gaussian_weight(double(dv * dv), delta_r);
          num += w * v;
          den += w;
        }
      }
      out(x, y) = static_cast<std::uint8_t>(std::clamp(std::floor(num / den + 0.5), 0.0, 255.0));
    }
  }
  return out;
}

FloatImage gaussian_blur(const FloatImage& img, double sigma, int radius) {
  if (radius <= 0) radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
  const std::vector<float> k = gaussian_kernel(sigma, radius);
  FloatImage tmp(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      float acc = 0.0f;
      for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * img(mirror(x + i, img.width), y);
      tmp(x, y) = acc;
    }
  FloatImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      float acc = 0.0f;
      for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * tmp(x, mirror(y + i, img.height));
      out(x, y) = acc;
    }
  return out;
}

WarpResult warp_affine(const GrayImage& img, const Affine2& m, bool antialias) {
  const WarpGeometry g = warp_geometry(img, m);
  FloatImage src = to_float(img);
  if (antialias) {
    for (const BlurPass& pass : antialias_passes(m.linear)) {
      if (pass.sigma <= 0.0) continue;
      const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * pass.sigma)));
      const std::vector<float> k = gaussian_kernel(pass.sigma, radius);
      FloatImage blurred(src.width, src.height);
      for (int y = 0; y < src.height; ++y)
        for (int x = 0; x < src.width; ++x) {
          float acc = 0.0f;
          for (int i = -radius; i <= radius; ++i)
            acc += k[i + radius] *
                   sample_clamped(src, x + i * pass.direction.x, y + i * pass.direction.y);
          blurred(x, y) = acc;
        }
      src = std::move(blurred);
    }
  }
  WarpResult out{GrayImage(g.width, g.height), g.forward, g.inverse, GrayImage(g.width, g.height)};
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x) {
      const Vec2 s = g.inverse(Vec2{double(x), double(y)});
      if (!inside_source(s.x, s.y, img.width(), img.height())) continue;
      const float v = sample_bilinear(src, std::clamp(s.x, 0.0, double(img.width() - 1)),
                                      std::clamp(s.y, 0.0, double(img.height() - 1)));
      out.image(x, y) = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5f), 0.0f, 255.0f));
      out.coverage(x, y) = 255;
    }
  return out;
}

}  // namespace armatch::reference
