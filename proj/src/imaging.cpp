#include "armatch/imaging.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "armatch/error.hpp"
#include "armatch/parallel.hpp"
#include "imaging_detail.hpp"

namespace armatch {

void EnhanceParams::validate() const {
  require(tile_rows >= 1 && tile_cols >= 1, "tile grid must be at least 1x1");
  require(clip_limit >= 0, "clip_limit must be >= 1 (or 0 for the default)");
  require(bilateral_window >= 3 && bilateral_window % 2 == 1,
          "bilateral window must be odd and >= 3");
  require(delta_d > 0.0 && delta_r > 0.0, "bilateral deviations must be positive");
}

int default_clip_limit(const GrayImage& img, int tile_rows, int tile_cols) {
  const int tile_pixels = (img.width() / tile_cols) * (img.height() / tile_rows);
  return std::max(1, 4 * tile_pixels / 256);
}

namespace detail {

TileGrid make_tile_grid(int extent, int tiles) {
  TileGrid grid;
  grid.start.resize(tiles + 1);
  grid.center.resize(tiles);
  for (int i = 0; i <= tiles; ++i) {
    grid.start[i] = static_cast<int>(static_cast<long long>(i) * extent / tiles);
  }
  for (int i = 0; i < tiles; ++i) {
    grid.center[i] = grid.start[i] + (grid.start[i + 1] - grid.start[i] - 1) / 2.0;
  }
  return grid;
}

Blend blend_at(const TileGrid& grid, int pos) {
  const int n = static_cast<int>(grid.center.size());
  if (pos <= grid.center.front()) return {0, 0, 0.0};
  if (pos >= grid.center.back()) return {n - 1, n - 1, 0.0};
  int j = 0;
  while (j + 1 < n && grid.center[j + 1] <= pos) ++j;
  const double w = (pos - grid.center[j]) / (grid.center[j + 1] - grid.center[j]);
  return {j, j + 1, w};
}

std::array<std::uint8_t, 256> tile_map(std::array<int, 256> hist, int clip_limit) {
  long long clip_sum = 0;
  for (int& c : hist) {
    if (c > clip_limit) {
      clip_sum += c - clip_limit;
      c = clip_limit;
    }
  }
  const long long bin_incr = clip_sum / 256;
  long long total = 0;
  for (int& c : hist) {
    const long long raised = c + bin_incr;
    c = static_cast<int>(raised >= clip_limit ? clip_limit : raised);
    total += c;
  }
  std::array<std::uint8_t, 256> map{};
  long long cdf = 0;
  for (int v = 0; v < 256; ++v) {
    cdf += hist[v];
    // round(255 * cdf / total), half up, in exact integer arithmetic
    map[v] = static_cast<std::uint8_t>(total == 0 ? v : (510 * cdf + total) / (2 * total));
  }
  return map;
}

std::uint8_t bilinear_blend(double top_left, double top_right, double bottom_left,
                            double bottom_right, double wx, double wy) {
  const double top = (1.0 - wx) * top_left + wx * top_right;
  const double bottom = (1.0 - wx) * bottom_left + wx * bottom_right;
  const double v = (1.0 - wy) * top + wy * bottom;
  return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

double gaussian_weight(double squared_distance, double sigma) {
  return std::exp(-squared_distance / (2.0 * sigma * sigma));
}

std::vector<float> gaussian_kernel(double sigma, int radius) {
  std::vector<float> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) sum += gaussian_weight(double(i) * i, sigma);
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = static_cast<float>(gaussian_weight(double(i) * i, sigma) / sum);
  }
  return k;
}

int mirror(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

float sample_bilinear(const FloatImage& img, double x, double y) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const float fx = static_cast<float>(x - x0);
  const float fy = static_cast<float>(y - y0);
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const float top = img(x0, y0) + fx * (img(x1, y0) - img(x0, y0));
  const float bottom = img(x0, y1) + fx * (img(x1, y1) - img(x0, y1));
  return top + fy * (bottom - top);
}

float sample_clamped(const FloatImage& img, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
  y = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
  return sample_bilinear(img, x, y);
}

bool inside_source(double x, double y, int width, int height) {
  constexpr double eps = 1e-9;
  return x >= -eps && y >= -eps && x <= width - 1 + eps && y <= height - 1 + eps;
}

WarpGeometry warp_geometry(const GrayImage& img, const Affine2& m) {
  require(std::abs(m.linear.det()) > 1e-9, "warp matrix is singular (|det| <= 1e-9)");
  const double w = img.width();
  const double h = img.height();
  const std::array<Vec2, 4> corners{Vec2{0, 0}, Vec2{w, 0}, Vec2{0, h}, Vec2{w, h}};
  double min_x = 1e300, min_y = 1e300, max_x = -1e300, max_y = -1e300;
  for (Vec2 c : corners) {
    const Vec2 p = m(c);
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }
  const int origin_x = std::min(0, static_cast<int>(std::floor(min_x + 1e-9)));
  const int origin_y = std::min(0, static_cast<int>(std::floor(min_y + 1e-9)));
  WarpGeometry g;
  g.width = std::max(1, static_cast<int>(std::ceil(max_x - 1e-9)) - origin_x);
  g.height = std::max(1, static_cast<int>(std::ceil(max_y - 1e-9)) - origin_y);
  g.forward = Affine2{Mat2{}, Vec2{-double(origin_x), -double(origin_y)}}.after(m);
  g.inverse = g.forward.inverse();
  return g;
}

std::vector<BlurPass> antialias_passes(const Mat2& linear) {
  std::vector<BlurPass> passes;
  const Svd2 s = svd(linear);
  constexpr double kLimit = 1.0 - 1e-6;
  auto add = [&](double singular, Vec2 dir) {
    if (singular >= kLimit) return;
    const double t = 1.0 / singular;
    passes.push_back({dir, 0.8 * std::sqrt(std::max(t * t - 1.0, 0.0))});
  };
  add(s.s_min, s.v_min);
  add(s.s_max, s.v_max);
  return passes;
}

}  // namespace detail

using namespace detail;

GrayImage clahe(const GrayImage& img, int tile_rows, int tile_cols, int clip_limit) {
  require(tile_rows >= 1 && tile_cols >= 1, "tile grid must be at least 1x1");
  require(tile_cols <= img.width() && tile_rows <= img.height(),
          "CLAHE tile grid is larger than the image");
  require(clip_limit >= 1, "clip_limit must be >= 1");

  const TileGrid gx = make_tile_grid(img.width(), tile_cols);
  const TileGrid gy = make_tile_grid(img.height(), tile_rows);

  std::vector<std::array<std::uint8_t, 256>> maps(static_cast<std::size_t>(tile_rows) * tile_cols);
  parallel_for(tile_rows * tile_cols, [&](std::ptrdiff_t t) {
    const int r = static_cast<int>(t) / tile_cols;
    const int c = static_cast<int>(t) % tile_cols;
    std::array<int, 256> hist{};
    for (int y = gy.start[r]; y < gy.start[r + 1]; ++y)
      for (int x = gx.start[c]; x < gx.start[c + 1]; ++x) ++hist[img(x, y)];
    maps[t] = tile_map(hist, clip_limit);
  });

  std::vector<Blend> bx(img.width());
  for (int x = 0; x < img.width(); ++x) bx[x] = blend_at(gx, x);

  GrayImage out(img.width(), img.height());
  parallel_for(img.height(), [&](std::ptrdiff_t yy) {
    const int y = static_cast<int>(yy);
    const Blend by = blend_at(gy, y);
    const auto& top = maps;
    for (int x = 0; x < img.width(); ++x) {
      const Blend& b = bx[x];
      const std::uint8_t v = img(x, y);
      out(x, y) = bilinear_blend(top[by.lo * tile_cols + b.lo][v], top[by.lo * tile_cols + b.hi][v],
                                 top[by.hi * tile_cols + b.lo][v], top[by.hi * tile_cols + b.hi][v],
                                 b.weight, by.weight);
    }
  });
  return out;
}

GrayImage bilateral(const GrayImage& img, int window, double delta_d, double delta_r) {
  require(window % 2 == 1, "bilateral window must be odd");
  require(window >= 3, "bilateral window must be >= 3");
  require(window <= std::min(img.width(), img.height()), "bilateral window exceeds the image");
  require(delta_d > 0.0 && delta_r > 0.0, "bilateral deviations must be positive");

  const int r = window / 2;
  std::vector<double> spatial(static_cast<std::size_t>(window) * window);
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx)
      spatial[(dy + r) * window + (dx + r)] = gaussian_weight(double(dx * dx + dy * dy), delta_d);
  std::array<double, 256> range{};
  for (int d = 0; d < 256; ++d) range[d] = gaussian_weight(double(d * d), delta_r);

  GrayImage out(img.width(), img.height());
  parallel_for(img.height(), [&](std::ptrdiff_t yy) {
    const int y = static_cast<int>(yy);
    const int y_lo = std::max(0, y - r), y_hi = std::min(img.height() - 1, y + r);
    for (int x = 0; x < img.width(); ++x) {
      const int x_lo = std::max(0, x - r), x_hi = std::min(img.width() - 1, x + r);
      const int center = img(x, y);
      double num = 0.0, den = 0.0;
      for (int sy = y_lo; sy <= y_hi; ++sy) {
        const double* srow = &spatial[(sy - y + r) * window + r];
        for (int sx = x_lo; sx <= x_hi; ++sx) {
          const int v = img(sx, sy);
          const double w = srow[sx - x] * range[std::abs(v - center)];
          num += w * v;
          den += w;
        }
      }
      out(x, y) = static_cast<std::uint8_t>(std::clamp(std::floor(num / den + 0.5), 0.0, 255.0));
    }
  });
  return out;
}

GrayImage enhance(const GrayImage& img, const EnhanceParams& params) {
  params.validate();
  const int clip = params.clip_limit > 0
                       ? params.clip_limit
                       : default_clip_limit(img, params.tile_rows, params.tile_cols);
  const GrayImage equalized = clahe(img, params.tile_rows, params.tile_cols, clip);
  return bilateral(equalized, params.bilateral_window, params.delta_d, params.delta_r);
}

FloatImage gaussian_blur(const FloatImage& img, double sigma, int radius) {
  require(sigma > 0.0, "blur sigma must be positive");
  if (radius <= 0) radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
  const std::vector<float> k = gaussian_kernel(sigma, radius);
  const int w = img.width, h = img.height;

  FloatImage tmp(w, h);
  parallel_for(h, [&](std::ptrdiff_t yy) {
    const int y = static_cast<int>(yy);
    const float* src = &img.data[static_cast<std::size_t>(y) * w];
    float* dst = &tmp.data[static_cast<std::size_t>(y) * w];
    for (int x = 0; x < w; ++x) {
      float acc = 0.0f;
      if (x >= radius && x + radius < w) {
        const float* s = src + x - radius;
        for (int i = 0; i <= 2 * radius; ++i) acc += k[i] * s[i];
      } else {
        for (int i = -radius; i <= radius; ++i) acc += k[i + radius] * src[mirror(x + i, w)];
      }
      dst[x] = acc;
    }
  });

  FloatImage out(w, h);
  parallel_for(h, [&](std::ptrdiff_t yy) {
    const int y = static_cast<int>(yy);
    float* dst = &out.data[static_cast<std::size_t>(y) * w];
    std::fill(dst, dst + w, 0.0f);
    for (int i = -radius; i <= radius; ++i) {
      const float* s = &tmp.data[static_cast<std::size_t>(mirror(y + i, h)) * w];
      const float kv = k[i + radius];
      for (int x = 0; x < w; ++x) dst[x] += kv * s[x];
    }
  });
  return out;
}

FloatImage directional_blur(const FloatImage& img, Vec2 direction, double sigma) {
  require(sigma > 0.0, "blur sigma must be positive");
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  const std::vector<float> k = gaussian_kernel(sigma, radius);
  FloatImage out(img.width, img.height);
  parallel_for(img.height, [&](std::ptrdiff_t yy) {
    const int y = static_cast<int>(yy);
    for (int x = 0; x < img.width; ++x) {
      float acc = 0.0f;
      for (int i = -radius; i <= radius; ++i) {
        acc += k[i + radius] * sample_clamped(img, x + i * direction.x, y + i * direction.y);
      }
      out(x, y) = acc;
    }
  });
  return out;
}

WarpResult warp_affine(const GrayImage& img, const Affine2& m, bool antialias) {
  const WarpGeometry g = warp_geometry(img, m);

  FloatImage src = to_float(img);
  if (antialias) {
    for (const BlurPass& pass : antialias_passes(m.linear)) {
      if (pass.sigma > 0.0) src = directional_blur(src, pass.direction, pass.sigma);
    }
  }

  WarpResult out{GrayImage(g.width, g.height), g.forward, g.inverse, GrayImage(g.width, g.height)};
  parallel_for(g.height, [&](std::ptrdiff_t yy) {
    const int y = static_cast<int>(yy);
    for (int x = 0; x < g.width; ++x) {
      const Vec2 s = g.inverse(Vec2{double(x), double(y)});
      if (!inside_source(s.x, s.y, img.width(), img.height())) continue;
      const double sx = std::clamp(s.x, 0.0, double(img.width() - 1));
      const double sy = std::clamp(s.y, 0.0, double(img.height() - 1));
      const float v = sample_bilinear(src, sx, sy);
      out.image(x, y) = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5f), 0.0f, 255.0f));
      out.coverage(x, y) = 255;
    }
  });
  return out;
}

}  // namespace armatch
