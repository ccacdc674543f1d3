#pragma once

#include "armatch/affine.hpp"
#include "armatch/image.hpp"

namespace armatch {

struct EnhanceParams {
  int tile_rows = 8;
  int tile_cols = 8;
  /// Per-bin pixel count. Zero selects 4 * (tile pixel count) / 256.
  int clip_limit = 0;
  int bilateral_window = 9;
  double delta_d = 3.0;
  double delta_r = 25.0;

  void validate() const;
};

/// Contrast-limited adaptive histogram equalization with a tile_rows x
/// tile_cols grid. Each tile histogram is clipped at clip_limit, the excess is
/// spread once as clip_sum / 256 per bin (bins reaching the limit are pinned
/// to it, the integer remainder is dropped), the clipped CDF is scaled to 255
/// and pixels blend the maps of the nearest tile centres bilinearly.
GrayImage clahe(const GrayImage& img, int tile_rows, int tile_cols, int clip_limit);

int default_clip_limit(const GrayImage& img, int tile_rows, int tile_cols);

/// Edge-preserving smoothing: spatial weight exp(-|xi-x|^2 / 2 delta_d^2)
/// times range weight exp(-(f(xi)-f(x))^2 / 2 delta_r^2), window clipped at
/// the image border, normalized by the weight sum.
GrayImage bilateral(const GrayImage& img, int window, double delta_d, double delta_r);

/// bilateral(clahe(img)).
GrayImage enhance(const GrayImage& img, const EnhanceParams& params);

/// Separable Gaussian blur with mirrored borders. radius 0 picks ceil(4 sigma).
FloatImage gaussian_blur(const FloatImage& img, double sigma, int radius = 0);

struct WarpResult {
  GrayImage image;
  /// Source -> output, including the canvas offset.
  Affine2 forward;
  /// Output -> source.
  Affine2 inverse;
  /// 255 where the output pixel was sampled from inside the source.
  GrayImage coverage;
};

/// Warps img by m. The canvas spans the bounding box of the warped source
/// corners, extended to include the origin, so a map whose content already
/// lies at non-negative coordinates keeps its translation. Bilinear sampling;
/// outside the source is 0. With antialias, directions the map compresses by
/// a factor 1/t get a 1-D Gaussian pre-blur of sigma 0.8 * sqrt(t^2 - 1).
WarpResult warp_affine(const GrayImage& img, const Affine2& m, bool antialias);

/// Blur of the source along one unit direction (source coordinates).
FloatImage directional_blur(const FloatImage& img, Vec2 direction, double sigma);

}  // namespace armatch
