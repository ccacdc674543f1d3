#pragma once

// Arithmetic shared by the parallel kernels and their serial references so
// both produce bit-identical results.

#include <array>
#include <cstdint>
#include <vector>

#include "armatch/affine.hpp"
#include "armatch/image.hpp"

namespace armatch::detail {

struct TileGrid {
  std::vector<int> start;      // tiles + 1 boundaries
  std::vector<double> center;  // pixel-centre of each tile
};

struct Blend {
  int lo = 0;
  int hi = 0;
  double weight = 0.0;  // weight of hi
};

TileGrid make_tile_grid(int extent, int tiles);
Blend blend_at(const TileGrid& grid, int pos);
std::array<std::uint8_t, 256> tile_map(std::array<int, 256> hist, int clip_limit);
std::uint8_t bilinear_blend(double top_left, double top_right, double bottom_left,
                            double bottom_right, double wx, double wy);

double gaussian_weight(double squared_distance, double sigma);
std::vector<float> gaussian_kernel(double sigma, int radius);
int mirror(int i, int n);

float sample_bilinear(const FloatImage& img, double x, double y);
float sample_clamped(const FloatImage& img, double x, double y);
bool inside_source(double x, double y, int width, int height);

struct WarpGeometry {
  int width = 0;
  int height = 0;
  Affine2 forward;
  Affine2 inverse;
};
WarpGeometry warp_geometry(const GrayImage& img, const Affine2& m);

struct BlurPass {
  Vec2 direction;
  double sigma = 0.0;
};
std::vector<BlurPass> antialias_passes(const Mat2& linear);

}  // namespace armatch::detail
