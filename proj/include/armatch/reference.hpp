#pragma once

// Serial reference kernels. They follow the same arithmetic as the parallel
// kernels in a plain loop and exist for equivalence tests and benchmarks.

#include <vector>

#include "armatch/image.hpp"
#include "armatch/imaging.hpp"
#include "armatch/matching.hpp"

namespace armatch::reference {

GrayImage clahe(const GrayImage& img, int tile_rows, int tile_cols, int clip_limit);
GrayImage bilateral(const GrayImage& img, int window, double delta_d, double delta_r);
FloatImage gaussian_blur(const FloatImage& img, double sigma, int radius = 0);
WarpResult warp_affine(const GrayImage& img, const Affine2& m, bool antialias);
std::vector<IndexMatch> knn_match(const DescriptorSet& a, const DescriptorSet& b, double ratio);

}  // namespace armatch::reference
