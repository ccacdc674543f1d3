#pragma once

#include <cstdint>

#include "armatch/image.hpp"

namespace armatch::synth {

/// Procedural test scene: smooth shaded background with a few hundred
/// overlapping ellipses, rectangles and triangles of distinct gray levels,
/// lightly blurred. Deterministic in (width, height, seed).
GrayImage textured_image(int width, int height, std::uint64_t seed);

/// A single isotropic Gaussian blob of the given peak on black.
GrayImage gaussian_blob(int width, int height, double cx, double cy, double sigma, double peak);

}  // namespace armatch::synth
