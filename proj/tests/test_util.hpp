#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "armatch/image.hpp"

namespace armatch::test {

inline GrayImage random_image(int w, int h, std::uint64_t seed, int lo = 0, int hi = 255) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> d(lo, hi);
  GrayImage img(w, h);
  for (auto& p : img.pixels()) p = static_cast<std::uint8_t>(d(rng));
  return img;
}

inline GrayImage checkerboard(int w, int h, int cell) {
  GrayImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) img(x, y) = ((x / cell + y / cell) % 2) ? 255 : 0;
  return img;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("armatch_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace armatch::test
