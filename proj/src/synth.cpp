#include "armatch/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "armatch/error.hpp"
#include "armatch/imaging.hpp"

namespace armatch::synth {

namespace {

// splitmix64: small, portable and fully specified, so scenes are identical
// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * ((next() >> 11) * 0x1.0p-53); }

 private:
  std::uint64_t state_;
};

}  // namespace

GrayImage textured_image(int width, int height, std::uint64_t seed) {
  require(width > 0 && height > 0, "image dimensions must be positive");
  Rng rng(seed);
  FloatImage f(width, height);
  const double gx = rng.uniform(-0.15, 0.15), gy = rng.uniform(-0.15, 0.15);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) f(x, y) = static_cast<float>(128.0 + gx * (x - width / 2.0) + gy * (y - height / 2.0));

  const double scale = std::sqrt(static_cast<double>(width) * height) / 512.0;
  const int shapes = std::max(20, static_cast<int>(420 * scale * scale));
  for (int s = 0; s < shapes; ++s) {
    const int kind = static_cast<int>(rng.next() % 3);
    const double cx = rng.uniform(0, width), cy = rng.uniform(0, height);
    const double r1 = rng.uniform(4, 34) * scale + 2.0, r2 = rng.uniform(4, 34) * scale + 2.0;
    const double angle = rng.uniform(0, std::numbers::pi);
    const float level = static_cast<float>(rng.uniform(10, 245));
    const double c = std::cos(angle), sn = std::sin(angle);
    // Triangle vertices in the shape frame.
    const double ta = rng.uniform(0, 2 * std::numbers::pi);
    double tx[3], ty[3];
    for (int k = 0; k < 3; ++k) {
      const double a = ta + k * 2.0 * std::numbers::pi / 3.0 + rng.uniform(-0.6, 0.6);
      tx[k] = r1 * std::cos(a);
      ty[k] = r2 * std::sin(a);
    }
    const int rad = static_cast<int>(std::ceil(std::max(r1, r2)));
    for (int y = std::max(0, int(cy) - rad); y <= std::min(height - 1, int(cy) + rad); ++y) {
      for (int x = std::max(0, int(cx) - rad); x <= std::min(width - 1, int(cx) + rad); ++x) {
        const double dx = x - cx, dy = y - cy;
        const double u = c * dx + sn * dy, v = -sn * dx + c * dy;
        bool inside = false;
        if (kind == 0) {
          inside = (u * u) / (r1 * r1) + (v * v) / (r2 * r2) <= 1.0;
        } else if (kind == 1) {
          inside = std::abs(u) <= r1 * 0.8 && std::abs(v) <= r2 * 0.8;
        } else {
          bool pos = false, neg = false;
          for (int k = 0; k < 3; ++k) {
            const int j = (k + 1) % 3;
            const double e = (tx[j] - tx[k]) * (v - ty[k]) - (ty[j] - ty[k]) * (u - tx[k]);
            pos |= e > 0;
            neg |= e < 0;
          }
          inside = !(pos && neg);
        }
        if (inside) f(x, y) = level;
      }
    }
  }
  return to_gray(gaussian_blur(f, 1.0));
}

GrayImage gaussian_blob(int width, int height, double cx, double cy, double sigma, double peak) {
  require(width > 0 && height > 0 && sigma > 0.0, "invalid blob parameters");
  FloatImage f(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
      f(x, y) = static_cast<float>(peak * std::exp(-d2 / (2.0 * sigma * sigma)));
    }
  return to_gray(f);
}

}  // namespace armatch::synth
