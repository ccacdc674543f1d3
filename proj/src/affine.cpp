#include "armatch/affine.hpp"

#include <algorithm>
#include <cmath>

#include "armatch/error.hpp"

namespace armatch {

double norm(Vec2 v) { return std::hypot(v.x, v.y); }

Mat2 Mat2::inverse() const {
  const double dt = det();
  require(std::abs(dt) > 1e-300, "singular 2x2 matrix");
  return {d / dt, -b / dt, -c / dt, a / dt};
}

Mat2 Mat2::rotation(double radians) {
  const double c = std::cos(radians);
  const double s = std::sin(radians);
  return {c, -s, s, c};
}

Svd2 svd(const Mat2& m) {
  // Eigen-decomposition of M^T M = [p q; q r].
  const double p = m.a * m.a + m.c * m.c;
  const double q = m.a * m.b + m.c * m.d;
  const double r = m.b * m.b + m.d * m.d;
  const double mean = 0.5 * (p + r);
  const double diff = 0.5 * (p - r);
  const double rad = std::hypot(diff, q);
  const double l1 = mean + rad;
  const double l2 = std::max(mean - rad, 0.0);
  const double angle = 0.5 * std::atan2(2.0 * q, p - r);
  Svd2 out;
  out.s_max = std::sqrt(l1);
  out.s_min = std::sqrt(l2);
  out.v_max = {std::cos(angle), std::sin(angle)};
  out.v_min = {-std::sin(angle), std::cos(angle)};
  return out;
}

Affine2 Affine2::inverse() const {
  const double dt = linear.det();
  require(std::abs(dt) > 1e-9, "affine map is singular (|det| <= 1e-9)");
  const Mat2 inv = linear.inverse();
  return {inv, -1.0 * (inv * translation)};
}

}  // namespace armatch
