#pragma once

#include <array>

namespace armatch {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

double norm(Vec2 v);

/// 2x2 matrix, row-major: [a b; c d].
struct Mat2 {
  double a = 1.0, b = 0.0, c = 0.0, d = 1.0;

  double det() const { return a * d - b * c; }
  Vec2 operator*(Vec2 v) const { return {a * v.x + b * v.y, c * v.x + d * v.y}; }
  friend Mat2 operator*(const Mat2& l, const Mat2& r) {
    return {l.a * r.a + l.b * r.c, l.a * r.b + l.b * r.d,
            l.c * r.a + l.d * r.c, l.c * r.b + l.d * r.d};
  }
  Mat2 inverse() const;
  Mat2 transposed() const { return {a, c, b, d}; }

  static Mat2 rotation(double radians);
  static Mat2 diagonal(double sx, double sy) { return {sx, 0.0, 0.0, sy}; }
};

/// Singular values (descending) with the matching right singular vectors,
/// i.e. the input-space directions they act along.
struct Svd2 {
  double s_max = 0.0;
  double s_min = 0.0;
  Vec2 v_max;
  Vec2 v_min;
};
Svd2 svd(const Mat2& m);

/// 2x3 affine map x' = L x + t, stored row-major as m00 m01 m02 / m10 m11 m12.
struct Affine2 {
  Mat2 linear;
  Vec2 translation;

  static Affine2 identity() { return {}; }
  static Affine2 from_rows(const std::array<double, 6>& m) {
    return {{m[0], m[1], m[3], m[4]}, {m[2], m[5]}};
  }
  std::array<double, 6> rows() const {
    return {linear.a, linear.b, translation.x, linear.c, linear.d, translation.y};
  }

  Vec2 operator()(Vec2 p) const { return linear * p + translation; }
  /// (*this)(other(p)).
  Affine2 after(const Affine2& other) const {
    return {linear * other.linear, linear * other.translation + translation};
  }
  Affine2 inverse() const;
};

}  // namespace armatch
