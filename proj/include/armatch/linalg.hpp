#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace armatch {

using Vec3 = std::array<double, 3>;

/// 3x3 row-major matrix.
struct Mat3 {
  std::array<double, 9> m{};

  double& operator()(int r, int c) { return m[r * 3 + c]; }
  double operator()(int r, int c) const { return m[r * 3 + c]; }

  static Mat3 identity();
  static Mat3 skew(const Vec3& t);

  Mat3 transposed() const;
  Mat3 inverse() const;
  double det() const;
  double frobenius() const;
  Vec3 operator*(const Vec3& v) const;
  friend Mat3 operator*(const Mat3& a, const Mat3& b);
  friend Mat3 operator*(double s, const Mat3& a);
  friend Mat3 operator-(const Mat3& a, const Mat3& b);
};

double dot(const Vec3& a, const Vec3& b);
double norm(const Vec3& v);

/// Dense symmetric matrix for the eigensolver.
struct SymmetricMatrix {
  std::size_t n = 0;
  std::vector<double> a;  // row-major n*n

  explicit SymmetricMatrix(std::size_t size) : n(size), a(size * size, 0.0) {}
  double& operator()(std::size_t r, std::size_t c) { return a[r * n + c]; }
  double operator()(std::size_t r, std::size_t c) const { return a[r * n + c]; }
};

struct EigenDecomposition {
  std::vector<double> values;   // ascending
  std::vector<double> vectors;  // column k (row-major n*n) pairs with values[k]
  std::size_t n = 0;

  double vector(std::size_t row, std::size_t k) const { return vectors[row * n + k]; }
};

/// Cyclic Jacobi rotations; converges quadratically for symmetric input.
EigenDecomposition jacobi_eigen(const SymmetricMatrix& input, int max_sweeps = 100);

}  // namespace armatch
