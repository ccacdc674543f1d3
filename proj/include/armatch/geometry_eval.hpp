#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "armatch/affine.hpp"
#include "armatch/linalg.hpp"
#include "armatch/matching.hpp"

namespace armatch {

/// 3x3 projective map, scaled so H(2,2) = 1 when that entry is nonzero.
class Homography {
 public:
  Homography();
  explicit Homography(const Mat3& m);
  static Homography from_affine(const Affine2& a);

  const Mat3& matrix() const { return m_; }
  /// Homogeneous transfer; false when the point maps to infinity.
  bool project(Vec2 p, Vec2& out) const;
  Homography inverse() const;

 private:
  Mat3 m_;
};

/// Rank 2, unit Frobenius norm.
class FundamentalMatrix {
 public:
  explicit FundamentalMatrix(const Mat3& m);
  const Mat3& matrix() const { return m_; }

 private:
  Mat3 m_;
};

struct EvalReport {
  std::size_t n_matches = 0;
  std::size_t n_correct = 0;
  double accuracy = 0.0;
  double threshold = 0.0;
  bool empty = true;
};

/// 0.003 * sqrt(w^2 + h^2).
double epsilon_for(int width, int height);

/// Correct when the transfer distance |H a - b| is strictly below eps.
bool match_correct_h(const Match& match, const Homography& h, double eps);
EvalReport accuracy_h(const std::vector<Match>& matches, const Homography& h, double eps);

struct RansacOptions {
  int iterations = 2000;
  double inlier_eps = 0.0;
  std::uint64_t seed = 42;
};

struct RansacResult {
  Homography h;
  std::vector<Match> inliers;
  std::vector<std::size_t> inlier_indices;
};

/// Normalized 4-point DLT in RANSAC with per-iteration seeds derived from the
/// base seed; refit on all inliers. Inliers have symmetric transfer error
/// (RMS of forward and backward) below inlier_eps.
RansacResult estimate_h_ransac(const std::vector<Match>& matches, const RansacOptions& options);

/// Normalized DLT on all correspondences (at least 4).
Homography fit_homography_dlt(const std::vector<Vec2>& from, const std::vector<Vec2>& to);

/// Fraction of retained matches correct under the ground truth.
EvalReport h_precision(const std::vector<Match>& inliers, const Homography& h_gt, double eps);

/// (x'^T F x)^2 [1/((Fx)_1^2 + (Fx)_2^2) + 1/((F^T x')_1^2 + (F^T x')_2^2)];
/// +infinity when both line normals vanish.
double symmetric_epipolar_distance(Vec2 x, Vec2 xp, const Mat3& f);

inline constexpr double kEpipolarThreshold = 5e-4;

/// Coordinates are divided by the image diagonal before the threshold test.
EvalReport accuracy_f(const std::vector<Match>& matches, const FundamentalMatrix& f, int width,
                      int height, double threshold = kEpipolarThreshold);

/// Kp^{-T} [t]_x R K^{-1}, rank-2 enforced and Frobenius normalized.
FundamentalMatrix fundamental_from_pose(const Mat3& k, const Mat3& kp, const Mat3& r,
                                        const Vec3& t);

/// Projects out the right null direction of F (smallest eigenvector of F^T F).
Mat3 enforce_rank2(const Mat3& f);

struct CameraParams {
  std::string name;
  Mat3 k;
  Mat3 r;
  Vec3 t{};
};

/// `<count>` then `name k11..k33 r11..r33 t1 t2 t3` per line.
std::vector<CameraParams> read_camera_params(const std::filesystem::path& path);

/// F mapping points of `from` to epipolar lines in `to`, for x = K [R | t] X.
FundamentalMatrix fundamental_between(const CameraParams& from, const CameraParams& to);

/// Nine whitespace-separated reals, row-major.
Homography read_homography(const std::filesystem::path& path);

}  // namespace armatch
