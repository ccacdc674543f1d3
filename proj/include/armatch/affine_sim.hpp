#pragma once

#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "armatch/affine.hpp"
#include "armatch/image.hpp"

namespace armatch {

/// Camera pose as A = lambda R(psi) diag(t, 1) R(phi).
struct AffinePose {
  double lambda = 1.0;
  double psi = 0.0;
  double t = 1.0;
  double phi = 0.0;

  void validate() const;
};

Mat2 pose_matrix(const AffinePose& pose);

/// t = 1 / cos(theta), theta in [0, pi/2).
double tilt_from_angle(double theta);

inline constexpr double kClassificationAngle = std::numbers::pi / 4.0;

struct SamplingSets {
  std::vector<double> enlarging;
  std::vector<double> reducing;
  std::vector<double> phi_values;  // radians

  /// {sqrt2, 2, 2 sqrt2}, {sqrt2/2, 1/2, sqrt2/4}, phi in {-45..30} step 15 deg.
  static SamplingSets standard();
  /// The affine-SIFT tilt grid {sqrt2, 2, 2 sqrt2, 4, 4 sqrt2}.
  static std::vector<double> asift_tilts();
};

/// Largest relative tilt reachable between the two simulated sets:
/// max(high_side) / min(low_side).
double max_affine(const std::vector<double>& set1, const std::vector<double>& set2);

/// a * mean(set2) - mean(set1).
double average_differ(const std::vector<double>& set1, const std::vector<double>& set2,
                      double a);

struct SimulatedView {
  int view_id = 0;
  AffinePose pose;
  GrayImage image;
  /// View pixel -> source pixel.
  Affine2 to_original;
  /// Source pixel -> view pixel.
  Affine2 from_original;
  GrayImage coverage;
};

/// The view linear map used for a tilt: rotate by phi, then compress x by t,
/// i.e. diag(1/t, 1) R(phi). Its inverse is pose_matrix({1, -phi, t, 0}).
Mat2 view_linear_map(double t, double phi);

struct SimulationWarning {
  double t = 0.0;
  double phi = 0.0;
  std::string reason;
};

struct ViewSet {
  std::vector<SimulatedView> views;  // identity view last, view_id 0
  std::vector<SimulationWarning> warnings;
};

/// One anti-aliased view per (t, phi) with lambda = 1, psi = 0, followed by
/// the identity view. Views are numbered from 1 in (t-major, phi-minor) order.
ViewSet simulate_views(const GrayImage& img, const std::vector<double>& tilts,
                       const std::vector<double>& phis);

SimulatedView identity_view(const GrayImage& img);

/// Writes view_<id>.pgm files and manifest.txt
/// (`view_id t phi m00 m01 m02 m10 m11 m12`, 9 significant digits, phi in degrees).
void write_view_set(const ViewSet& set, const std::filesystem::path& dir);

enum class AffineOrder { ALower, BLower, Tie };

const char* to_string(AffineOrder order);

struct ClassificationResult {
  AffineOrder order = AffineOrder::Tie;
  std::size_t matches_a_probe_b = 0;  // original a vs tilted b
  std::size_t matches_probe_a_b = 0;  // tilted a vs original b
};

struct ClassifyOptions {
  double theta = kClassificationAngle;
  double ratio = 0.8;
  int max_keypoints = 0;
};

/// Cross-matches each image against a tilted probe of the other and orders the
/// pair by affine degree: tilting the less distorted image moves it towards the
/// more distorted one, so that pairing yields more matches.
ClassificationResult classify_affine_pair(const GrayImage& a, const GrayImage& b,
                                          const ClassifyOptions& options = {});

}  // namespace armatch
