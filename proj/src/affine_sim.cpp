#include "armatch/affine_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "armatch/error.hpp"
#include "armatch/features.hpp"
#include "armatch/imaging.hpp"
#include "armatch/matching.hpp"

namespace armatch {

void AffinePose::validate() const {
  require(t > 0.0 && std::isfinite(t), "pose tilt must be positive");
  require(lambda > 0.0 && std::isfinite(lambda), "pose scale must be positive");
}

Mat2 pose_matrix(const AffinePose& pose) {
  pose.validate();
  const Mat2 m = Mat2::rotation(pose.psi) * Mat2::diagonal(pose.t, 1.0) * Mat2::rotation(pose.phi);
  return {pose.lambda * m.a, pose.lambda * m.b, pose.lambda * m.c, pose.lambda * m.d};
}

double tilt_from_angle(double theta) {
  require(theta >= 0.0 && theta < std::numbers::pi / 2.0, "tilt angle must lie in [0, pi/2)");
  return 1.0 / std::cos(theta);
}

SamplingSets SamplingSets::standard() {
  const double r2 = std::numbers::sqrt2;
  SamplingSets s;
  s.enlarging = {r2, 2.0, 2.0 * r2};
  s.reducing = {r2 / 2.0, 0.5, r2 / 4.0};
  for (int deg : {-45, -30, -15, 0, 15, 30}) s.phi_values.push_back(deg * std::numbers::pi / 180.0);
  return s;
}

std::vector<double> SamplingSets::asift_tilts() {
  const double r2 = std::numbers::sqrt2;
  return {r2, 2.0, 2.0 * r2, 4.0, 4.0 * r2};
}

double max_affine(const std::vector<double>& set1, const std::vector<double>& set2) {
  require(!set1.empty() && !set2.empty(), "max_affine needs nonempty sets");
  const double lo = *std::min_element(set1.begin(), set1.end());
  require(lo > 0.0, "tilts must be positive");
  return *std::max_element(set2.begin(), set2.end()) / lo;
}

double average_differ(const std::vector<double>& set1, const std::vector<double>& set2, double a) {
  require(!set1.empty() && !set2.empty(), "average_differ needs nonempty sets");
  require(a > 0.0, "average_differ factor must be positive");
  const double m1 = std::accumulate(set1.begin(), set1.end(), 0.0) / set1.size();
  const double m2 = std::accumulate(set2.begin(), set2.end(), 0.0) / set2.size();
  return a * m2 - m1;
}

Mat2 view_linear_map(double t, double phi) {
  require(t > 0.0, "tilt must be positive");
  return Mat2::diagonal(1.0 / t, 1.0) * Mat2::rotation(phi);
}

SimulatedView identity_view(const GrayImage& img) {
  SimulatedView v;
  v.view_id = 0;
  v.image = img;
  v.coverage = GrayImage(img.width(), img.height(), 255);
  return v;
}

ViewSet simulate_views(const GrayImage& img, const std::vector<double>& tilts, const std::vector<double>& phis) {
  require(!tilts.empty() && !phis.empty(), "simulation needs at least one tilt and one angle");
  require(!img.empty(), "cannot simulate views of an empty image");
  ViewSet set;
  int next_id = 1;
  for (double t : tilts) {
    for (double phi : phis) {
      try {
        const AffinePose pose{1.0, 0.0, t, phi};
        pose.validate();
        WarpResult w = warp_affine(img, Affine2{view_linear_map(t, phi), {}}, true);
        SimulatedView v;
        v.view_id = next_id++;
        v.pose = pose;
        v.image = std::move(w.image);
        v.to_original = w.inverse;
        v.from_original = w.forward;
        v.coverage = std::move(w.coverage);
        set.views.push_back(std::move(v));
      } catch (const Error& e) {
        set.warnings.push_back({t, phi, e.what()});
      }
    }
  }
  set.views.push_back(identity_view(img));
  return set;
}

void write_view_set(const ViewSet& set, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream manifest(dir / "manifest.txt");
  if (!manifest) fail(ErrorKind::Io, "cannot write manifest in " + dir.string());
  char buf[256];
  for (const SimulatedView& v : set.views) {
    write_pgm(v.image, dir / ("view_" + std::to_string(v.view_id) + ".pgm"));
    const auto m = v.to_original.rows();
    std::snprintf(buf, sizeof buf, "%d %.9g %.9g %.9g %.9g %.9g %.9g %.9g %.9g\n", v.view_id, v.pose.t,
                  v.pose.phi * 180.0 / std::numbers::pi, m[0], m[1], m[2], m[3], m[4], m[5]);
    manifest << buf;
  }
  if (!manifest) fail(ErrorKind::Io, "write failed for manifest in " + dir.string());
}

const char* to_string(AffineOrder order) {
  switch (order) {
    case AffineOrder::ALower:
      return "a_lower";
    case AffineOrder::BLower:
      return "b_lower";
    case AffineOrder::Tie:
      return "tie";
  }
  return "tie";
}

namespace {

DescriptorSet probe_descriptors(const GrayImage& img, const DetectorParams& params, const char* name) {
  if (img.width() < 32 || img.height() < 32) {
    fail(ErrorKind::ClassificationFailed, std::string("image ") + name + " is too small for keypoint detection");
  }
  const ScaleSpace space(img, params);
  const FeatureSet fs = describe_keypoints(space, detect_keypoints(space));
  if (fs.keypoints.empty()) {
    fail(ErrorKind::ClassificationFailed, std::string("no keypoints in image ") + name);
  }
  return make_descriptor_set(fs);
}

// Ratio-test matches counted in both directions, so swapping the pair swaps
// the two counts exactly.
std::size_t cross_matches(const DescriptorSet& x, const DescriptorSet& y, double ratio) {
  std::size_t n = 0;
  if (y.size() >= 2) n += knn_match(x, y, ratio).size();
  if (x.size() >= 2) n += knn_match(y, x, ratio).size();
  return n;
}

}  // namespace

ClassificationResult classify_affine_pair(const GrayImage& a, const GrayImage& b, const ClassifyOptions& options) {
  const double t = tilt_from_angle(options.theta);
  DetectorParams params;
  params.max_keypoints = options.max_keypoints;
  const Affine2 probe{view_linear_map(t, 0.0), {}};

  const DescriptorSet da = probe_descriptors(a, params, "a");
  const DescriptorSet db = probe_descriptors(b, params, "b");
  const DescriptorSet dA = probe_descriptors(warp_affine(a, probe, true).image, params, "a (tilted probe)");
  const DescriptorSet dB = probe_descriptors(warp_affine(b, probe, true).image, params, "b (tilted probe)");

  ClassificationResult r;
  r.matches_a_probe_b = cross_matches(da, dB, options.ratio);
  r.matches_probe_a_b = cross_matches(dA, db, options.ratio);
  // Tilting the less distorted image brings it closer to the other one.
  if (r.matches_probe_a_b > r.matches_a_probe_b) {
    r.order = AffineOrder::ALower;
  } else if (r.matches_a_probe_b > r.matches_probe_a_b) {
    r.order = AffineOrder::BLower;
  } else {
    r.order = AffineOrder::Tie;
  }
  return r;
}

}  // namespace armatch
