#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "armatch/affine_sim.hpp"
#include "armatch/error.hpp"
#include "armatch/imaging.hpp"
#include "armatch/synth.hpp"
#include "test_util.hpp"

using namespace armatch;

namespace {
constexpr double kDeg = std::numbers::pi / 180.0;
const double kSqrt2 = std::numbers::sqrt2;
}  // namespace

TEST(Tilt, FromAngle) {
  EXPECT_DOUBLE_EQ(tilt_from_angle(0.0), 1.0);
  EXPECT_NEAR(tilt_from_angle(45 * kDeg), 1.41421, 1e-5);
  EXPECT_NEAR(tilt_from_angle(60 * kDeg), 2.0, 1e-12);
  EXPECT_THROW(tilt_from_angle(std::numbers::pi / 2), Error);
  EXPECT_THROW(tilt_from_angle(-0.1), Error);
}

TEST(Pose, MatrixExamples) {
  const Mat2 id = pose_matrix({1, 0, 1, 0});
  EXPECT_DOUBLE_EQ(id.a, 1);
  EXPECT_DOUBLE_EQ(id.b, 0);
  EXPECT_DOUBLE_EQ(id.c, 0);
  EXPECT_DOUBLE_EQ(id.d, 1);
  const Mat2 d = pose_matrix({1, 0, 2, 0});
  EXPECT_DOUBLE_EQ(d.a, 2);
  EXPECT_DOUBLE_EQ(d.d, 1);
  EXPECT_DOUBLE_EQ(d.b, 0);

  // Independent three-matrix product.
  const double l = 2, psi = 30 * kDeg, t = kSqrt2, phi = -15 * kDeg;
  const double r1[4] = {std::cos(psi), -std::sin(psi), std::sin(psi), std::cos(psi)};
  const double r2[4] = {std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi)};
  const double dr[4] = {t * r2[0], t * r2[1], r2[2], r2[3]};
  const double m[4] = {l * (r1[0] * dr[0] + r1[1] * dr[2]), l * (r1[0] * dr[1] + r1[1] * dr[3]),
                       l * (r1[2] * dr[0] + r1[3] * dr[2]), l * (r1[2] * dr[1] + r1[3] * dr[3])};
  const Mat2 p = pose_matrix({l, psi, t, phi});
  EXPECT_NEAR(p.a, m[0], 1e-12);
  EXPECT_NEAR(p.b, m[1], 1e-12);
  EXPECT_NEAR(p.c, m[2], 1e-12);
  EXPECT_NEAR(p.d, m[3], 1e-12);
  EXPECT_NEAR(p.det(), 4 * kSqrt2, 1e-12);
}

TEST(Pose, DeterminantIsLambdaSquaredT) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> lam(0.2, 5), ang(-4, 4), tilt(0.1, 8);
  for (int i = 0; i < 1000; ++i) {
    const AffinePose p{lam(rng), ang(rng), tilt(rng), ang(rng)};
    EXPECT_NEAR(pose_matrix(p).det(), p.lambda * p.lambda * p.t, 1e-9 * std::max(1.0, p.lambda * p.lambda * p.t));
  }
  EXPECT_THROW(pose_matrix({1, 0, 0, 0}), Error);
  EXPECT_THROW(pose_matrix({-1, 0, 1, 0}), Error);
}

TEST(SamplingSets, Invariants) {
  const SamplingSets s = SamplingSets::standard();
  ASSERT_EQ(s.enlarging.size(), 3u);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(s.reducing[i], s.enlarging[2 - i] / 4.0, 1e-15);
  EXPECT_EQ(s.phi_values.size() * s.enlarging.size(), 18u);
  EXPECT_NEAR(s.phi_values.front(), -45 * kDeg, 1e-15);
  EXPECT_NEAR(s.phi_values.back(), 30 * kDeg, 1e-15);
}

TEST(SamplingSets, ClosedFormConstants) {
  const SamplingSets s = SamplingSets::standard();
  EXPECT_NEAR(max_affine(s.reducing, s.enlarging), 8.0, 1e-12);
  EXPECT_NEAR(average_differ(s.enlarging, s.reducing, 4.0), 0.0, 1e-12);
  std::vector<double> asift = SamplingSets::asift_tilts();
  std::vector<double> with_identity = asift;
  with_identity.insert(with_identity.begin(), 1.0);
  EXPECT_NEAR(max_affine(with_identity, asift), 4 * kSqrt2, 1e-12);
  const double expected = 3.0 * (kSqrt2 + 2 + 2 * kSqrt2 + 4 + 4 * kSqrt2) / 5.0;
  EXPECT_NEAR(average_differ(asift, asift, 4.0), expected, 1e-12);
  EXPECT_NEAR(expected, 9.54, 0.005);
  EXPECT_DOUBLE_EQ(max_affine({1.0}, {1.0}), 1.0);
  EXPECT_DOUBLE_EQ(average_differ({2.0, 3.0}, {2.0, 3.0}, 1.0), 0.0);
}

TEST(Simulate, EighteenViewsPlusIdentity) {
  const GrayImage img = test::random_image(40, 30, 2);
  const SamplingSets s = SamplingSets::standard();
  const ViewSet v = simulate_views(img, s.enlarging, s.phi_values);
  ASSERT_EQ(v.views.size(), 19u);
  EXPECT_TRUE(v.warnings.empty());
  EXPECT_EQ(v.views.back().view_id, 0);
  for (std::size_t i = 0; i + 1 < v.views.size(); ++i) EXPECT_EQ(v.views[i].view_id, static_cast<int>(i) + 1);
}

TEST(Simulate, UnitTiltIsIdentity) {
  const GrayImage img = test::random_image(33, 21, 3);
  const ViewSet v = simulate_views(img, {1.0}, {0.0});
  ASSERT_EQ(v.views.size(), 2u);
  EXPECT_EQ(v.views[0].image, img);
  EXPECT_EQ(v.views[1].image, img);
}

TEST(Simulate, TiltTwoHalvesWidth) {
  const GrayImage img = test::random_image(64, 64, 4);
  const ViewSet v = simulate_views(img, {2.0}, {0.0});
  EXPECT_EQ(v.views[0].image.width(), 32);
  EXPECT_EQ(v.views[0].image.height(), 64);
}

TEST(Simulate, CornersRoundTrip) {
  const GrayImage img = test::random_image(50, 40, 5);
  const SamplingSets s = SamplingSets::standard();
  for (const auto* tilts : {&s.enlarging, &s.reducing}) {
    const ViewSet v = simulate_views(img, *tilts, s.phi_values);
    for (const SimulatedView& view : v.views) {
      for (Vec2 c : {Vec2{0, 0}, Vec2{50, 0}, Vec2{0, 40}, Vec2{50, 40}}) {
        const Vec2 back = view.to_original(view.from_original(c));
        EXPECT_NEAR(back.x, c.x, 1e-6);
        EXPECT_NEAR(back.y, c.y, 1e-6);
        // The linear part of the view map is the inverse of the pose matrix.
        const Mat2 pm = pose_matrix({1, -view.pose.phi, view.pose.t, 0});
        EXPECT_NEAR(view.to_original.linear.a, pm.a, 1e-12);
        EXPECT_NEAR(view.to_original.linear.b, pm.b, 1e-12);
        EXPECT_NEAR(view.to_original.linear.c, pm.c, 1e-12);
        EXPECT_NEAR(view.to_original.linear.d, pm.d, 1e-12);
      }
    }
  }
}

TEST(Simulate, ManifestLayout) {
  const auto dir = test::temp_dir("views");
  const GrayImage img = test::random_image(40, 40, 6);
  const SamplingSets s = SamplingSets::standard();
  write_view_set(simulate_views(img, s.enlarging, s.phi_values), dir);
  int files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) files += e.path().extension() == ".pgm";
  EXPECT_EQ(files, 19);
  std::ifstream m(dir / "manifest.txt");
  std::string line;
  int lines = 0;
  while (std::getline(m, line)) {
    std::istringstream ls(line);
    double v;
    int n = 0;
    while (ls >> v) ++n;
    EXPECT_EQ(n, 9) << line;
    ++lines;
  }
  EXPECT_EQ(lines, 19);
}

namespace {

GrayImage tilt_x(const GrayImage& img, double theta) {
  return warp_affine(img, Affine2{Mat2::diagonal(1.0 / tilt_from_angle(theta), 1.0), {}}, true).image;
}

}  // namespace

TEST(Classify, WarpedImageIsHigherAffine) {
  const GrayImage a = synth::textured_image(256, 256, 7);
  const GrayImage b = tilt_x(a, 40 * kDeg);
  const ClassificationResult ab = classify_affine_pair(a, b);
  EXPECT_EQ(ab.order, AffineOrder::ALower);
  const ClassificationResult ba = classify_affine_pair(b, a);
  EXPECT_EQ(ba.order, AffineOrder::BLower);
  // Swapping the pair swaps the two counts exactly.
  EXPECT_EQ(ab.matches_a_probe_b, ba.matches_probe_a_b);
  EXPECT_EQ(ab.matches_probe_a_b, ba.matches_a_probe_b);
}

TEST(Classify, IdenticalImagesTie) {
  const GrayImage a = synth::textured_image(192, 192, 8);
  const ClassificationResult r = classify_affine_pair(a, a);
  EXPECT_EQ(r.order, AffineOrder::Tie);
  EXPECT_EQ(r.matches_a_probe_b, r.matches_probe_a_b);
}

TEST(Classify, FeaturelessImageFails) {
  const GrayImage a = synth::textured_image(128, 128, 9);
  try {
    classify_affine_pair(a, GrayImage(128, 128, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ClassificationFailed);
    EXPECT_NE(std::string(e.what()).find(" b"), std::string::npos);
  }
}
