#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "armatch/affine_sim.hpp"
#include "armatch/error.hpp"
#include "armatch/imaging.hpp"
#include "armatch/region_desc.hpp"
#include "region_raster.hpp"

using namespace armatch;
using test::raster;
using test::RasterRegion;

namespace {

constexpr double kPi = std::numbers::pi;

double dist(Vec2 a, Vec2 b) { return norm(a - b); }

}  // namespace

TEST(RegionHistogram, UniformRegionFillsOneBin) {
  GrayImage img(4, 4, 7);
  const std::vector<std::int32_t> px = {0, 1, 2, 5, 6};
  const auto h = region_histogram(px, img);
  EXPECT_DOUBLE_EQ(h[1], 1.0);
  EXPECT_DOUBLE_EQ(std::accumulate(h.begin(), h.end(), 0.0), 1.0);
}

TEST(RegionHistogram, BlackAndWhiteHalves) {
  GrayImage img(4, 1);
  img(2, 0) = 255;
  img(3, 0) = 255;
  const std::vector<std::int32_t> px = {0, 1, 2, 3};
  const auto h = region_histogram(px, img);
  EXPECT_DOUBLE_EQ(h[0], 0.5);
  EXPECT_DOUBLE_EQ(h[51], 0.5);
  EXPECT_DOUBLE_EQ(h[50], 0.0);
}

TEST(RegionHistogram, MatchesBruteForceBinning) {
  std::mt19937 rng(3);
  GrayImage img(16, 16);
  for (auto& v : img.pixels()) v = static_cast<std::uint8_t>(rng() % 256);
  std::vector<std::int32_t> px;
  for (int i = 0; i < 256; i += 3) px.push_back(i);
  const auto h = region_histogram(px, img);
  for (int k = 0; k < kHistogramBins; ++k) {
    int count = 0;
    for (std::int32_t p : px) {
      const int v = img.pixels()[p];
      const bool in = k < 51 ? (v >= 5 * k && v <= 5 * k + 4) : v == 255;
      count += in;
    }
    EXPECT_DOUBLE_EQ(h[k], static_cast<double>(count) / px.size()) << k;
  }
  EXPECT_THROW(region_histogram({}, img), Error);
}

TEST(NormalizeCoords, BoxExample) {
  const Vec2 n = normalize_coords({10, 20, 30, 60}, 15, 50);
  EXPECT_DOUBLE_EQ(n.x, 0.25);
  EXPECT_DOUBLE_EQ(n.y, 0.75);
  try {
    normalize_coords({5, 0, 5, 10}, 5, 5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateRegion);
  }
}

TEST(CentroidOrientation, SymmetricRegionCentred) {
  std::vector<Vec2> pts;
  std::vector<double> w;
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x) {
      pts.push_back({double(x), double(y)});
      w.push_back(10.0);
    }
  const auto co = centroid_orientation(pts, w);
  EXPECT_NEAR(co.centroid.x, 0.5, 1e-12);
  EXPECT_NEAR(co.centroid.y, 0.5, 1e-12);
  EXPECT_NEAR(co.orientation, kPi / 4, 1e-12);

  std::vector<double> doubled = w;
  for (double& v : doubled) v *= 2;
  const auto co2 = centroid_orientation(pts, doubled);
  EXPECT_NEAR(co2.centroid.x, co.centroid.x, 1e-12);
  EXPECT_NEAR(co2.orientation, co.orientation, 1e-12);
}

TEST(CentroidOrientation, WeightedTowardsBrightSide) {
  const std::vector<Vec2> pts = {{0, 0}, {10, 0}, {0, 10}, {10, 10}};
  const std::vector<double> w = {1, 3, 1, 3};
  const auto co = centroid_orientation(pts, w);
  EXPECT_NEAR(co.centroid.x, 0.75, 1e-12);
  EXPECT_NEAR(co.centroid.y, 0.5, 1e-12);
  EXPECT_NEAR(co.orientation, std::atan2(0.5, 0.75), 1e-12);
  EXPECT_THROW(centroid_orientation(pts, std::vector<double>(4, 0.0)), Error);
}

TEST(RegionFrame, WhitensCovariance) {
  const RasterRegion r = raster(pose_matrix({1.0, 0.3, 1.8, 0.7}));
  const RegionFrame f = region_frame(r.region.pixels, 300);
  double sxx = 0, sxy = 0, syy = 0, mx = 0, my = 0;
  for (std::int32_t p : r.region.pixels) {
    const Vec2 c = f({double(p % 300), double(p / 300)});
    mx += c.x;
    my += c.y;
    sxx += c.x * c.x;
    sxy += c.x * c.y;
    syy += c.y * c.y;
  }
  const double n = r.region.pixels.size();
  EXPECT_NEAR(mx / n, 0.0, 1e-9);
  EXPECT_NEAR(my / n, 0.0, 1e-9);
  EXPECT_NEAR(sxx / n, 1.0, 1e-9);
  EXPECT_NEAR(syy / n, 1.0, 1e-9);
  EXPECT_NEAR(sxy / n, 0.0, 1e-9);
  EXPECT_THROW(region_frame(std::vector<std::int32_t>{0, 1, 2, 3}, 300), Error);
}

TEST(RelativePosition, InvariantUnderRotation) {
  const RasterRegion ref = raster(Mat2{});
  const RegionSignature s0 = compute_signature(ref.region, ref.image);
  const std::vector<Vec2> probes = {{10, 5}, {-20, 8}, {28, -12}, {0, -15}};
  for (double psi : {0.3, 1.1, 2.5, -0.8}) {
    const RasterRegion r = raster(Mat2::rotation(psi));
    const RegionSignature s = compute_signature(r.region, r.image);
    for (Vec2 p : probes) {
      const Vec2 a = relative_position(ref.source_to_image(p), s0);
      const Vec2 b = relative_position(r.source_to_image(p), s);
      EXPECT_LT(dist(a, b), 0.02) << psi;
    }
  }
}

TEST(RelativePosition, InvariantUnderRandomPoses) {
  const RasterRegion ref = raster(Mat2{});
  const RegionSignature s0 = compute_signature(ref.region, ref.image);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ang(-kPi, kPi), tilt(1.0, 2.0), scale(0.8, 1.5);
  const std::vector<Vec2> probes = {{10, 5}, {-20, 8}, {28, -12}};
  for (int i = 0; i < 20; ++i) {
    const AffinePose pose{scale(rng), ang(rng), tilt(rng), ang(rng) / 2};
    const RasterRegion r = raster(pose_matrix(pose));
    const RegionSignature s = compute_signature(r.region, r.image);
    for (Vec2 p : probes) {
      const Vec2 a = relative_position(ref.source_to_image(p), s0);
      const Vec2 b = relative_position(r.source_to_image(p), s);
      EXPECT_LT(dist(a, b), 0.05) << i;
    }
  }
}

TEST(RegionHistogram, StableUnderWarp) {
  const RasterRegion ref = raster(Mat2{});
  const RasterRegion tilted = raster(pose_matrix({1.0, 0.4, 2.0, 0.2}));
  const auto h0 = region_histogram(ref.region.pixels, ref.image);
  const auto h1 = region_histogram(tilted.region.pixels, tilted.image);
  double l1 = 0;
  for (int k = 0; k < kHistogramBins; ++k) l1 += std::abs(h0[k] - h1[k]);
  EXPECT_LT(l1, 0.15);
}

TEST(Fuse, ZeroWeightsAndMissingRegion) {
  const RasterRegion ref = raster(Mat2{});
  const RegionSignature s = compute_signature(ref.region, ref.image);
  BaseDescriptor base{std::vector<float>(128, 3.0f), DescriptorFamily::builtin()};
  const Vec2 rel = relative_position({160, 150}, s);

  const FusedDescriptor zero = fuse(base, &s, rel, 0.0, 0.0);
  EXPECT_EQ(zero.dim(), 182u);
  for (float v : zero.region_part) EXPECT_EQ(v, 0.0f);
  EXPECT_EQ(zero.position_part[0], 0.0f);
  std::vector<float> row;
  zero.append_to(row);
  ASSERT_EQ(row.size(), 182u);
  EXPECT_TRUE(std::equal(base.values.begin(), base.values.end(), row.begin()));

  const FusedDescriptor none = fuse(base, nullptr, std::nullopt, 600, 300);
  EXPECT_FALSE(none.has_region);
  for (float v : none.region_part) EXPECT_EQ(v, 0.0f);

  const FusedDescriptor full = fuse(base, &s, rel, 600, 300);
  EXPECT_NEAR(std::accumulate(full.region_part.begin(), full.region_part.end(), 0.0), 600.0, 1e-3);
  const FusedDescriptor twice = fuse(base, &s, rel, 1200, 600);
  for (int k = 0; k < kHistogramBins; ++k) EXPECT_FLOAT_EQ(twice.region_part[k], 2 * full.region_part[k]);
  EXPECT_FLOAT_EQ(full.position_part[0], static_cast<float>(300 * rel.x));
  EXPECT_FLOAT_EQ(twice.position_part[1], 2 * full.position_part[1]);
  EXPECT_THROW(fuse(base, &s, rel, -1, 0), Error);
}

TEST(Fuse, DefaultWeights) {
  EXPECT_EQ(default_weights(DescriptorFamily::builtin()).alpha1, 600.0);
  EXPECT_EQ(default_weights(DescriptorFamily::external("sift")).alpha2, 300.0);
  EXPECT_EQ(default_weights(DescriptorFamily::external("surf")).alpha1, 0.3);
  EXPECT_EQ(default_weights(DescriptorFamily::external("surf")).alpha2, 0.1);
  EXPECT_EQ(default_weights(DescriptorFamily::external("orb")).alpha2, 40.0);
  EXPECT_EQ(default_weights(DescriptorFamily::external("akaze")).alpha2, 60.0);
  EXPECT_EQ(default_weights(DescriptorFamily::external("brisk")).alpha1, 10.0);
  try {
    default_weights(DescriptorFamily::external("freak"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Configuration);
  }
}
