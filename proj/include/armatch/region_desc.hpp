#pragma once

#include <array>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "armatch/affine.hpp"
#include "armatch/features.hpp"
#include "armatch/image.hpp"
#include "armatch/mser.hpp"

namespace armatch {

inline constexpr int kHistogramBins = 52;
inline constexpr int kRegionExtraDim = kHistogramBins + 2;

using RegionHistogram = std::array<double, kHistogramBins>;

/// Bins of five gray levels: bin k holds [5k, 5k+4] for k < 51, bin 51 holds
/// 255 alone. Normalized by the pixel count.
RegionHistogram region_histogram(std::span<const std::int32_t> pixels, const GrayImage& img);

struct BoxD {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;
};

/// (x - min_x) / (max_x - min_x), same for y. Zero-extent boxes throw
/// DegenerateRegion.
Vec2 normalize_coords(const BoxD& box, double x, double y);

struct CentroidOrientation {
  Vec2 centroid;       // normalized coordinates
  double orientation;  // atan2(m01, m10)
  BoxD box;            // bounding box used for the normalization
};

/// Intensity moments m00, m10, m01 over bbox-normalized coordinates.
CentroidOrientation centroid_orientation(std::span<const Vec2> points,
                                         std::span<const double> intensities);
/// Same, on raw pixel coordinates of a region.
CentroidOrientation centroid_orientation(std::span<const std::int32_t> pixels,
                                         const GrayImage& img);

/// Affine normalization of a region: translate to the area centroid, whiten
/// by the pixel covariance, rotate so the shape's third-order skew points
/// along +x. Two views of a region related by an orientation-preserving affine
/// map land on the same canonical shape.
struct RegionFrame {
  Vec2 origin;
  Mat2 to_canonical;

  Vec2 operator()(Vec2 p) const { return to_canonical * (p - origin); }
};

RegionFrame region_frame(std::span<const std::int32_t> pixels, int image_width);

struct RegionSignature {
  RegionHistogram histogram{};
  Vec2 centroid;
  double orientation = 0.0;
  int region_id = 0;
  RegionFrame frame;
  BoxD canonical_box;
};

RegionSignature compute_signature(const Region& region, const GrayImage& img);

/// Keypoint position relative to the grayscale centroid, in the region's
/// canonical frame, rotated by -orientation.
Vec2 relative_position(Vec2 keypoint, const RegionSignature& signature);

struct FusedDescriptor {
  std::vector<float> base;
  std::array<float, kHistogramBins> region_part{};
  std::array<float, 2> position_part{};
  bool has_region = false;

  std::size_t dim() const { return base.size() + kRegionExtraDim; }
  void append_to(std::vector<float>& out) const;
};

FusedDescriptor fuse(const BaseDescriptor& base, const RegionSignature* signature,
                     std::optional<Vec2> relative, double alpha1, double alpha2);

struct FusionWeights {
  double alpha1 = 0.0;
  double alpha2 = 0.0;
};

/// Per-family weights: built-in or SIFT-scale (600, 300), SURF-scale
/// (0.3, 0.1), ORB (10, 40), AKAZE and BRISK (10, 60).
FusionWeights default_weights(const DescriptorFamily& family);

}  // namespace armatch
