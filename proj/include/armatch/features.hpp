#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "armatch/image.hpp"

namespace armatch {

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double scale = 0.0;  // Gaussian sigma in image pixels
  double angle = 0.0;  // radians
  int view_id = 0;
  double orig_x = 0.0;
  double orig_y = 0.0;
  float response = 0.0f;
  int octave = -1;    // -1 when not produced by the detector
  double layer = 0.0;  // fractional scale index within the octave
};

enum class DescriptorKind { BuiltinGrad, External };

/// Family tag plus, for external descriptors, the producing method's name
/// from the interchange header ("sift", "surf", "orb", "akaze", "brisk").
struct DescriptorFamily {
  DescriptorKind kind = DescriptorKind::BuiltinGrad;
  std::string hint;

  static DescriptorFamily builtin() { return {}; }
  static DescriptorFamily external(std::string name) {
    return {DescriptorKind::External, std::move(name)};
  }
  /// Bytes compared with Hamming distance (ORB, AKAZE, BRISK).
  bool is_binary() const;
  std::string name() const;
  friend bool operator==(const DescriptorFamily&, const DescriptorFamily&) = default;
};

struct BaseDescriptor {
  std::vector<float> values;
  DescriptorFamily family;
};

inline constexpr int kDescriptorDim = 128;

struct DetectorParams {
  int octaves = 3;
  int scales_per_octave = 3;
  double sigma0 = 1.6;
  double assumed_blur = 0.5;
  double contrast_threshold = 0.03 * 255.0;
  double edge_ratio = 10.0;
  /// Keep only the strongest responses; 0 keeps all.
  int max_keypoints = 0;
};

/// Gaussian and difference-of-Gaussian pyramid of one image.
class ScaleSpace {
 public:
  ScaleSpace(const GrayImage& img, const DetectorParams& params = {});

  int octaves() const { return static_cast<int>(gaussians_.size()); }
  const FloatImage& gaussian(int octave, int index) const { return gaussians_[octave][index]; }
  const FloatImage& dog(int octave, int index) const { return dogs_[octave][index]; }
  const DetectorParams& params() const { return params_; }
  int width() const { return width_; }
  int height() const { return height_; }
  /// Sigma (image pixels) of gaussian(octave, index).
  double sigma(int octave, double index) const;

 private:
  DetectorParams params_;
  int width_ = 0;
  int height_ = 0;
  std::vector<std::vector<FloatImage>> gaussians_;
  std::vector<std::vector<FloatImage>> dogs_;
};

/// Scale-space extrema of the DoG pyramid, refined to sub-pixel accuracy,
/// filtered for contrast and edge response, one keypoint per dominant
/// orientation. Requires at least 32x32.
std::vector<Keypoint> detect_keypoints(const GrayImage& img, const DetectorParams& params = {});
std::vector<Keypoint> detect_keypoints(const ScaleSpace& space);

/// 4x4 cells x 8 orientations of Gaussian-weighted gradients in the rotated,
/// scale-normalized patch; normalized, clipped at 0.2, renormalized, scaled by
/// 512 and clamped to [0, 256]. Throws DescriptorUnavailable when the patch
/// leaves the image.
BaseDescriptor compute_base_descriptor(const ScaleSpace& space, const Keypoint& kp);
BaseDescriptor compute_base_descriptor(const GrayImage& img, const Keypoint& kp);

/// Radius (image pixels) of the sample patch around a keypoint.
double descriptor_radius(const Keypoint& kp);

/// Keypoints whose patch fits, with their descriptors (parallel arrays).
struct FeatureSet {
  std::vector<Keypoint> keypoints;
  std::vector<BaseDescriptor> descriptors;
  DescriptorFamily family;
  int dim = kDescriptorDim;
};

FeatureSet describe_keypoints(const ScaleSpace& space, const std::vector<Keypoint>& keypoints);

// Interchange format: `DESC <dim> [family]`, optional `#` comment lines, then
// `x y scale angle v1 ... v<dim>` per feature.
FeatureSet load_external_descriptors(const std::filesystem::path& path);
FeatureSet parse_feature_text(const std::string& text, const std::string& source_name);
void write_feature_file(const std::filesystem::path& path, const std::vector<Keypoint>& keypoints,
                        const std::vector<std::vector<float>>& values, int dim,
                        const std::string& family_tag, const std::string& comment = {});

}  // namespace armatch
