#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "armatch/affine.hpp"
#include "armatch/affine_sim.hpp"
#include "armatch/features.hpp"
#include "armatch/imaging.hpp"
#include "armatch/mser.hpp"

namespace armatch {

/// Row-major descriptor matrix. For binary families the first base_dim
/// entries are bytes compared by Hamming distance and the rest (region and
/// position parts) by Euclidean distance; the two are summed.
struct DescriptorSet {
  int dim = 0;
  int base_dim = 0;
  bool binary = false;
  std::vector<float> data;

  std::size_t size() const { return dim == 0 ? 0 : data.size() / static_cast<std::size_t>(dim); }
  const float* row(std::size_t i) const { return data.data() + i * static_cast<std::size_t>(dim); }
  void push_back(const std::vector<float>& values);
};

DescriptorSet make_descriptor_set(const FeatureSet& features);

/// Squared Euclidean distance accumulated in eight fixed lanes; the result is
/// independent of threading and identical for every caller.
float squared_l2(const float* a, const float* b, int dim);
double descriptor_distance(const DescriptorSet& set, const float* a, const float* b);

struct IndexMatch {
  int query = 0;
  int train = 0;
  double distance = 0.0;
  double second_distance = 0.0;
};

/// Exact two-nearest-neighbour search from each row of a into b; keeps the
/// query when d1 < ratio * d2. Requires |b| >= 2 and 0 < ratio < 1.
std::vector<IndexMatch> knn_match(const DescriptorSet& a, const DescriptorSet& b, double ratio);

struct Match {
  Vec2 a;
  Vec2 b;
  double distance = 0.0;
  int view_a = 0;
  int view_b = 0;
};

/// Buckets by both endpoints on a 2-px grid keeping the lowest distance, then
/// keeps one match per 2-px A position. Output sorted by A bucket.
std::vector<Match> dedupe(const std::vector<Match>& matches);

/// `ax ay bx by distance` per line, 6 significant digits.
void write_matches(const std::filesystem::path& path, const std::vector<Match>& matches);
std::vector<Match> read_matches(const std::filesystem::path& path);

enum class PoolingMode {
  /// Ratio test inside each (view of A, view of B) pair, results pooled.
  PerViewPair,
  /// Every view's descriptors in one pool per image.
  Pooled,
};

struct PipelineConfig {
  EnhanceParams enhance;
  MserParams mser;
  DetectorParams detector{.max_keypoints = 800};
  double ratio = 0.8;
  double alpha1 = 600.0;
  double alpha2 = 300.0;
  bool simulation = true;
  double theta = kClassificationAngle;
  PoolingMode pooling = PoolingMode::PerViewPair;
};

/// Keypoints of one image across its simulated views, in original coordinates,
/// with fused descriptors.
struct DescribedImage {
  std::vector<Keypoint> keypoints;
  DescriptorSet descriptors;
  std::vector<int> view_of_row;
  std::size_t with_region = 0;
};

DescribedImage describe_image(const GrayImage& img, const ViewSet& views, const RegionMap* regions,
                              const PipelineConfig& config);

struct PipelineResult {
  std::vector<Match> matches;
  ClassificationResult classification;
  bool classified = false;
  std::size_t keypoints_a = 0;
  std::size_t keypoints_b = 0;
  std::string diagnostic;
};

/// Classify, simulate, enhance + segment originals, detect and describe all
/// views, fuse region information, match, dedupe.
PipelineResult match_pipeline(const GrayImage& a, const GrayImage& b, const PipelineConfig& config);

/// Matches between two externally described images (interchange files).
/// Region parts come from segmenting the given originals.
std::vector<Match> match_external(const GrayImage& a, const FeatureSet& fa, const GrayImage& b,
                                  const FeatureSet& fb, const PipelineConfig& config);

}  // namespace armatch
