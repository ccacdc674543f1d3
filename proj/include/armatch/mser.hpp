#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "armatch/image.hpp"

namespace armatch {

struct MserParams {
  int delta = 5;
  double max_variation = 0.25;
  int min_area = 60;
  /// Zero selects 0.144 * image area.
  int max_area = 0;
  double overlap_merge_threshold = 0.6;

  void validate() const;
  int resolved_max_area(const GrayImage& img) const;
};

enum class Polarity : std::uint8_t { Dark, Light };

struct BoundingBox {
  int min_x = 0;
  int min_y = 0;
  int max_x = 0;
  int max_y = 0;
};

/// An accepted extremal region before partitioning: a connected component of
/// {I <= level} (dark) or {I >= level} (light).
struct ExtremalRegion {
  Polarity polarity = Polarity::Dark;
  int level = 0;        // threshold in original intensities
  double variation = 0;  // (|Q_{level+delta}| - |Q_level|) / |Q_level|
  std::vector<std::int32_t> pixels;  // sorted linear indices
};

/// Stable regions of one polarity from the union-find component tree. A run
/// of equal variation along a branch counts as one minimum and is reported at
/// the node nearest its middle level; the whole-image component is never
/// reported.
std::vector<ExtremalRegion> extract_extremal_regions(const GrayImage& img, Polarity polarity,
                                                     const MserParams& params);

struct Region {
  int id = 0;
  std::vector<std::int32_t> pixels;  // sorted linear indices
  int area = 0;
  BoundingBox bbox;
  double mean_intensity = 0.0;
  double centroid_x = 0.0;
  double centroid_y = 0.0;
};

/// Per-pixel partition into regions; label 0 means no stable region.
struct RegionMap {
  int width = 0;
  int height = 0;
  std::vector<std::int32_t> label;
  std::vector<Region> regions;  // regions[i].id == i + 1

  const Region& region(int id) const { return regions.at(static_cast<std::size_t>(id) - 1); }
};

/// Both polarities, overlap merging (IoU above the threshold, the larger
/// region keeps its identity), then a partition in which each pixel belongs to
/// the smallest region containing it.
RegionMap mser_segment(const GrayImage& img, const MserParams& params);

/// Merged extremal regions prior to partitioning, in canonical order.
std::vector<std::vector<std::int32_t>> merge_overlapping(
    std::vector<std::vector<std::int32_t>> regions, double threshold);

/// Label at the nearest pixel (coordinates rounded half up); nullopt for 0.
std::optional<int> region_at(const RegionMap& map, double x, double y);

/// Label image (id mod 255, nonzero ids never map to 0) and the
/// `region_id area min_x min_y max_x max_y` sidecar.
GrayImage label_image(const RegionMap& map);
void write_region_dump(const RegionMap& map, const std::filesystem::path& label_pgm,
                       const std::filesystem::path& sidecar);

}  // namespace armatch
