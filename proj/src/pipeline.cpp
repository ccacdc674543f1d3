#include <algorithm>
#include <cmath>
#include <map>
#include <optional>

#include "armatch/error.hpp"
#include "armatch/matching.hpp"
#include "armatch/region_desc.hpp"

namespace armatch {

namespace {

// Prefix sums of "not covered" so a window check is O(1).
class HoleIndex {
 public:
  explicit HoleIndex(const GrayImage& coverage) : w_(coverage.width()), h_(coverage.height()) {
    sums_.assign(static_cast<std::size_t>(w_ + 1) * (h_ + 1), 0);
    for (int y = 0; y < h_; ++y) {
      int row = 0;
      for (int x = 0; x < w_; ++x) {
        row += coverage(x, y) == 0 ? 1 : 0;
        at(x + 1, y + 1) = at(x + 1, y) + row;
      }
    }
  }

  bool clear(double cx, double cy, double radius) const {
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - radius)));
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - radius)));
    const int x1 = std::min(w_, static_cast<int>(std::ceil(cx + radius)) + 1);
    const int y1 = std::min(h_, static_cast<int>(std::ceil(cy + radius)) + 1);
    if (x0 >= x1 || y0 >= y1) return false;
    return at(x1, y1) - at(x0, y1) - at(x1, y0) + at(x0, y0) == 0;
  }

 private:
  int& at(int x, int y) { return sums_[static_cast<std::size_t>(y) * (w_ + 1) + x]; }
  int at(int x, int y) const { return sums_[static_cast<std::size_t>(y) * (w_ + 1) + x]; }
  int w_, h_;
  std::vector<int> sums_;
};

std::vector<std::optional<RegionSignature>> signatures(const RegionMap* regions, const GrayImage& img) {
  std::vector<std::optional<RegionSignature>> out;
  if (regions == nullptr) return out;
  out.resize(regions->regions.size());
  for (std::size_t i = 0; i < regions->regions.size(); ++i) {
    try {
      out[i] = compute_signature(regions->regions[i], img);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateRegion) throw;
    }
  }
  return out;
}

std::vector<float> fused_row(const BaseDescriptor& base, const Keypoint& kp, const RegionMap* regions,
                             const std::vector<std::optional<RegionSignature>>& sigs, const GrayImage& img,
                             const PipelineConfig& config) {
  const RegionSignature* sig = nullptr;
  std::optional<Vec2> rel;
  if (regions != nullptr && kp.orig_x >= -0.5 && kp.orig_y >= -0.5 && kp.orig_x < img.width() - 0.5 &&
      kp.orig_y < img.height() - 0.5) {
    if (auto id = region_at(*regions, kp.orig_x, kp.orig_y); id && sigs[*id - 1]) {
      sig = &*sigs[*id - 1];
      rel = relative_position({kp.orig_x, kp.orig_y}, *sig);
    }
  }
  std::vector<float> row;
  fuse(base, sig, rel, config.alpha1, config.alpha2).append_to(row);
  return row;
}

}  // namespace

DescribedImage describe_image(const GrayImage& img, const ViewSet& views, const RegionMap* regions,
                              const PipelineConfig& config) {
  const auto sigs = signatures(regions, img);
  DescribedImage out;
  out.descriptors.dim = kDescriptorDim + kRegionExtraDim;
  out.descriptors.base_dim = kDescriptorDim;
  for (const SimulatedView& view : views.views) {
    if (view.image.width() < 32 || view.image.height() < 32) continue;
    const ScaleSpace space(view.image, config.detector);
    const FeatureSet fs = describe_keypoints(space, detect_keypoints(space));
    const HoleIndex holes(view.coverage);
    for (std::size_t i = 0; i < fs.keypoints.size(); ++i) {
      Keypoint kp = fs.keypoints[i];
      if (!holes.clear(kp.x, kp.y, descriptor_radius(kp))) continue;
      const Vec2 o = view.to_original({kp.x, kp.y});
      if (o.x < 0.0 || o.y < 0.0 || o.x > img.width() - 1 || o.y > img.height() - 1) continue;
      kp.view_id = view.view_id;
      kp.orig_x = o.x;
      kp.orig_y = o.y;
      const std::vector<float> row = fused_row(fs.descriptors[i], kp, regions, sigs, img, config);
      if (row.size() > kDescriptorDim && std::any_of(row.begin() + kDescriptorDim, row.end(),
                                                     [](float v) { return v != 0.0f; })) {
        ++out.with_region;
      }
      out.descriptors.push_back(row);
      out.keypoints.push_back(kp);
      out.view_of_row.push_back(view.view_id);
    }
  }
  return out;
}

namespace {

DescriptorSet subset(const DescriptorSet& all, const std::vector<int>& rows) {
  DescriptorSet s;
  s.dim = all.dim;
  s.base_dim = all.base_dim;
  s.binary = all.binary;
  s.data.reserve(rows.size() * static_cast<std::size_t>(all.dim));
  for (int r : rows) s.data.insert(s.data.end(), all.row(r), all.row(r) + all.dim);
  return s;
}

std::vector<Match> to_matches(const std::vector<IndexMatch>& im, const std::vector<Keypoint>& ka,
                              const std::vector<int>& rows_a, const std::vector<Keypoint>& kb,
                              const std::vector<int>& rows_b) {
  std::vector<Match> out;
  out.reserve(im.size());
  for (const IndexMatch& m : im) {
    const Keypoint& p = ka[rows_a[m.query]];
    const Keypoint& q = kb[rows_b[m.train]];
    out.push_back({{p.orig_x, p.orig_y}, {q.orig_x, q.orig_y}, m.distance, p.view_id, q.view_id});
  }
  return out;
}

std::vector<int> iota_rows(std::size_t n) {
  std::vector<int> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = static_cast<int>(i);
  return r;
}

std::vector<Match> match_described(const DescribedImage& a, const DescribedImage& b, const PipelineConfig& config) {
  std::vector<Match> raw;
  if (config.pooling == PoolingMode::Pooled) {
    if (b.descriptors.size() < 2) return {};
    const auto ra = iota_rows(a.keypoints.size()), rb = iota_rows(b.keypoints.size());
    raw = to_matches(knn_match(a.descriptors, b.descriptors, config.ratio), a.keypoints, ra, b.keypoints, rb);
  } else {
    std::map<int, std::vector<int>> views_a, views_b;
    for (std::size_t i = 0; i < a.view_of_row.size(); ++i) views_a[a.view_of_row[i]].push_back(static_cast<int>(i));
    for (std::size_t i = 0; i < b.view_of_row.size(); ++i) views_b[b.view_of_row[i]].push_back(static_cast<int>(i));
    std::map<int, DescriptorSet> sets_b;
    for (const auto& [v, rows] : views_b) sets_b[v] = subset(b.descriptors, rows);
    for (const auto& [va, rows_a] : views_a) {
      const DescriptorSet sa = subset(a.descriptors, rows_a);
      for (const auto& [vb, rows_b] : views_b) {
        if (rows_b.size() < 2) continue;
        auto part = to_matches(knn_match(sa, sets_b[vb], config.ratio), a.keypoints, rows_a, b.keypoints, rows_b);
        raw.insert(raw.end(), part.begin(), part.end());
      }
    }
  }
  return dedupe(raw);
}

}  // namespace

PipelineResult match_pipeline(const GrayImage& a, const GrayImage& b, const PipelineConfig& config) {
  config.enhance.validate();
  config.mser.validate();
  require(config.ratio > 0.0 && config.ratio < 1.0, "ratio must lie in (0, 1)");
  require(config.alpha1 >= 0.0 && config.alpha2 >= 0.0, "fusion weights must be non-negative");
  PipelineResult result;

  if (a.width() < 32 || a.height() < 32 || b.width() < 32 || b.height() < 32) {
    result.diagnostic = "image smaller than 32x32; nothing to match";
    return result;
  }
  {
    DetectorParams probe = config.detector;
    probe.max_keypoints = 1;
    if (detect_keypoints(a, probe).empty() || detect_keypoints(b, probe).empty()) {
      result.diagnostic = "no keypoints in one of the images";
      return result;
    }
  }

  ViewSet views_a, views_b;
  if (config.simulation) {
    ClassifyOptions opts;
    opts.theta = config.theta;
    opts.ratio = config.ratio;
    opts.max_keypoints = config.detector.max_keypoints;
    result.classification = classify_affine_pair(a, b, opts);
    result.classified = true;
    const SamplingSets sets = SamplingSets::standard();
    const auto& tilts_a = result.classification.order == AffineOrder::BLower ? sets.reducing : sets.enlarging;
    const auto& tilts_b = result.classification.order == AffineOrder::ALower ? sets.reducing : sets.enlarging;
    views_a = simulate_views(a, tilts_a, sets.phi_values);
    views_b = simulate_views(b, tilts_b, sets.phi_values);
  } else {
    views_a.views.push_back(identity_view(a));
    views_b.views.push_back(identity_view(b));
  }

  const bool use_regions = config.alpha1 > 0.0 || config.alpha2 > 0.0;
  std::optional<RegionMap> regions_a, regions_b;
  GrayImage enhanced_a = a, enhanced_b = b;
  if (use_regions) {
    enhanced_a = enhance(a, config.enhance);
    enhanced_b = enhance(b, config.enhance);
    regions_a = mser_segment(enhanced_a, config.mser);
    regions_b = mser_segment(enhanced_b, config.mser);
  }

  const DescribedImage da = describe_image(enhanced_a, views_a, regions_a ? &*regions_a : nullptr, config);
  const DescribedImage db = describe_image(enhanced_b, views_b, regions_b ? &*regions_b : nullptr, config);
  result.keypoints_a = da.keypoints.size();
  result.keypoints_b = db.keypoints.size();
  if (da.keypoints.empty() || db.keypoints.empty()) {
    result.diagnostic = "no describable keypoints in one of the images";
    return result;
  }
  result.matches = match_described(da, db, config);
  return result;
}

std::vector<Match> match_external(const GrayImage& a, const FeatureSet& fa, const GrayImage& b, const FeatureSet& fb,
                                  const PipelineConfig& config) {
  require(fa.dim == fb.dim, "descriptor files have different dimensions");
  require(fa.family == fb.family, "descriptor files come from different families");
  const bool use_regions = config.alpha1 > 0.0 || config.alpha2 > 0.0;

  auto describe = [&](const GrayImage& img, const FeatureSet& fs) {
    std::optional<RegionMap> regions;
    GrayImage enhanced = img;
    if (use_regions) {
      enhanced = enhance(img, config.enhance);
      regions = mser_segment(enhanced, config.mser);
    }
    const auto sigs = signatures(regions ? &*regions : nullptr, enhanced);
    DescribedImage d;
    d.descriptors.dim = fs.dim + kRegionExtraDim;
    d.descriptors.base_dim = fs.dim;
    d.descriptors.binary = fs.family.is_binary();
    for (std::size_t i = 0; i < fs.keypoints.size(); ++i) {
      Keypoint kp = fs.keypoints[i];
      kp.orig_x = kp.x;
      kp.orig_y = kp.y;
      d.descriptors.push_back(fused_row(fs.descriptors[i], kp, regions ? &*regions : nullptr, sigs, enhanced, config));
      d.keypoints.push_back(kp);
      d.view_of_row.push_back(0);
    }
    return d;
  };
  const DescribedImage da = describe(a, fa);
  const DescribedImage db = describe(b, fb);
  if (da.keypoints.empty() || db.keypoints.size() < 2) return {};
  PipelineConfig pooled = config;
  pooled.pooling = PoolingMode::Pooled;
  return match_described(da, db, pooled);
}

}  // namespace armatch
