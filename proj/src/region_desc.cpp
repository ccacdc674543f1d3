#include "armatch/region_desc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "armatch/error.hpp"

namespace armatch {

RegionHistogram region_histogram(std::span<const std::int32_t> pixels, const GrayImage& img) {
  require(!pixels.empty(), "region histogram of an empty region");
  RegionHistogram h{};
  const auto px = img.pixels();
  for (std::int32_t p : pixels) {
    const int v = px[static_cast<std::size_t>(p)];
    h[v == 255 ? kHistogramBins - 1 : v / 5] += 1.0;
  }
  const double n = static_cast<double>(pixels.size());
  for (double& b : h) b /= n;
  return h;
}

Vec2 normalize_coords(const BoxD& box, double x, double y) {
  const double wx = box.max_x - box.min_x;
  const double wy = box.max_y - box.min_y;
  if (!(wx > 0.0) || !(wy > 0.0)) fail(ErrorKind::DegenerateRegion, "region bounding box has zero extent");
  return {(x - box.min_x) / wx, (y - box.min_y) / wy};
}

namespace {

BoxD bounding_box(std::span<const Vec2> points) {
  BoxD b{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
         std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
  for (Vec2 p : points) {
    b.min_x = std::min(b.min_x, p.x);
    b.min_y = std::min(b.min_y, p.y);
    b.max_x = std::max(b.max_x, p.x);
    b.max_y = std::max(b.max_y, p.y);
  }
  return b;
}

Vec2 clamp01(Vec2 v) { return {std::clamp(v.x, 0.0, 1.0), std::clamp(v.y, 0.0, 1.0)}; }

}  // namespace

CentroidOrientation centroid_orientation(std::span<const Vec2> points, std::span<const double> intensities) {
  require(!points.empty() && points.size() == intensities.size(), "centroid needs matching points and intensities");
  const BoxD box = bounding_box(points);
  double m00 = 0.0, m10 = 0.0, m01 = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vec2 n = normalize_coords(box, points[i].x, points[i].y);
    m00 += intensities[i];
    m10 += n.x * intensities[i];
    m01 += n.y * intensities[i];
  }
  if (!(m00 > 0.0)) fail(ErrorKind::DegenerateRegion, "region has zero total intensity");
  return {{m10 / m00, m01 / m00}, std::atan2(m01, m10), box};
}

CentroidOrientation centroid_orientation(std::span<const std::int32_t> pixels, const GrayImage& img) {
  std::vector<Vec2> pts;
  std::vector<double> vals;
  pts.reserve(pixels.size());
  vals.reserve(pixels.size());
  const auto px = img.pixels();
  for (std::int32_t p : pixels) {
    pts.push_back({double(p % img.width()), double(p / img.width())});
    vals.push_back(px[static_cast<std::size_t>(p)]);
  }
  return centroid_orientation(pts, vals);
}

RegionFrame region_frame(std::span<const std::int32_t> pixels, int image_width) {
  if (pixels.size() < 3) fail(ErrorKind::DegenerateRegion, "region too small for a shape frame");
  const double n = static_cast<double>(pixels.size());
  double mx = 0.0, my = 0.0;
  for (std::int32_t p : pixels) {
    mx += p % image_width;
    my += p / image_width;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::int32_t p : pixels) {
    const double dx = p % image_width - mx, dy = p / image_width - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  sxx /= n;
  sxy /= n;
  syy /= n;
  const double det = sxx * syy - sxy * sxy;
  if (!(det > 1e-9)) fail(ErrorKind::DegenerateRegion, "region covariance is singular");

  // Inverse square root of the covariance via its eigen-decomposition.
  const double tr = sxx + syy;
  const double disc = std::sqrt(std::max(0.0, 0.25 * (sxx - syy) * (sxx - syy) + sxy * sxy));
  const double l1 = 0.5 * tr + disc, l2 = 0.5 * tr - disc;
  const double a = std::atan2(2.0 * sxy, sxx - syy) * 0.5;
  const Mat2 v = Mat2::rotation(a);
  const Mat2 w = v * Mat2::diagonal(1.0 / std::sqrt(l1), 1.0 / std::sqrt(l2)) * v.transposed();

  double kx = 0.0, ky = 0.0;
  for (std::int32_t p : pixels) {
    const Vec2 y = w * Vec2{p % image_width - mx, p / image_width - my};
    const double r2 = y.x * y.x + y.y * y.y;
    kx += r2 * y.x;
    ky += r2 * y.y;
  }
  const double skew = std::atan2(ky, kx);
  RegionFrame f;
  f.origin = {mx, my};
  f.to_canonical = Mat2::rotation(-skew) * w;
  return f;
}

RegionSignature compute_signature(const Region& region, const GrayImage& img) {
  RegionSignature s;
  s.region_id = region.id;
  s.histogram = region_histogram(region.pixels, img);
  s.frame = region_frame(region.pixels, img.width());
  std::vector<Vec2> pts;
  std::vector<double> vals;
  pts.reserve(region.pixels.size());
  vals.reserve(region.pixels.size());
  const auto px = img.pixels();
  for (std::int32_t p : region.pixels) {
    pts.push_back(s.frame({double(p % img.width()), double(p / img.width())}));
    vals.push_back(px[static_cast<std::size_t>(p)]);
  }
  const CentroidOrientation co = centroid_orientation(pts, vals);
  s.centroid = co.centroid;
  s.orientation = co.orientation;
  s.canonical_box = co.box;
  return s;
}

Vec2 relative_position(Vec2 keypoint, const RegionSignature& signature) {
  const Vec2 c = signature.frame(keypoint);
  const Vec2 n = clamp01(normalize_coords(signature.canonical_box, c.x, c.y));
  return Mat2::rotation(-signature.orientation) * (n - signature.centroid);
}

void FusedDescriptor::append_to(std::vector<float>& out) const {
  out.insert(out.end(), base.begin(), base.end());
  out.insert(out.end(), region_part.begin(), region_part.end());
  out.insert(out.end(), position_part.begin(), position_part.end());
}

FusedDescriptor fuse(const BaseDescriptor& base, const RegionSignature* signature, std::optional<Vec2> relative,
                     double alpha1, double alpha2) {
  require(alpha1 >= 0.0 && alpha2 >= 0.0, "fusion weights must be non-negative");
  FusedDescriptor f;
  f.base = base.values;
  if (signature == nullptr) return f;
  f.has_region = true;
  for (int i = 0; i < kHistogramBins; ++i) f.region_part[i] = static_cast<float>(alpha1 * signature->histogram[i]);
  if (relative) {
    f.position_part = {static_cast<float>(alpha2 * relative->x), static_cast<float>(alpha2 * relative->y)};
  }
  return f;
}

FusionWeights default_weights(const DescriptorFamily& family) {
  if (family.kind == DescriptorKind::BuiltinGrad || family.hint == "sift") return {600.0, 300.0};
  if (family.hint == "surf") return {0.3, 0.1};
  if (family.hint == "orb") return {10.0, 40.0};
  if (family.hint == "akaze" || family.hint == "brisk") return {10.0, 60.0};
  fail(ErrorKind::Configuration, "no default fusion weights for descriptor family '" + family.name() +
                                     "'; set alpha1 and alpha2 explicitly");
}

}  // namespace armatch
