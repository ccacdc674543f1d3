#include "armatch/features.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <tuple>

#include "armatch/error.hpp"
#include "armatch/imaging.hpp"
#include "armatch/parallel.hpp"

namespace armatch {

bool DescriptorFamily::is_binary() const {
  return kind == DescriptorKind::External && (hint == "orb" || hint == "akaze" || hint == "brisk");
}

std::string DescriptorFamily::name() const {
  return kind == DescriptorKind::BuiltinGrad ? "builtin" : (hint.empty() ? "external" : hint);
}

namespace {

constexpr int kBorder = 5;
constexpr int kRefineSteps = 5;
constexpr int kOrientationBins = 36;
constexpr double kOrientationPeakRatio = 0.8;
constexpr int kCells = 4;
constexpr int kAngleBins = 8;
constexpr double kDescriptorClip = 0.2;
constexpr double kDescriptorScale = 512.0;

FloatImage downsample(const FloatImage& img) {
  FloatImage out((img.width + 1) / 2, (img.height + 1) / 2);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) out(x, y) = img(2 * x, 2 * y);
  return out;
}

double octave_factor(int octave) { return std::ldexp(1.0, octave); }

}  // namespace

ScaleSpace::ScaleSpace(const GrayImage& img, const DetectorParams& params)
    : params_(params), width_(img.width()), height_(img.height()) {
  require(params.octaves >= 1 && params.scales_per_octave >= 1, "bad scale-space parameters");
  const int s = params.scales_per_octave;
  const double k = std::pow(2.0, 1.0 / s);

  const double init_sigma = std::sqrt(std::max(
      params.sigma0 * params.sigma0 - params.assumed_blur * params.assumed_blur, 0.01));
  FloatImage base = gaussian_blur(to_float(img), init_sigma);

  std::vector<double> increments(s + 3, 0.0);
  for (int i = 1; i < s + 3; ++i) {
    const double prev = params.sigma0 * std::pow(k, i - 1);
    const double total = prev * k;
    increments[i] = std::sqrt(total * total - prev * prev);
  }

  for (int o = 0; o < params.octaves; ++o) {
    if (o > 0) {
      if (base.width < 2 * kBorder + 3 || base.height < 2 * kBorder + 3) break;
    }
    std::vector<FloatImage> gauss;
    gauss.reserve(s + 3);
    gauss.push_back(base);
    for (int i = 1; i < s + 3; ++i) gauss.push_back(gaussian_blur(gauss.back(), increments[i]));

    std::vector<FloatImage> dog;
    for (int i = 0; i + 1 < s + 3; ++i) {
      FloatImage d(base.width, base.height);
      for (std::size_t p = 0; p < d.data.size(); ++p) d.data[p] = gauss[i + 1].data[p] - gauss[i].data[p];
      dog.push_back(std::move(d));
    }
    base = downsample(gauss[s]);
    gaussians_.push_back(std::move(gauss));
    dogs_.push_back(std::move(dog));
  }
}

double ScaleSpace::sigma(int octave, double index) const {
  return params_.sigma0 * std::pow(2.0, octave + index / params_.scales_per_octave);
}

namespace {

struct Candidate {
  int octave;
  int layer;
  int x;
  int y;
};

bool is_extremum(const ScaleSpace& space, int o, int layer, int x, int y, float threshold) {
  const float v = space.dog(o, layer)(x, y);
  if (std::abs(v) <= threshold) return false;
  for (int dl = -1; dl <= 1; ++dl) {
    const FloatImage& d = space.dog(o, layer + dl);
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dl == 0 && dx == 0 && dy == 0) continue;
        const float n = d(x + dx, y + dy);
        if (v > 0 ? n > v : n < v) return false;
      }
  }
  return true;
}

bool solve3(const std::array<double, 9>& h, const std::array<double, 3>& g, std::array<double, 3>& x) {
  const double det = h[0] * (h[4] * h[8] - h[5] * h[7]) - h[1] * (h[3] * h[8] - h[5] * h[6]) +
                     h[2] * (h[3] * h[7] - h[4] * h[6]);
  if (std::abs(det) < 1e-12) return false;
  std::array<double, 9> inv{
      (h[4] * h[8] - h[5] * h[7]) / det, (h[2] * h[7] - h[1] * h[8]) / det, (h[1] * h[5] - h[2] * h[4]) / det,
      (h[5] * h[6] - h[3] * h[8]) / det, (h[0] * h[8] - h[2] * h[6]) / det, (h[2] * h[3] - h[0] * h[5]) / det,
      (h[3] * h[7] - h[4] * h[6]) / det, (h[1] * h[6] - h[0] * h[7]) / det, (h[0] * h[4] - h[1] * h[3]) / det};
  for (int r = 0; r < 3; ++r) x[r] = -(inv[r * 3] * g[0] + inv[r * 3 + 1] * g[1] + inv[r * 3 + 2] * g[2]);
  return true;
}

std::optional<Keypoint> refine(const ScaleSpace& space, Candidate c) {
  const DetectorParams& p = space.params();
  const int s = p.scales_per_octave;
  std::array<double, 3> offset{};
  std::array<double, 3> grad{};
  bool converged = false;
  for (int step = 0; step < kRefineSteps; ++step) {
    const FloatImage& prev = space.dog(c.octave, c.layer - 1);
    const FloatImage& cur = space.dog(c.octave, c.layer);
    const FloatImage& next = space.dog(c.octave, c.layer + 1);
    const int x = c.x, y = c.y;
    const double v2 = 2.0 * cur(x, y);
    grad = {0.5 * (cur(x + 1, y) - cur(x - 1, y)), 0.5 * (cur(x, y + 1) - cur(x, y - 1)),
            0.5 * (next(x, y) - prev(x, y))};
    const double dxx = cur(x + 1, y) + cur(x - 1, y) - v2;
    const double dyy = cur(x, y + 1) + cur(x, y - 1) - v2;
    const double dss = next(x, y) + prev(x, y) - v2;
    const double dxy = 0.25 * (cur(x + 1, y + 1) - cur(x - 1, y + 1) - cur(x + 1, y - 1) + cur(x - 1, y - 1));
    const double dxs = 0.25 * (next(x + 1, y) - next(x - 1, y) - prev(x + 1, y) + prev(x - 1, y));
    const double dys = 0.25 * (next(x, y + 1) - next(x, y - 1) - prev(x, y + 1) + prev(x, y - 1));
    if (!solve3({dxx, dxy, dxs, dxy, dyy, dys, dxs, dys, dss}, grad, offset)) return std::nullopt;
    if (std::abs(offset[0]) < 0.5 && std::abs(offset[1]) < 0.5 && std::abs(offset[2]) < 0.5) {
      converged = true;
      break;
    }
    if (std::abs(offset[0]) > 1e6 || std::abs(offset[1]) > 1e6 || std::abs(offset[2]) > 1e6) return std::nullopt;
    c.x += static_cast<int>(std::lround(offset[0]));
    c.y += static_cast<int>(std::lround(offset[1]));
    c.layer += static_cast<int>(std::lround(offset[2]));
    const FloatImage& d = space.dog(c.octave, 0);
    if (c.layer < 1 || c.layer > s || c.x < kBorder || c.y < kBorder || c.x >= d.width - kBorder ||
        c.y >= d.height - kBorder) {
      return std::nullopt;
    }
  }
  if (!converged) return std::nullopt;

  const FloatImage& cur = space.dog(c.octave, c.layer);
  const double contrast = cur(c.x, c.y) + 0.5 * (grad[0] * offset[0] + grad[1] * offset[1] + grad[2] * offset[2]);
  if (std::abs(contrast) < p.contrast_threshold) return std::nullopt;

  const double v2 = 2.0 * cur(c.x, c.y);
  const double dxx = cur(c.x + 1, c.y) + cur(c.x - 1, c.y) - v2;
  const double dyy = cur(c.x, c.y + 1) + cur(c.x, c.y - 1) - v2;
  const double dxy = 0.25 * (cur(c.x + 1, c.y + 1) - cur(c.x - 1, c.y + 1) - cur(c.x + 1, c.y - 1) +
                             cur(c.x - 1, c.y - 1));
  const double tr = dxx + dyy;
  const double det = dxx * dyy - dxy * dxy;
  const double r = p.edge_ratio;
  if (det <= 0.0 || tr * tr * r >= (r + 1.0) * (r + 1.0) * det) return std::nullopt;

  Keypoint kp;
  const double f = octave_factor(c.octave);
  kp.x = (c.x + offset[0]) * f;
  kp.y = (c.y + offset[1]) * f;
  kp.octave = c.octave;
  kp.layer = c.layer + offset[2];
  kp.scale = space.sigma(c.octave, kp.layer);
  kp.response = static_cast<float>(std::abs(contrast));
  kp.orig_x = kp.x;
  kp.orig_y = kp.y;
  return kp;
}

int gaussian_index(const ScaleSpace& space, const Keypoint& kp) {
  const int s = space.params().scales_per_octave;
  return std::clamp(static_cast<int>(std::lround(kp.layer)), 0, s + 2);
}

std::vector<double> dominant_orientations(const ScaleSpace& space, const Keypoint& kp) {
  const FloatImage& g = space.gaussian(kp.octave, gaussian_index(space, kp));
  const double f = octave_factor(kp.octave);
  const double sigma = 1.5 * kp.scale / f;
  const int radius = static_cast<int>(std::lround(3.0 * sigma));
  const int cx = static_cast<int>(std::lround(kp.x / f));
  const int cy = static_cast<int>(std::lround(kp.y / f));

  std::array<double, kOrientationBins> hist{};
  for (int dy = -radius; dy <= radius; ++dy) {
    const int y = cy + dy;
    if (y <= 0 || y >= g.height - 1) continue;
    for (int dx = -radius; dx <= radius; ++dx) {
      const int x = cx + dx;
      if (x <= 0 || x >= g.width - 1) continue;
      const double gx = g(x + 1, y) - g(x - 1, y);
      const double gy = g(x, y + 1) - g(x, y - 1);
      const double w = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      double a = std::atan2(gy, gx);
      if (a < 0) a += 2.0 * std::numbers::pi;
      int bin = static_cast<int>(std::floor(a * kOrientationBins / (2.0 * std::numbers::pi)));
      bin = (bin % kOrientationBins + kOrientationBins) % kOrientationBins;
      hist[bin] += w * std::hypot(gx, gy);
    }
  }
  std::array<double, kOrientationBins> smooth{};
  for (int i = 0; i < kOrientationBins; ++i) {
    auto at = [&](int j) { return hist[(j + kOrientationBins) % kOrientationBins]; };
    smooth[i] = (at(i - 2) + at(i + 2)) / 16.0 + (at(i - 1) + at(i + 1)) * 4.0 / 16.0 + at(i) * 6.0 / 16.0;
  }
  const double peak = *std::max_element(smooth.begin(), smooth.end());
  std::vector<double> angles;
  if (peak <= 0.0) return {0.0};
  for (int i = 0; i < kOrientationBins; ++i) {
    const double l = smooth[(i + kOrientationBins - 1) % kOrientationBins];
    const double r = smooth[(i + 1) % kOrientationBins];
    const double c = smooth[i];
    if (c > l && c > r && c >= kOrientationPeakRatio * peak) {
      double bin = i + 0.5 * (l - r) / (l - 2.0 * c + r);
      bin = std::fmod(bin + kOrientationBins, double(kOrientationBins));
      angles.push_back((bin + 0.5) * 2.0 * std::numbers::pi / kOrientationBins);
    }
  }
  return angles;
}

void fill_octave_fields(const ScaleSpace& space, Keypoint& kp) {
  if (kp.octave >= 0 && kp.octave < space.octaves()) return;
  const double rel = std::log2(std::max(kp.scale, 1e-6) / space.params().sigma0);
  const int o = std::clamp(static_cast<int>(std::floor(rel)), 0, space.octaves() - 1);
  kp.octave = o;
  kp.layer = std::clamp((rel - o) * space.params().scales_per_octave, 0.0,
                        double(space.params().scales_per_octave + 2));
}

}  // namespace

std::vector<Keypoint> detect_keypoints(const GrayImage& img, const DetectorParams& params) {
  require(img.width() >= 32 && img.height() >= 32, "keypoint detection needs at least 32x32 pixels");
  return detect_keypoints(ScaleSpace(img, params));
}

std::vector<Keypoint> detect_keypoints(const ScaleSpace& space) {
  require(space.width() >= 32 && space.height() >= 32, "keypoint detection needs at least 32x32 pixels");
  const DetectorParams& p = space.params();
  const int s = p.scales_per_octave;
  const float pre = static_cast<float>(0.5 * p.contrast_threshold);

  std::vector<Candidate> candidates;
  for (int o = 0; o < space.octaves(); ++o) {
    const FloatImage& d0 = space.dog(o, 0);
    const int rows = d0.height - 2 * kBorder;
    if (rows <= 0 || d0.width <= 2 * kBorder) continue;
    for (int layer = 1; layer <= s; ++layer) {
      std::vector<std::vector<Candidate>> per_row(rows);
      parallel_for(rows, [&](std::ptrdiff_t r) {
        const int y = kBorder + static_cast<int>(r);
        for (int x = kBorder; x < d0.width - kBorder; ++x)
          if (is_extremum(space, o, layer, x, y, pre)) per_row[r].push_back({o, layer, x, y});
      });
      for (auto& row : per_row) candidates.insert(candidates.end(), row.begin(), row.end());
    }
  }

  std::vector<std::vector<Keypoint>> found(candidates.size());
  parallel_for(static_cast<std::ptrdiff_t>(candidates.size()), [&](std::ptrdiff_t i) {
    std::optional<Keypoint> kp = refine(space, candidates[i]);
    if (!kp) return;
    for (double angle : dominant_orientations(space, *kp)) {
      Keypoint oriented = *kp;
      oriented.angle = angle;
      found[i].push_back(oriented);
    }
  });

  std::vector<Keypoint> out;
  for (auto& f : found) out.insert(out.end(), f.begin(), f.end());

  // Distinct candidates can converge onto the same extremum.
  std::stable_sort(out.begin(), out.end(), [](const Keypoint& a, const Keypoint& b) {
    return std::tie(a.octave, a.y, a.x, a.layer, a.angle) < std::tie(b.octave, b.y, b.x, b.layer, b.angle);
  });
  out.erase(std::unique(out.begin(), out.end(),
                        [](const Keypoint& a, const Keypoint& b) {
                          return a.octave == b.octave && a.x == b.x && a.y == b.y &&
                                 a.layer == b.layer && a.angle == b.angle;
                        }),
            out.end());

  std::stable_sort(out.begin(), out.end(),
                   [](const Keypoint& a, const Keypoint& b) { return a.response > b.response; });
  if (p.max_keypoints > 0 && out.size() > static_cast<std::size_t>(p.max_keypoints)) {
    out.resize(static_cast<std::size_t>(p.max_keypoints));
  }
  return out;
}

double descriptor_radius(const Keypoint& kp) {
  const double hist_width = 3.0 * kp.scale;
  return hist_width * std::numbers::sqrt2 * (kCells + 1) * 0.5 + 1.0;
}

BaseDescriptor compute_base_descriptor(const ScaleSpace& space, const Keypoint& input) {
  Keypoint kp = input;
  fill_octave_fields(space, kp);
  const FloatImage& g = space.gaussian(kp.octave, gaussian_index(space, kp));
  const double f = octave_factor(kp.octave);
  const double px = kp.x / f, py = kp.y / f;
  const double hist_width = 3.0 * kp.scale / f;
  const int radius = static_cast<int>(std::lround(hist_width * std::numbers::sqrt2 * (kCells + 1) * 0.5));
  const int cx = static_cast<int>(std::lround(px));
  const int cy = static_cast<int>(std::lround(py));
  if (cx - radius - 1 < 0 || cy - radius - 1 < 0 || cx + radius + 1 >= g.width || cy + radius + 1 >= g.height) {
    fail(ErrorKind::DescriptorUnavailable, "descriptor window leaves the image");
  }

  const double cos_t = std::cos(kp.angle) / hist_width;
  const double sin_t = std::sin(kp.angle) / hist_width;
  const double weight_scale = -1.0 / (0.5 * kCells * kCells);
  const double bins_per_rad = kAngleBins / (2.0 * std::numbers::pi);

  // (cells + 2)^2 * (angle bins + 2) accumulator with guard cells.
  constexpr int kRows = kCells + 2;
  constexpr int kAng = kAngleBins + 2;
  std::array<double, kRows * kRows * kAng> acc{};

  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      // Sample offset in the keypoint frame, in units of cells.
      const double x_rot = dx * cos_t + dy * sin_t;
      const double y_rot = -dx * sin_t + dy * cos_t;
      const double rbin = y_rot + kCells / 2.0 - 0.5;
      const double cbin = x_rot + kCells / 2.0 - 0.5;
      if (rbin <= -1.0 || rbin >= kCells || cbin <= -1.0 || cbin >= kCells) continue;
      const int x = cx + dx, y = cy + dy;
      const double gx = g(x + 1, y) - g(x - 1, y);
      const double gy = g(x, y + 1) - g(x, y - 1);
      double angle = std::atan2(gy, gx) - kp.angle;
      angle = std::fmod(angle, 2.0 * std::numbers::pi);
      if (angle < 0) angle += 2.0 * std::numbers::pi;
      const double obin = angle * bins_per_rad;
      const double mag = std::hypot(gx, gy) * std::exp((x_rot * x_rot + y_rot * y_rot) * weight_scale);

      const int r0 = static_cast<int>(std::floor(rbin));
      const int c0 = static_cast<int>(std::floor(cbin));
      int o0 = static_cast<int>(std::floor(obin));
      const double dr = rbin - r0, dc = cbin - c0, dor = obin - o0;
      o0 %= kAngleBins;
      for (int ir = 0; ir < 2; ++ir) {
        const double wr = mag * (ir ? dr : 1.0 - dr);
        for (int ic = 0; ic < 2; ++ic) {
          const double wc = wr * (ic ? dc : 1.0 - dc);
          for (int io = 0; io < 2; ++io) {
            const double wo = wc * (io ? dor : 1.0 - dor);
            const int idx = ((r0 + 1 + ir) * kRows + (c0 + 1 + ic)) * kAng + (o0 + io);
            acc[idx] += wo;
          }
        }
      }
    }
  }

  std::array<double, kDescriptorDim> v{};
  for (int r = 0; r < kCells; ++r)
    for (int c = 0; c < kCells; ++c) {
      const int base = ((r + 1) * kRows + (c + 1)) * kAng;
      for (int o = 0; o < kAngleBins; ++o) {
        double val = acc[base + o];
        if (o == 0) val += acc[base + kAngleBins];  // wrap-around bin
        v[(r * kCells + c) * kAngleBins + o] = val;
      }
    }

  double n2 = 0.0;
  for (double x : v) n2 += x * x;
  BaseDescriptor out;
  out.values.assign(kDescriptorDim, 0.0f);
  if (n2 <= 1e-12) return out;
  const double clip = kDescriptorClip * std::sqrt(n2);
  double m2 = 0.0;
  for (double& x : v) {
    x = std::min(x, clip);
    m2 += x * x;
  }
  const double scale = kDescriptorScale / std::sqrt(m2);
  for (int i = 0; i < kDescriptorDim; ++i) {
    out.values[i] = static_cast<float>(std::clamp(v[i] * scale, 0.0, 256.0));
  }
  return out;
}

BaseDescriptor compute_base_descriptor(const GrayImage& img, const Keypoint& kp) {
  return compute_base_descriptor(ScaleSpace(img), kp);
}

FeatureSet describe_keypoints(const ScaleSpace& space, const std::vector<Keypoint>& keypoints) {
  std::vector<std::optional<BaseDescriptor>> slots(keypoints.size());
  parallel_for(static_cast<std::ptrdiff_t>(keypoints.size()), [&](std::ptrdiff_t i) {
    try {
      slots[i] = compute_base_descriptor(space, keypoints[i]);
    } catch (const Error&) {
      // patch outside the image: dropped
    }
  });
  FeatureSet out;
  for (std::size_t i = 0; i < keypoints.size(); ++i) {
    if (!slots[i]) continue;
    out.keypoints.push_back(keypoints[i]);
    out.descriptors.push_back(std::move(*slots[i]));
  }
  return out;
}

FeatureSet parse_feature_text(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool have_header = false;
  FeatureSet out;
  auto parse_error = [&](const std::string& msg) {
    fail(ErrorKind::Parse, source + ":" + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    if (line[first] == '#') continue;
    std::istringstream ls(line);
    if (!have_header) {
      std::string tag;
      long long dim = -1;
      ls >> tag >> dim;
      if (tag != "DESC" || !ls || dim < 0 || dim > 100000) parse_error("expected header 'DESC <dim> [family]'");
      std::string family;
      ls >> family;
      std::string extra;
      if (ls >> extra) parse_error("unexpected token '" + extra + "' in header");
      std::transform(family.begin(), family.end(), family.begin(), ::tolower);
      out.dim = static_cast<int>(dim);
      out.family = family == "builtin" ? DescriptorFamily::builtin() : DescriptorFamily::external(family);
      have_header = true;
      continue;
    }
    Keypoint kp;
    if (!(ls >> kp.x >> kp.y >> kp.scale >> kp.angle)) parse_error("row needs 'x y scale angle' before values");
    BaseDescriptor d;
    d.family = out.family;
    d.values.reserve(out.dim);
    double v = 0.0;
    while (ls >> v) d.values.push_back(static_cast<float>(v));
    if (!ls.eof()) parse_error("non-numeric value in row");
    if (static_cast<int>(d.values.size()) != out.dim) {
      parse_error("row has " + std::to_string(d.values.size()) + " values, header declares " +
                  std::to_string(out.dim));
    }
    kp.orig_x = kp.x;
    kp.orig_y = kp.y;
    out.keypoints.push_back(kp);
    out.descriptors.push_back(std::move(d));
  }
  if (!have_header) fail(ErrorKind::Parse, source + ": empty descriptor file (missing DESC header)");
  return out;
}

FeatureSet load_external_descriptors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_feature_text(buf.str(), path.string());
}

void write_feature_file(const std::filesystem::path& path, const std::vector<Keypoint>& keypoints,
                        const std::vector<std::vector<float>>& values, int dim,
                        const std::string& family_tag, const std::string& comment) {
  require(keypoints.size() == values.size() || values.empty(), "keypoint/descriptor count mismatch");
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << "DESC " << dim;
  if (!family_tag.empty()) out << ' ' << family_tag;
  out << '\n';
  if (!comment.empty()) out << "# " << comment << '\n';
  char buf[64];
  for (std::size_t i = 0; i < keypoints.size(); ++i) {
    const Keypoint& k = keypoints[i];
    std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g %.9g", k.x, k.y, k.scale, k.angle);
    out << buf;
    if (!values.empty()) {
      for (float v : values[i]) {
        std::snprintf(buf, sizeof buf, " %.9g", static_cast<double>(v));
        out << buf;
      }
    }
    out << '\n';
  }
  if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace armatch
