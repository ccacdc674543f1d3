#include "armatch/geometry_eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "armatch/error.hpp"
#include "armatch/parallel.hpp"

namespace armatch {

Homography::Homography() : m_(Mat3::identity()) {}

Homography::Homography(const Mat3& m) : m_(m) {
  if (std::abs(m_(2, 2)) > 1e-12) m_ = (1.0 / m_(2, 2)) * m_;
  if (!(std::abs(m_.det()) > 1e-12)) fail(ErrorKind::InvalidParameter, "homography is singular");
}

Homography Homography::from_affine(const Affine2& a) {
  Mat3 m = Mat3::identity();
  m(0, 0) = a.linear.a;
  m(0, 1) = a.linear.b;
  m(0, 2) = a.translation.x;
  m(1, 0) = a.linear.c;
  m(1, 1) = a.linear.d;
  m(1, 2) = a.translation.y;
  return Homography(m);
}

bool Homography::project(Vec2 p, Vec2& out) const {
  const Vec3 q = m_ * Vec3{p.x, p.y, 1.0};
  if (std::abs(q[2]) < 1e-12) return false;
  out = {q[0] / q[2], q[1] / q[2]};
  return true;
}

Homography Homography::inverse() const { return Homography(m_.inverse()); }

FundamentalMatrix::FundamentalMatrix(const Mat3& m) : m_(m) {
  const double n = m_.frobenius();
  if (!(n > 0.0)) fail(ErrorKind::InvalidParameter, "fundamental matrix is zero");
  m_ = (1.0 / n) * m_;
}

double epsilon_for(int width, int height) {
  require(width > 0 && height > 0, "image dimensions must be positive");
  return 0.003 * std::sqrt(static_cast<double>(width) * width + static_cast<double>(height) * height);
}

bool match_correct_h(const Match& match, const Homography& h, double eps) {
  Vec2 p;
  if (!h.project(match.a, p)) return false;
  return norm(p - match.b) < eps;
}

EvalReport accuracy_h(const std::vector<Match>& matches, const Homography& h, double eps) {
  EvalReport r;
  r.threshold = eps;
  r.n_matches = matches.size();
  r.empty = matches.empty();
  for (const Match& m : matches) r.n_correct += match_correct_h(m, h, eps) ? 1 : 0;
  r.accuracy = r.empty ? 0.0 : static_cast<double>(r.n_correct) / static_cast<double>(r.n_matches);
  return r;
}

EvalReport h_precision(const std::vector<Match>& inliers, const Homography& h_gt, double eps) {
  return accuracy_h(inliers, h_gt, eps);
}

namespace {

// Similarity moving the centroid to the origin with mean distance sqrt(2).
Mat3 normalizer(const std::vector<Vec2>& pts) {
  double cx = 0.0, cy = 0.0;
  for (Vec2 p : pts) {
    cx += p.x;
    cy += p.y;
  }
  cx /= pts.size();
  cy /= pts.size();
  double mean = 0.0;
  for (Vec2 p : pts) mean += std::hypot(p.x - cx, p.y - cy);
  mean /= pts.size();
  const double s = mean > 0.0 ? std::numbers::sqrt2 / mean : 1.0;
  Mat3 t = Mat3::identity();
  t(0, 0) = s;
  t(1, 1) = s;
  t(0, 2) = -s * cx;
  t(1, 2) = -s * cy;
  return t;
}

Vec2 apply(const Mat3& t, Vec2 p) { return {t(0, 0) * p.x + t(0, 2), t(1, 1) * p.y + t(1, 2)}; }

bool collinear(Vec2 a, Vec2 b, Vec2 c) {
  const double cross = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
  const double scale = std::max({norm(b - a), norm(c - a), 1e-12});
  return std::abs(cross) < 1e-6 * scale * scale;
}

bool degenerate_sample(const std::array<Vec2, 4>& p) {
  return collinear(p[0], p[1], p[2]) || collinear(p[0], p[1], p[3]) || collinear(p[0], p[2], p[3]) ||
         collinear(p[1], p[2], p[3]);
}

double symmetric_transfer(const Homography& h, const Homography& hinv, const Match& m) {
  Vec2 f, b;
  if (!h.project(m.a, f) || !hinv.project(m.b, b)) return std::numeric_limits<double>::infinity();
  const double ef = norm(f - m.b), eb = norm(b - m.a);
  return std::sqrt(0.5 * (ef * ef + eb * eb));
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Homography fit_homography_dlt(const std::vector<Vec2>& from, const std::vector<Vec2>& to) {
  if (from.size() < 4 || from.size() != to.size()) {
    fail(ErrorKind::EstimationFailed, "homography fit needs at least 4 correspondences");
  }
  const Mat3 tf = normalizer(from), tt = normalizer(to);
  SymmetricMatrix ata(9);
  for (std::size_t i = 0; i < from.size(); ++i) {
    const Vec2 p = apply(tf, from[i]), q = apply(tt, to[i]);
    const std::array<double, 9> r1{-p.x, -p.y, -1.0, 0.0, 0.0, 0.0, q.x * p.x, q.x * p.y, q.x};
    const std::array<double, 9> r2{0.0, 0.0, 0.0, -p.x, -p.y, -1.0, q.y * p.x, q.y * p.y, q.y};
    for (int r = 0; r < 9; ++r)
      for (int c = r; c < 9; ++c) ata(r, c) += r1[r] * r1[c] + r2[r] * r2[c];
  }
  for (int r = 0; r < 9; ++r)
    for (int c = 0; c < r; ++c) ata(r, c) = ata(c, r);
  const EigenDecomposition eig = jacobi_eigen(ata);
  Mat3 hn;
  for (int k = 0; k < 9; ++k) hn.m[k] = eig.vector(k, 0);
  const Mat3 h = tt.inverse() * hn * tf;
  if (!(std::abs(h.det()) > 1e-300) || std::abs(h(2, 2)) < 1e-15) {
    fail(ErrorKind::EstimationFailed, "degenerate homography fit");
  }
  try {
    return Homography(h);
  } catch (const Error&) {
    fail(ErrorKind::EstimationFailed, "degenerate homography fit");
  }
}

RansacResult estimate_h_ransac(const std::vector<Match>& matches, const RansacOptions& options) {
  if (matches.size() < 4) fail(ErrorKind::EstimationFailed, "RANSAC needs at least 4 matches");
  require(options.iterations > 0, "RANSAC needs at least one iteration");
  require(options.inlier_eps > 0.0, "RANSAC inlier threshold must be positive");
  const std::size_t n = matches.size();

  struct Trial {
    std::size_t inliers = 0;
    bool valid = false;
    Homography h;
  };
  std::vector<Trial> trials(static_cast<std::size_t>(options.iterations));
  parallel_for(options.iterations, [&](std::ptrdiff_t it) {
    std::uint64_t state = splitmix64(options.seed ^ splitmix64(static_cast<std::uint64_t>(it)));
    std::array<std::size_t, 4> idx{};
    for (int k = 0; k < 4;) {
      state = splitmix64(state);
      const std::size_t c = state % n;
      if (std::find(idx.begin(), idx.begin() + k, c) != idx.begin() + k) continue;
      idx[k++] = c;
    }
    std::array<Vec2, 4> pa, pb;
    for (int k = 0; k < 4; ++k) {
      pa[k] = matches[idx[k]].a;
      pb[k] = matches[idx[k]].b;
    }
    if (degenerate_sample(pa) || degenerate_sample(pb)) return;
    Trial& t = trials[it];
    try {
      t.h = fit_homography_dlt({pa.begin(), pa.end()}, {pb.begin(), pb.end()});
      const Homography hinv = t.h.inverse();
      for (const Match& m : matches) t.inliers += symmetric_transfer(t.h, hinv, m) < options.inlier_eps ? 1 : 0;
      t.valid = true;
    } catch (const Error&) {
      t.valid = false;
    }
  });

  const Trial* best = nullptr;
  for (const Trial& t : trials)
    if (t.valid && (best == nullptr || t.inliers > best->inliers)) best = &t;
  if (best == nullptr || best->inliers < 4) {
    fail(ErrorKind::EstimationFailed, "RANSAC found no consensus of at least 4 matches");
  }

  auto collect = [&](const Homography& h, RansacResult& r) {
    const Homography hinv = h.inverse();
    r.h = h;
    r.inliers.clear();
    r.inlier_indices.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (symmetric_transfer(h, hinv, matches[i]) < options.inlier_eps) {
        r.inliers.push_back(matches[i]);
        r.inlier_indices.push_back(i);
      }
    }
  };
  RansacResult result;
  collect(best->h, result);
  std::vector<Vec2> from, to;
  for (const Match& m : result.inliers) {
    from.push_back(m.a);
    to.push_back(m.b);
  }
  try {
    RansacResult refit;
    collect(fit_homography_dlt(from, to), refit);
    if (refit.inliers.size() >= result.inliers.size()) result = std::move(refit);
  } catch (const Error&) {
    // keep the minimal-sample model
  }
  return result;
}

double symmetric_epipolar_distance(Vec2 x, Vec2 xp, const Mat3& f) {
  const Vec3 hx{x.x, x.y, 1.0}, hxp{xp.x, xp.y, 1.0};
  const Vec3 l2 = f * hx;               // epipolar line in the second image
  const Vec3 l1 = f.transposed() * hxp;  // epipolar line in the first image
  const double r = dot(hxp, l2);
  const double num = r * r;
  const double n2 = l2[0] * l2[0] + l2[1] * l2[1];
  const double n1 = l1[0] * l1[0] + l1[1] * l1[1];
  if (n1 == 0.0 && n2 == 0.0) return std::numeric_limits<double>::infinity();
  double d = 0.0;
  for (double den : {n2, n1}) {
    if (den > 0.0) {
      d += num / den;
    } else if (num > 0.0) {
      return std::numeric_limits<double>::infinity();
    }
  }
  return d;
}

EvalReport accuracy_f(const std::vector<Match>& matches, const FundamentalMatrix& f, int width, int height,
                      double threshold) {
  require(width > 0 && height > 0, "image dimensions must be positive");
  require(threshold > 0.0, "epipolar threshold must be positive");
  // The distance is a squared length in pixels; dividing by the squared
  // diagonal expresses it in diagonal-normalized coordinates.
  const double diag2 = static_cast<double>(width) * width + static_cast<double>(height) * height;
  EvalReport r;
  r.threshold = threshold;
  r.n_matches = matches.size();
  r.empty = matches.empty();
  for (const Match& m : matches) {
    r.n_correct += symmetric_epipolar_distance(m.a, m.b, f.matrix()) / diag2 < threshold ? 1 : 0;
  }
  r.accuracy = r.empty ? 0.0 : static_cast<double>(r.n_correct) / static_cast<double>(r.n_matches);
  return r;
}

Mat3 enforce_rank2(const Mat3& f) {
  const Mat3 ftf = f.transposed() * f;
  SymmetricMatrix s(3);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) s(r, c) = ftf(r, c);
  const EigenDecomposition eig = jacobi_eigen(s);
  const Vec3 v{eig.vector(0, 0), eig.vector(1, 0), eig.vector(2, 0)};
  Mat3 p = Mat3::identity();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) p(r, c) -= v[r] * v[c];
  return f * p;
}

FundamentalMatrix fundamental_from_pose(const Mat3& k, const Mat3& kp, const Mat3& r, const Vec3& t) {
  if (!(norm(t) > 0.0)) fail(ErrorKind::DegeneratePose, "zero baseline: fundamental matrix undefined");
  require(std::abs(k.det()) > 1e-300 && std::abs(kp.det()) > 1e-300, "calibration matrix is singular");
  const Mat3 f = kp.inverse().transposed() * Mat3::skew(t) * r * k.inverse();
  return FundamentalMatrix(enforce_rank2(f));
}

std::vector<CameraParams> read_camera_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  std::string line;
  int line_no = 0;
  long long count = -1;
  std::vector<CameraParams> out;
  auto bad = [&](const std::string& msg) {
    fail(ErrorKind::Parse, path.string() + ":" + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    if (count < 0) {
      if (!(ls >> count) || count < 0) bad("expected image count");
      continue;
    }
    CameraParams c;
    ls >> c.name;
    for (double& v : c.k.m) ls >> v;
    for (double& v : c.r.m) ls >> v;
    for (double& v : c.t) ls >> v;
    if (!ls) bad("expected 'name k11..k33 r11..r33 t1 t2 t3'");
    out.push_back(std::move(c));
  }
  if (count < 0) fail(ErrorKind::Parse, path.string() + ": empty camera file");
  if (static_cast<long long>(out.size()) != count) {
    fail(ErrorKind::Parse, path.string() + ": header declares " + std::to_string(count) + " cameras, found " +
                               std::to_string(out.size()));
  }
  return out;
}

FundamentalMatrix fundamental_between(const CameraParams& from, const CameraParams& to) {
  const Mat3 r = to.r * from.r.transposed();
  const Vec3 rt = r * from.t;
  const Vec3 t{to.t[0] - rt[0], to.t[1] - rt[1], to.t[2] - rt[2]};
  return fundamental_from_pose(from.k, to.k, r, t);
}

Homography read_homography(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  Mat3 m;
  for (double& v : m.m)
    if (!(in >> v)) fail(ErrorKind::Parse, path.string() + ": expected 9 numbers");
  std::string extra;
  if (in >> extra) fail(ErrorKind::Parse, path.string() + ": trailing data after 9 numbers");
  try {
    return Homography(m);
  } catch (const Error& e) {
    fail(ErrorKind::Parse, path.string() + ": " + e.what());
  }
}

}  // namespace armatch
