#include "armatch/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include "armatch/error.hpp"
#include "armatch/geometry_eval.hpp"
#include "armatch/synth.hpp"

namespace armatch {

const char* to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::Oxford:
      return "oxford";
    case DatasetKind::HPatches:
      return "hpatches";
    case DatasetKind::PosePar:
      return "pose_par";
    case DatasetKind::Synthetic:
      return "synthetic";
  }
  return "synthetic";
}

DatasetKind parse_dataset_kind(const std::string& text) {
  if (text == "oxford") return DatasetKind::Oxford;
  if (text == "hpatches") return DatasetKind::HPatches;
  if (text == "pose_par" || text == "pose") return DatasetKind::PosePar;
  if (text == "synthetic") return DatasetKind::Synthetic;
  fail(ErrorKind::Configuration, "unknown dataset kind '" + text + "'");
}

std::vector<double> synthetic_tilts() { return SamplingSets::asift_tilts(); }

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size() || !std::isfinite(d)) {
    fail(ErrorKind::Configuration, "config key '" + key + "': '" + v + "' is not a number");
  }
  return d;
}

long long to_int(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != std::floor(d) || std::abs(d) > 9.0e15) {
    fail(ErrorKind::Configuration, "config key '" + key + "': '" + v + "' is not an integer");
  }
  return static_cast<long long>(d);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  fail(ErrorKind::Configuration, "config key '" + key + "': '" + v + "' is not a boolean");
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

void apply_config_value(BenchConfig& c, const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  PipelineConfig& p = c.pipeline;
  if (key == "kind") {
    c.kind = v == "auto" ? std::nullopt : std::optional(parse_dataset_kind(v));
  } else if (key == "dataset") {
    c.dataset = v;
  } else if (key == "synthetic_size") {
    c.synthetic_size = static_cast<int>(to_int(key, v));
  } else if (key == "pose_interval") {
    c.pose_interval = static_cast<int>(to_int(key, v));
  } else if (key == "seed") {
    const long long s = to_int(key, v);
    if (s < 0) fail(ErrorKind::Configuration, "seed must be non-negative");
    c.seed = static_cast<std::uint64_t>(s);
  } else if (key == "ransac_iterations") {
    c.ransac_iterations = static_cast<int>(to_int(key, v));
  } else if (key == "f_threshold") {
    c.f_threshold = to_double(key, v);
  } else if (key == "jobs") {
    c.jobs = static_cast<int>(to_int(key, v));
  } else if (key == "ratio") {
    p.ratio = to_double(key, v);
  } else if (key == "alpha1") {
    p.alpha1 = to_double(key, v);
  } else if (key == "alpha2") {
    p.alpha2 = to_double(key, v);
  } else if (key == "simulation") {
    p.simulation = to_bool(key, v);
  } else if (key == "theta_deg") {
    p.theta = to_double(key, v) * std::numbers::pi / 180.0;
  } else if (key == "pooling") {
    if (v == "per_view_pair") {
      p.pooling = PoolingMode::PerViewPair;
    } else if (v == "pooled") {
      p.pooling = PoolingMode::Pooled;
    } else {
      fail(ErrorKind::Configuration, "pooling must be per_view_pair or pooled");
    }
  } else if (key == "detector.octaves") {
    p.detector.octaves = static_cast<int>(to_int(key, v));
  } else if (key == "detector.scales_per_octave") {
    p.detector.scales_per_octave = static_cast<int>(to_int(key, v));
  } else if (key == "detector.sigma0") {
    p.detector.sigma0 = to_double(key, v);
  } else if (key == "detector.contrast_threshold") {
    p.detector.contrast_threshold = to_double(key, v);
  } else if (key == "detector.edge_ratio") {
    p.detector.edge_ratio = to_double(key, v);
  } else if (key == "detector.max_keypoints") {
    p.detector.max_keypoints = static_cast<int>(to_int(key, v));
  } else if (key == "enhance.tile_rows") {
    p.enhance.tile_rows = static_cast<int>(to_int(key, v));
  } else if (key == "enhance.tile_cols") {
    p.enhance.tile_cols = static_cast<int>(to_int(key, v));
  } else if (key == "enhance.clip_limit") {
    p.enhance.clip_limit = static_cast<int>(to_int(key, v));
  } else if (key == "enhance.bilateral_window") {
    p.enhance.bilateral_window = static_cast<int>(to_int(key, v));
  } else if (key == "enhance.delta_d") {
    p.enhance.delta_d = to_double(key, v);
  } else if (key == "enhance.delta_r") {
    p.enhance.delta_r = to_double(key, v);
  } else if (key == "mser.delta") {
    p.mser.delta = static_cast<int>(to_int(key, v));
  } else if (key == "mser.max_variation") {
    p.mser.max_variation = to_double(key, v);
  } else if (key == "mser.min_area") {
    p.mser.min_area = static_cast<int>(to_int(key, v));
  } else if (key == "mser.max_area") {
    p.mser.max_area = static_cast<int>(to_int(key, v));
  } else if (key == "mser.overlap_merge_threshold") {
    p.mser.overlap_merge_threshold = to_double(key, v);
  } else {
    fail(ErrorKind::Configuration, "unknown config key '" + key + "'");
  }
}

void apply_config_text(BenchConfig& config, const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::Configuration, source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    try {
      apply_config_value(config, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const Error& e) {
      fail(ErrorKind::Configuration, source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::string dump_config(const BenchConfig& c) {
  const PipelineConfig& p = c.pipeline;
  std::ostringstream o;
  o << "kind = " << (c.kind ? to_string(*c.kind) : "auto") << '\n'
    << "dataset = " << c.dataset.string() << '\n'
    << "synthetic_size = " << c.synthetic_size << '\n'
    << "pose_interval = " << c.pose_interval << '\n'
    << "seed = " << c.seed << '\n'
    << "ransac_iterations = " << c.ransac_iterations << '\n'
    << "f_threshold = " << fmt(c.f_threshold) << '\n'
    << "jobs = " << c.jobs << '\n'
    << "ratio = " << fmt(p.ratio) << '\n'
    << "alpha1 = " << fmt(p.alpha1) << '\n'
    << "alpha2 = " << fmt(p.alpha2) << '\n'
    << "simulation = " << (p.simulation ? "true" : "false") << '\n'
    << "theta_deg = " << fmt(p.theta * 180.0 / std::numbers::pi) << '\n'
    << "pooling = " << (p.pooling == PoolingMode::Pooled ? "pooled" : "per_view_pair") << '\n'
    << "detector.octaves = " << p.detector.octaves << '\n'
    << "detector.scales_per_octave = " << p.detector.scales_per_octave << '\n'
    << "detector.sigma0 = " << fmt(p.detector.sigma0) << '\n'
    << "detector.contrast_threshold = " << fmt(p.detector.contrast_threshold) << '\n'
    << "detector.edge_ratio = " << fmt(p.detector.edge_ratio) << '\n'
    << "detector.max_keypoints = " << p.detector.max_keypoints << '\n'
    << "enhance.tile_rows = " << p.enhance.tile_rows << '\n'
    << "enhance.tile_cols = " << p.enhance.tile_cols << '\n'
    << "enhance.clip_limit = " << p.enhance.clip_limit << '\n'
    << "enhance.bilateral_window = " << p.enhance.bilateral_window << '\n'
    << "enhance.delta_d = " << fmt(p.enhance.delta_d) << '\n'
    << "enhance.delta_r = " << fmt(p.enhance.delta_r) << '\n'
    << "mser.delta = " << p.mser.delta << '\n'
    << "mser.max_variation = " << fmt(p.mser.max_variation) << '\n'
    << "mser.min_area = " << p.mser.min_area << '\n'
    << "mser.max_area = " << p.mser.max_area << '\n'
    << "mser.overlap_merge_threshold = " << fmt(p.mser.overlap_merge_threshold) << '\n';
  return o.str();
}

namespace fs = std::filesystem;

DatasetKind detect_dataset_kind(const fs::path& dir) {
  if (fs::is_regular_file(dir) || dir.empty()) return DatasetKind::Synthetic;
  if (!fs::is_directory(dir)) fail(ErrorKind::Io, "dataset path does not exist: " + dir.string());
  if (fs::exists(dir / "H1to2p")) return DatasetKind::Oxford;
  if (fs::exists(dir / "H_1_2")) return DatasetKind::HPatches;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.size() > 8 && name.ends_with("_par.txt")) return DatasetKind::PosePar;
  }
  fail(ErrorKind::Io, "cannot tell the dataset layout of " + dir.string());
}

namespace {

// One unit of work; evaluate() fills the row or explains the skip.
struct PairJob {
  std::string name;
  std::function<BenchRow()> evaluate;
};

std::optional<fs::path> find_image(const fs::path& dir, const std::string& stem) {
  for (const char* ext : {".ppm", ".pgm", ".PPM", ".PGM"}) {
    const fs::path p = dir / (stem + ext);
    if (fs::exists(p)) return p;
  }
  if (fs::exists(dir / stem)) return dir / stem;
  return std::nullopt;
}

BenchRow homography_row(const std::string& name, const GrayImage& a, const GrayImage& b, const Homography& h,
                        const BenchConfig& c) {
  const PipelineResult r = match_pipeline(a, b, c.pipeline);
  const double eps = epsilon_for(a.width(), a.height());
  BenchRow row;
  row.pair = name;
  row.n_matches = r.matches.size();
  row.accuracy = accuracy_h(r.matches, h, eps).accuracy;
  row.threshold = eps;
  try {
    RansacOptions opt;
    opt.iterations = c.ransac_iterations;
    opt.inlier_eps = eps;
    opt.seed = c.seed;
    row.secondary = h_precision(estimate_h_ransac(r.matches, opt).inliers, h, eps).accuracy;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::EstimationFailed) throw;
    row.secondary = 0.0;
  }
  return row;
}

std::vector<PairJob> homography_jobs(const BenchConfig& c, DatasetKind kind) {
  std::vector<PairJob> jobs;
  const fs::path& dir = c.dataset;
  const std::string first = kind == DatasetKind::Oxford ? "img1" : "1";
  for (int k = 2; k <= 6; ++k) {
    const std::string other = kind == DatasetKind::Oxford ? "img" + std::to_string(k) : std::to_string(k);
    const std::string hname = kind == DatasetKind::Oxford ? "H1to" + std::to_string(k) + "p" : "H_1_" + std::to_string(k);
    const std::string name = first + "-" + other;
    jobs.push_back({name, [=, &c]() -> BenchRow {
                      const auto pa = find_image(dir, first), pb = find_image(dir, other);
                      if (!pa || !pb) fail(ErrorKind::Io, "missing image");
                      if (!fs::exists(dir / hname)) fail(ErrorKind::Io, "missing ground truth " + hname);
                      return homography_row(name, read_image(*pa), read_image(*pb), read_homography(dir / hname), c);
                    }});
  }
  return jobs;
}

std::vector<PairJob> pose_jobs(const BenchConfig& c) {
  require(c.pose_interval >= 1, "pose interval must be at least 1");
  fs::path par;
  for (const auto& e : fs::directory_iterator(c.dataset)) {
    const std::string n = e.path().filename().string();
    if (n.ends_with("_par.txt") && (par.empty() || e.path() < par)) par = e.path();
  }
  if (par.empty()) fail(ErrorKind::Io, "no *_par.txt in " + c.dataset.string());
  const std::vector<CameraParams> cams = read_camera_params(par);
  std::vector<PairJob> jobs;
  for (std::size_t i = 0; i + c.pose_interval < cams.size(); ++i) {
    const CameraParams ca = cams[i], cb = cams[i + c.pose_interval];
    const std::string name = ca.name + "-" + cb.name;
    const fs::path dir = c.dataset;
    jobs.push_back({name, [=, &c]() -> BenchRow {
                      const fs::path pa = dir / ca.name, pb = dir / cb.name;
                      if (!fs::exists(pa) || !fs::exists(pb)) fail(ErrorKind::Io, "missing image");
                      const GrayImage a = read_image(pa), b = read_image(pb);
                      const PipelineResult r = match_pipeline(a, b, c.pipeline);
                      const FundamentalMatrix f = fundamental_between(ca, cb);
                      BenchRow row;
                      row.pair = name;
                      row.n_matches = r.matches.size();
                      row.accuracy = accuracy_f(r.matches, f, a.width(), a.height(), c.f_threshold).accuracy;
                      row.secondary = row.accuracy;
                      row.threshold = c.f_threshold;
                      return row;
                    }});
  }
  return jobs;
}

std::vector<PairJob> synthetic_jobs(const BenchConfig& c) {
  auto source = std::make_shared<GrayImage>(
      c.dataset.empty() ? synth::textured_image(c.synthetic_size, c.synthetic_size, c.seed) : read_image(c.dataset));
  std::vector<PairJob> jobs;
  for (double t : synthetic_tilts()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "t=%.5f", t);
    const std::string name = buf;
    jobs.push_back({name, [=, &c]() -> BenchRow {
                      const WarpResult w = warp_affine(*source, Affine2{Mat2::diagonal(1.0 / t, 1.0), {}}, true);
                      return homography_row(name, *source, w.image, Homography::from_affine(w.forward), c);
                    }});
  }
  return jobs;
}

}  // namespace

BenchReport run_benchmark(const BenchConfig& config) {
  require(config.jobs >= 1, "jobs must be at least 1");
  const DatasetKind kind = config.kind ? *config.kind : detect_dataset_kind(config.dataset);
  std::vector<PairJob> jobs;
  switch (kind) {
    case DatasetKind::Oxford:
    case DatasetKind::HPatches:
      jobs = homography_jobs(config, kind);
      break;
    case DatasetKind::PosePar:
      jobs = pose_jobs(config);
      break;
    case DatasetKind::Synthetic:
      jobs = synthetic_jobs(config);
      break;
  }

  std::vector<std::optional<BenchRow>> rows(jobs.size());
  std::vector<std::string> reasons(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        rows[i] = jobs[i].evaluate();
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::Io || e.kind() == ErrorKind::Parse || e.kind() == ErrorKind::EstimationFailed ||
            e.kind() == ErrorKind::ClassificationFailed || e.kind() == ErrorKind::DegeneratePose) {
          reasons[i] = e.what();
        } else {
          throw;
        }
      }
    }
  };
  const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(config.jobs), jobs.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::exception_ptr> errors(n_threads);
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < n_threads; ++t) {
      threads.emplace_back([&, t] {
        try {
          worker();
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : threads) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  BenchReport report;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (rows[i]) {
      report.rows.push_back(*rows[i]);
    } else {
      report.skipped.push_back(jobs[i].name + ": " + reasons[i]);
    }
  }
  return report;
}

void write_csv(const BenchReport& report, std::ostream& out) {
  out << "pair,n_matches,accuracy,h_accuracy_or_f_accuracy,threshold\n";
  char buf[256];
  for (const BenchRow& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%s,%zu,%.6f,%.6f,%.6f\n", r.pair.c_str(), r.n_matches, r.accuracy, r.secondary,
                  r.threshold);
    out << buf;
  }
}

}  // namespace armatch
