// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "armatch/affine_sim.hpp"
#include "armatch/bench.hpp"
#include "armatch/error.hpp"
#include "armatch/features.hpp"
#include "armatch/geometry_eval.hpp"
#include "armatch/imaging.hpp"
#include "armatch/matching.hpp"
#include "armatch/mser.hpp"
#include "armatch/region_desc.hpp"
#include "armatch/synth.hpp"
#include "mser_oracle.hpp"
#include "region_raster.hpp"
#include "rig_util.hpp"

#ifndef ARMATCH_CLI_PATH
#error "ARMATCH_CLI_PATH must point at the armatch executable"
#endif

using namespace armatch;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("armatch_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + ARMATCH_CLI_PATH + "\" " + args;
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome constants() {
  const SamplingSets s = SamplingSets::standard();
  const auto asift = SamplingSets::asift_tilts();
  const double m = max_affine(s.reducing, s.enlarging);
  const double d = average_differ(s.enlarging, s.reducing, 4.0);
  // ASIFT keeps the unsimulated image as its identity view, so the low side
  // of its reachable tilt range starts at 1.
  std::vector<double> asift_low = asift;
  asift_low.insert(asift_low.begin(), 1.0);
  const double ma = max_affine(asift_low, asift);
  const double da = average_differ(asift, asift, 4.0);
  const double da_expected = 3.0 * (std::numbers::sqrt2 + 2.0 + 2.0 * std::numbers::sqrt2 + 4.0 +
                                    4.0 * std::numbers::sqrt2) / 5.0;
  const bool ok = std::abs(m - 8.0) < 1e-12 && std::abs(d) < 1e-12 &&
                  std::abs(ma - 4.0 * std::numbers::sqrt2) < 1e-12 && std::abs(da - da_expected) < 1e-12;
  return {ok, "max_affine=" + fmt("%.12g", m) + " average_differ=" + fmt("%.3g", d) + " asift max_affine=" +
                  fmt("%.12g", ma) + " asift average_differ=" + fmt("%.6f", da)};
}

Outcome simulation_count() {
  const fs::path dir = scratch_dir("simulate");
  write_pgm(synth::textured_image(128, 128, 5), dir / "in.pgm");
  const int code = run_cli("simulate " + (dir / "in.pgm").string() + " -o " + (dir / "views").string() +
                           " --enlarging >/dev/null 2>&1");
  int images = 0, simulated = 0, identity = 0;
  for (const auto& e : fs::directory_iterator(dir / "views"))
    if (e.path().extension() == ".pgm") ++images;
  std::ifstream manifest(dir / "views" / "manifest.txt");
  std::string line;
  while (std::getline(manifest, line)) {
    std::istringstream ls(line);
    int id = -1;
    if (!(ls >> id)) continue;
    (id == 0 ? identity : simulated) += 1;
  }
  const bool ok = code == 0 && simulated == 18 && identity == 1 && images == 19;
  return {ok, "exit=" + std::to_string(code) + " simulated=" + std::to_string(simulated) +
                  " identity=" + std::to_string(identity) + " pgm files=" + std::to_string(images)};
}

GrayImage blocky_random(std::mt19937_64& rng, int cell) {
  std::uniform_int_distribution<int> d(0, 255);
  const int n = 32 / cell + 1;
  std::vector<int> coarse(n * n);
  for (int& v : coarse) v = d(rng);
  GrayImage img(32, 32);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) img(x, y) = static_cast<std::uint8_t>(coarse[(y / cell) * n + x / cell]);
  return img;
}

Outcome mser_brute_force() {
  std::mt19937_64 rng(2024);
  std::vector<MserParams> settings(2);
  settings[1].min_area = 8;
  settings[1].delta = 3;
  std::size_t checked = 0, bad = 0;
  for (int i = 0; i < 50; ++i) {
    // Pure noise, plus blocky noise that forms larger flat components.
    const GrayImage img = i % 2 == 0 ? blocky_random(rng, 1 + (i / 2) % 6) : blocky_random(rng, 1);
    for (const MserParams& p : settings)
      for (Polarity pol : {Polarity::Dark, Polarity::Light})
        for (const ExtremalRegion& r : extract_extremal_regions(img, pol, p)) {
          double q = 0.0;
          const bool consistent = test::brute_force_consistent(img, r, p, &q);
          const int area = static_cast<int>(r.pixels.size());
          const bool sized = area >= p.min_area && area <= p.resolved_max_area(img);
          if (!consistent || !sized || std::abs(q - r.variation) > 1e-12) ++bad;
          ++checked;
        }
  }
  return {bad == 0 && checked > 0,
          std::to_string(checked) + " regions checked, " + std::to_string(bad) + " inconsistent"};
}

Outcome affine_invariants() {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> ang(-kPi, kPi), lam(0.2, 5.0), tilt(1.0, 8.0);
  double worst_det = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const AffinePose p{lam(rng), ang(rng), tilt(rng), ang(rng)};
    const double expect = p.lambda * p.lambda * p.t;
    worst_det = std::max(worst_det, std::abs(pose_matrix(p).det() - expect));
  }

  GrayImage square(200, 200, 255);
  for (int y = 70; y < 130; ++y)
    for (int x = 70; x < 130; ++x) square(x, y) = 0;
  const RegionMap before = mser_segment(square, MserParams{});
  const WarpResult w = warp_affine(square, Affine2{Mat2::diagonal(0.5, 1.0), {}}, true);
  const RegionMap after = mser_segment(w.image, MserParams{});
  double ratio = -1.0;
  if (before.regions.size() == 1 && after.regions.size() == 1)
    ratio = static_cast<double>(after.regions[0].area) / before.regions[0].area;

  const test::RasterRegion ref = test::raster(Mat2{});
  const RegionSignature s0 = compute_signature(ref.region, ref.image);
  std::uniform_real_distribution<double> t2(1.0, 2.0), sc(0.8, 1.5);
  const std::vector<Vec2> probes = {{10, 5}, {-20, 8}, {28, -12}, {0, -15}};
  double drift = 0.0;
  for (int i = 0; i < 50; ++i) {
    const test::RasterRegion r = test::raster(pose_matrix({sc(rng), ang(rng), t2(rng), ang(rng)}));
    const RegionSignature s = compute_signature(r.region, r.image);
    for (Vec2 p : probes)
      drift = std::max(drift, norm(relative_position(ref.source_to_image(p), s0) -
                                   relative_position(r.source_to_image(p), s)));
  }
  const bool ok = worst_det < 1e-9 && std::abs(ratio - 0.5) <= 0.05 && drift < 0.05;
  return {ok, "max |det - lambda^2 t|=" + fmt("%.3g", worst_det) + " area ratio=" + fmt("%.4f", ratio) +
                  " (det 0.5) max position drift=" + fmt("%.4f", drift)};
}

Outcome geometry_oracles() {
  std::mt19937_64 rng(5);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const test::Rig rig = test::random_rig(rng);
    const Mat3 f = fundamental_between(rig.cam1, rig.cam2).matrix();
    for (const auto& [x1, x2] : rig.points) {
      const Vec3 a{x1.x, x1.y, 1.0}, b{x2.x, x2.y, 1.0};
      const double algebraic = std::abs(dot(b, f * a)) / (norm(a) * norm(b));
      worst = std::max({worst, algebraic, symmetric_epipolar_distance(x1, x2, f)});
    }
  }

  Mat3 hm;
  hm.m = {0.9, 0.1, 20.0, -0.05, 1.1, -10.0, 2e-4, 1e-4, 1.0};
  const Homography gt(hm);
  std::uniform_real_distribution<double> ux(0, 800), uy(0, 640);
  std::vector<Match> ms;
  for (int i = 0; i < 200; ++i) {
    const Vec2 a{ux(rng), uy(rng)};
    Vec2 b;
    gt.project(a, b);
    if (i % 2) b = {ux(rng), uy(rng)};
    ms.push_back({a, b, 0.0});
  }
  const double eps = epsilon_for(800, 640);
  const RansacResult r = estimate_h_ransac(ms, {2000, eps, 42});
  const double rel = (r.h.matrix() - gt.matrix()).frobenius() / gt.matrix().frobenius();

  const bool ok = worst < 1e-8 && rel < 1e-3 && std::abs(eps - 3.0741) <= 1e-4;
  return {ok, "max epipolar residual=" + fmt("%.3g", worst) + " RANSAC relative error=" + fmt("%.3g", rel) +
                  " epsilon(800x640)=" + fmt("%.5f", eps) + " (expected 3.0741)"};
}

Outcome tilt_series() {
  BenchConfig full;
  full.kind = DatasetKind::Synthetic;
  full.synthetic_size = 512;
  BenchConfig base = full;
  base.pipeline.simulation = false;
  base.pipeline.alpha1 = base.pipeline.alpha2 = 0.0;
  const BenchReport rf = run_benchmark(full), rb = run_benchmark(base);
  if (rf.rows.size() != 5 || rb.rows.size() != 5) return {false, "synthetic series incomplete"};
  const auto tilts = synthetic_tilts();
  bool ok = true;
  std::string detail;
  for (std::size_t i = 0; i < 5; ++i) {
    if (tilts[i] >= 2.0 - 1e-9 && !(rf.rows[i].accuracy > rb.rows[i].accuracy)) ok = false;
    detail += rf.rows[i].pair + " full=" + fmt("%.3f", rf.rows[i].accuracy) + " base=" +
              fmt("%.3f", rb.rows[i].accuracy) + "; ";
  }
  if (!(rf.rows[2].accuracy > 0.5 && rb.rows[2].accuracy < 0.5)) ok = false;
  return {ok, detail};
}

Outcome classification() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> phi(-kPi / 2, kPi / 2);
  int correct = 0;
  std::string detail;
  for (int i = 0; i < 20; ++i) {
    const double theta = (20.0 + 30.0 * i / 19.0) * kPi / 180.0;
    const GrayImage src = synth::textured_image(512, 512, 1000 + i);
    // A camera tilted by theta foreshortens the frontal view by 1/t.
    const Mat2 m = pose_matrix({1.0, 0.0, tilt_from_angle(theta), phi(rng)}).inverse();
    const GrayImage warped = warp_affine(src, Affine2{m, {}}, true).image;
    const bool warped_is_b = i % 2 == 0;
    AffineOrder expect = warped_is_b ? AffineOrder::ALower : AffineOrder::BLower;
    AffineOrder got = AffineOrder::Tie;
    try {
      got = (warped_is_b ? classify_affine_pair(src, warped) : classify_affine_pair(warped, src)).order;
    } catch (const Error&) {
    }
    if (got == expect) {
      ++correct;
    } else {
      detail += " miss at theta=" + fmt("%.1f", theta * 180 / kPi);
    }
  }
  return {correct >= 18, std::to_string(correct) + "/20 correct" + detail};
}

Outcome fusion_identity() {
  const GrayImage a = synth::textured_image(256, 256, 8);
  const GrayImage b = warp_affine(a, Affine2{pose_matrix({1.0, 0.3, 1.3, 0.2}), {10, 10}}, true).image;
  const ScaleSpace sa(a), sb(b);
  const FeatureSet fa = describe_keypoints(sa, detect_keypoints(sa));
  const FeatureSet fb = describe_keypoints(sb, detect_keypoints(sb));
  PipelineConfig cfg;
  cfg.alpha1 = cfg.alpha2 = 0.0;
  const std::vector<Match> fused = match_external(a, fa, b, fb, cfg);

  std::vector<Match> raw;
  for (const IndexMatch& m : knn_match(make_descriptor_set(fa), make_descriptor_set(fb), cfg.ratio)) {
    const Keypoint& ka = fa.keypoints[m.query];
    const Keypoint& kb = fb.keypoints[m.train];
    raw.push_back({{ka.x, ka.y}, {kb.x, kb.y}, m.distance});
  }
  const std::vector<Match> plain = dedupe(raw);
  bool same = !plain.empty() && fused.size() == plain.size();
  for (std::size_t i = 0; same && i < plain.size(); ++i)
    same = fused[i].a == plain[i].a && fused[i].b == plain[i].b && fused[i].distance == plain[i].distance;
  return {same, std::to_string(fused.size()) + " fused vs " + std::to_string(plain.size()) + " base matches"};
}

Outcome determinism() {
  const fs::path dir = scratch_dir("determinism");
  const std::string args = "bench --kind synthetic --set synthetic_size=256 --seed 11 -o ";
  const int c1 = run_cli(args + (dir / "a.csv").string() + " 2>/dev/null");
  const int c2 = run_cli(args + (dir / "b.csv").string() + " 2>/dev/null");
  const std::string a = slurp(dir / "a.csv"), b = slurp(dir / "b.csv");
  const bool ok = c1 == 0 && c2 == 0 && !a.empty() && a == b;
  return {ok, "exit codes " + std::to_string(c1) + "/" + std::to_string(c2) + ", " + std::to_string(a.size()) +
                  " bytes, identical=" + (a == b ? "yes" : "no")};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "closed-form sampling constants", 1, constants},
      {2, "simulate --enlarging emits 18 + 1 views", 60, simulation_count},
      {3, "MSER brute-force equivalence", 30, mser_brute_force},
      {4, "affine invariants", 60, affine_invariants},
      {5, "geometry oracles", 60, geometry_oracles},
      {6, "synthetic tilt series trend", 600, tilt_series},
      {7, "classification correctness", 300, classification},
      {8, "fusion ablation identity", 60, fusion_identity},
      {9, "bench determinism", 600, determinism},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget_s) {
      o.pass = false;
      o.detail += " [over time budget]";
    }
    std::printf("%s %d %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
