#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "CLI11.hpp"
#include "armatch/affine_sim.hpp"
#include "armatch/bench.hpp"
#include "armatch/error.hpp"
#include "armatch/features.hpp"
#include "armatch/geometry_eval.hpp"
#include "armatch/imaging.hpp"
#include "armatch/matching.hpp"
#include "armatch/mser.hpp"
#include "armatch/region_desc.hpp"

using namespace armatch;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidParameter:
    case ErrorKind::Configuration:
      return kExitUsage;
    default:
      return kExitData;
  }
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void add_enhance_options(CLI::App* cmd, EnhanceParams& p) {
  cmd->add_option("--tile-rows", p.tile_rows, "CLAHE tile rows")->capture_default_str();
  cmd->add_option("--tile-cols", p.tile_cols, "CLAHE tile columns")->capture_default_str();
  cmd->add_option("--clip-limit", p.clip_limit, "CLAHE clip limit per bin (0 = automatic)")->capture_default_str();
  cmd->add_option("--window", p.bilateral_window, "bilateral window size")->capture_default_str();
  cmd->add_option("--delta-d", p.delta_d, "bilateral spatial sigma")->capture_default_str();
  cmd->add_option("--delta-r", p.delta_r, "bilateral range sigma")->capture_default_str();
}

void add_mser_options(CLI::App* cmd, MserParams& p) {
  cmd->add_option("--delta", p.delta, "MSER threshold step")->capture_default_str();
  cmd->add_option("--max-variation", p.max_variation, "MSER stability bound")->capture_default_str();
  cmd->add_option("--min-area", p.min_area, "smallest region in pixels")->capture_default_str();
  cmd->add_option("--max-area", p.max_area, "largest region in pixels (0 = 14.4% of the image)")
      ->capture_default_str();
  cmd->add_option("--overlap", p.overlap_merge_threshold, "IoU above which regions merge")->capture_default_str();
}

std::vector<double> degrees_to_radians(const std::vector<double>& deg) {
  std::vector<double> out;
  for (double d : deg) out.push_back(d * std::numbers::pi / 180.0);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Affine-robust feature matching with region-augmented descriptors"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "armatch 1.0");

  // enhance
  std::string in_a, in_b, out_path;
  EnhanceParams enhance_params;
  auto* enhance_cmd = app.add_subcommand("enhance", "CLAHE followed by bilateral smoothing");
  enhance_cmd->add_option("image", in_a, "input PGM/PPM")->required();
  enhance_cmd->add_option("-o,--output", out_path, "output PGM")->required();
  add_enhance_options(enhance_cmd, enhance_params);

  // segment
  MserParams mser_params;
  std::string labels_path, regions_path;
  bool segment_enhance = false;
  auto* segment_cmd = app.add_subcommand("segment", "MSER region partition");
  segment_cmd->add_option("image", in_a, "input PGM/PPM")->required();
  segment_cmd->add_option("--labels", labels_path, "label PGM output")->required();
  segment_cmd->add_option("--regions", regions_path, "region table output")->required();
  segment_cmd->add_flag("--enhance", segment_enhance, "enhance before segmenting");
  add_mser_options(segment_cmd, mser_params);
  add_enhance_options(segment_cmd, enhance_params);

  // simulate
  bool enlarging = false, reducing = false;
  std::vector<double> tilts, phis_deg;
  auto* simulate_cmd = app.add_subcommand("simulate", "write tilt-simulated views and a manifest");
  simulate_cmd->add_option("image", in_a, "input PGM/PPM")->required();
  simulate_cmd->add_option("-o,--output", out_path, "output directory")->required();
  auto* enl = simulate_cmd->add_flag("--enlarging", enlarging, "use the enlarging tilt set");
  auto* red = simulate_cmd->add_flag("--reducing", reducing, "use the reducing tilt set");
  auto* tl = simulate_cmd->add_option("--tilts", tilts, "explicit tilt list");
  enl->excludes(red)->excludes(tl);
  red->excludes(tl);
  simulate_cmd->add_option("--phis", phis_deg, "tilt directions in degrees");

  // detect / describe
  DetectorParams detector;
  auto* detect_cmd = app.add_subcommand("detect", "DoG keypoints (interchange file with no descriptor values)");
  detect_cmd->add_option("image", in_a, "input PGM/PPM")->required();
  detect_cmd->add_option("-o,--output", out_path, "keypoint file")->required();
  detect_cmd->add_option("--max-keypoints", detector.max_keypoints, "keep the strongest N (0 = all)");

  bool fused = false;
  double alpha1 = -1.0, alpha2 = -1.0;
  auto* describe_cmd = app.add_subcommand("describe", "keypoints with 128-d gradient descriptors");
  describe_cmd->add_option("image", in_a, "input PGM/PPM")->required();
  describe_cmd->add_option("-o,--output", out_path, "descriptor file")->required();
  describe_cmd->add_option("--max-keypoints", detector.max_keypoints, "keep the strongest N (0 = all)");
  describe_cmd->add_flag("--fused", fused, "append region histogram and position parts");
  describe_cmd->add_option("--alpha1", alpha1, "histogram weight (default 600)");
  describe_cmd->add_option("--alpha2", alpha2, "position weight (default 300)");
  add_mser_options(describe_cmd, mser_params);
  add_enhance_options(describe_cmd, enhance_params);

  // match
  PipelineConfig pipeline;
  bool no_simulation = false, pooled = false;
  std::string desc_a, desc_b;
  double theta_deg = 45.0;
  auto* match_cmd = app.add_subcommand("match", "match two images");
  match_cmd->add_option("image_a", in_a, "first image")->required();
  match_cmd->add_option("image_b", in_b, "second image")->required();
  match_cmd->add_option("-o,--output", out_path, "match file")->required();
  match_cmd->add_flag("--no-simulation", no_simulation, "identity views only");
  match_cmd->add_flag("--pooled", pooled, "one ratio test over all views instead of per view pair");
  match_cmd->add_option("--ratio", pipeline.ratio, "nearest/second-nearest ratio")->capture_default_str();
  match_cmd->add_option("--alpha1", alpha1, "histogram weight");
  match_cmd->add_option("--alpha2", alpha2, "position weight");
  match_cmd->add_option("--theta-deg", theta_deg, "classification probe angle")->capture_default_str();
  match_cmd->add_option("--max-keypoints", pipeline.detector.max_keypoints, "per view")->capture_default_str();
  match_cmd->add_option("--desc-a", desc_a, "external descriptors for image_a");
  match_cmd->add_option("--desc-b", desc_b, "external descriptors for image_b");
  add_mser_options(match_cmd, mser_params);
  add_enhance_options(match_cmd, enhance_params);

  // eval-h / eval-f
  std::string matches_path, h_path, cams_path, cam_from, cam_to;
  int width = 0, height = 0, ransac_iterations = 2000;
  std::uint64_t seed = 42;
  double f_threshold = kEpipolarThreshold;
  auto* evalh_cmd = app.add_subcommand("eval-h", "accuracy against a ground-truth homography");
  evalh_cmd->add_option("matches", matches_path, "match file")->required();
  evalh_cmd->add_option("homography", h_path, "3x3 ground truth")->required();
  evalh_cmd->add_option("--width", width, "image width")->required();
  evalh_cmd->add_option("--height", height, "image height")->required();
  evalh_cmd->add_option("--iterations", ransac_iterations, "RANSAC iterations")->capture_default_str();
  evalh_cmd->add_option("--seed", seed, "RANSAC seed")->capture_default_str();

  auto* evalf_cmd = app.add_subcommand("eval-f", "symmetric epipolar accuracy from camera poses");
  evalf_cmd->add_option("matches", matches_path, "match file")->required();
  evalf_cmd->add_option("cameras", cams_path, "camera parameter file")->required();
  evalf_cmd->add_option("--from", cam_from, "camera name of the first image")->required();
  evalf_cmd->add_option("--to", cam_to, "camera name of the second image")->required();
  evalf_cmd->add_option("--width", width, "image width")->required();
  evalf_cmd->add_option("--height", height, "image height")->required();
  evalf_cmd->add_option("--threshold", f_threshold, "normalized distance threshold")->capture_default_str();

  // classify
  auto* classify_cmd = app.add_subcommand("classify", "which image has the lower affine degree");
  classify_cmd->add_option("image_a", in_a, "first image")->required();
  classify_cmd->add_option("image_b", in_b, "second image")->required();
  classify_cmd->add_option("--theta-deg", theta_deg, "probe tilt angle")->capture_default_str();

  // bench
  BenchConfig bench;
  std::string config_path, dataset, kind;
  std::vector<std::string> overrides;
  bool dump = false;
  auto* bench_cmd = app.add_subcommand("bench", "run a dataset benchmark and write CSV");
  bench_cmd->add_option("--config", config_path, "key = value config file");
  bench_cmd->add_option("--dataset", dataset, "dataset directory or synthetic source image");
  bench_cmd->add_option("--kind", kind, "oxford | hpatches | pose_par | synthetic (default: detect)");
  bench_cmd->add_flag("--no-simulation", no_simulation, "identity views only");
  bench_cmd->add_option("--alpha1", alpha1, "histogram weight");
  bench_cmd->add_option("--alpha2", alpha2, "position weight");
  bench_cmd->add_option("--ratio", pipeline.ratio, "nearest/second-nearest ratio");
  bench_cmd->add_option("--seed", seed, "seed for RANSAC and synthetic scenes");
  bench_cmd->add_option("--jobs", bench.jobs, "pairs evaluated concurrently");
  bench_cmd->add_option("--set", overrides, "extra key=value settings");
  bench_cmd->add_option("-o,--output", out_path, "CSV path (default: stdout)");
  bench_cmd->add_flag("--dump-config", dump, "print the effective configuration and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*enhance_cmd) {
      enhance_params.validate();
      write_pgm(enhance(read_image(in_a), enhance_params), out_path);
    } else if (*segment_cmd) {
      GrayImage img = read_image(in_a);
      if (segment_enhance) img = enhance(img, enhance_params);
      const RegionMap map = mser_segment(img, mser_params);
      write_region_dump(map, labels_path, regions_path);
      std::cout << map.regions.size() << " regions\n";
    } else if (*simulate_cmd) {
      const SamplingSets sets = SamplingSets::standard();
      std::vector<double> use_tilts = tilts;
      if (use_tilts.empty()) use_tilts = reducing ? sets.reducing : sets.enlarging;
      const std::vector<double> phis = phis_deg.empty() ? sets.phi_values : degrees_to_radians(phis_deg);
      const ViewSet views = simulate_views(read_image(in_a), use_tilts, phis);
      write_view_set(views, out_path);
      for (const auto& w : views.warnings) {
        std::cerr << "skipped view t=" << w.t << " phi=" << w.phi * 180.0 / std::numbers::pi << ": " << w.reason
                  << '\n';
      }
      std::cout << views.views.size() - 1 << " simulated views + 1 identity\n";
    } else if (*detect_cmd) {
      const std::vector<Keypoint> kps = detect_keypoints(read_image(in_a), detector);
      write_feature_file(out_path, kps, {}, 0, "builtin");
    } else if (*describe_cmd) {
      const GrayImage img = read_image(in_a);
      const ScaleSpace space(img, detector);
      const FeatureSet fs = describe_keypoints(space, detect_keypoints(space));
      std::vector<std::vector<float>> values;
      if (!fused) {
        for (const auto& d : fs.descriptors) values.push_back(d.values);
        write_feature_file(out_path, fs.keypoints, values, kDescriptorDim, "builtin");
      } else {
        const double a1 = alpha1 >= 0 ? alpha1 : 600.0, a2 = alpha2 >= 0 ? alpha2 : 300.0;
        const GrayImage enhanced = enhance(img, enhance_params);
        const RegionMap map = mser_segment(enhanced, mser_params);
        std::vector<std::optional<RegionSignature>> sigs(map.regions.size());
        for (std::size_t i = 0; i < map.regions.size(); ++i) {
          try {
            sigs[i] = compute_signature(map.regions[i], enhanced);
          } catch (const Error& e) {
            if (e.kind() != ErrorKind::DegenerateRegion) throw;
          }
        }
        for (std::size_t i = 0; i < fs.keypoints.size(); ++i) {
          const Keypoint& kp = fs.keypoints[i];
          const RegionSignature* sig = nullptr;
          std::optional<Vec2> rel;
          if (auto id = region_at(map, kp.x, kp.y); id && sigs[*id - 1]) {
            sig = &*sigs[*id - 1];
            rel = relative_position({kp.x, kp.y}, *sig);
          }
          std::vector<float> row;
          fuse(fs.descriptors[i], sig, rel, a1, a2).append_to(row);
          values.push_back(std::move(row));
        }
        char comment[128];
        std::snprintf(comment, sizeof comment, "fused alpha1=%g alpha2=%g base=builtin", a1, a2);
        write_feature_file(out_path, fs.keypoints, values, kDescriptorDim + kRegionExtraDim, "", comment);
      }
      std::cout << fs.keypoints.size() << " descriptors\n";
    } else if (*match_cmd) {
      pipeline.enhance = enhance_params;
      pipeline.mser = mser_params;
      pipeline.simulation = !no_simulation;
      pipeline.pooling = pooled ? PoolingMode::Pooled : PoolingMode::PerViewPair;
      pipeline.theta = theta_deg * std::numbers::pi / 180.0;
      const GrayImage a = read_image(in_a), b = read_image(in_b);
      std::vector<Match> matches;
      if (!desc_a.empty() || !desc_b.empty()) {
        if (desc_a.empty() || desc_b.empty()) fail(ErrorKind::Configuration, "--desc-a and --desc-b go together");
        const FeatureSet fa = load_external_descriptors(desc_a), fb = load_external_descriptors(desc_b);
        FusionWeights w{alpha1, alpha2};
        if (alpha1 < 0 || alpha2 < 0) {
          const FusionWeights d = default_weights(fa.family);
          if (alpha1 < 0) w.alpha1 = d.alpha1;
          if (alpha2 < 0) w.alpha2 = d.alpha2;
        }
        pipeline.alpha1 = w.alpha1;
        pipeline.alpha2 = w.alpha2;
        matches = match_external(a, fa, b, fb, pipeline);
      } else {
        if (alpha1 >= 0) pipeline.alpha1 = alpha1;
        if (alpha2 >= 0) pipeline.alpha2 = alpha2;
        const PipelineResult r = match_pipeline(a, b, pipeline);
        if (!r.diagnostic.empty()) std::cerr << r.diagnostic << '\n';
        if (r.classified) std::cerr << "classification: " << to_string(r.classification.order) << '\n';
        matches = r.matches;
      }
      write_matches(out_path, matches);
      std::cout << matches.size() << " matches\n";
    } else if (*evalh_cmd) {
      const std::vector<Match> matches = read_matches(matches_path);
      const Homography h = read_homography(h_path);
      const double eps = epsilon_for(width, height);
      const EvalReport acc = accuracy_h(matches, h, eps);
      double precision = 0.0;
      std::size_t kept = 0;
      try {
        RansacOptions opt;
        opt.iterations = ransac_iterations;
        opt.inlier_eps = eps;
        opt.seed = seed;
        const RansacResult rr = estimate_h_ransac(matches, opt);
        precision = h_precision(rr.inliers, h, eps).accuracy;
        kept = rr.inliers.size();
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::EstimationFailed) throw;
        std::cerr << "RANSAC: " << e.what() << '\n';
      }
      std::printf("n_matches=%zu correct=%zu accuracy=%.6f ransac_inliers=%zu h_accuracy=%.6f threshold=%.6f\n",
                  acc.n_matches, acc.n_correct, acc.accuracy, kept, precision, eps);
    } else if (*evalf_cmd) {
      const std::vector<Match> matches = read_matches(matches_path);
      const auto cams = read_camera_params(cams_path);
      auto find = [&](const std::string& name) -> const CameraParams& {
        for (const auto& c : cams)
          if (c.name == name) return c;
        fail(ErrorKind::Parse, cams_path + ": no camera named '" + name + "'");
      };
      const FundamentalMatrix f = fundamental_between(find(cam_from), find(cam_to));
      const EvalReport r = accuracy_f(matches, f, width, height, f_threshold);
      std::printf("n_matches=%zu correct=%zu f_accuracy=%.6f threshold=%g\n", r.n_matches, r.n_correct, r.accuracy,
                  r.threshold);
    } else if (*classify_cmd) {
      ClassifyOptions opt;
      opt.theta = theta_deg * std::numbers::pi / 180.0;
      opt.max_keypoints = 800;
      const ClassificationResult r = classify_affine_pair(read_image(in_a), read_image(in_b), opt);
      switch (r.order) {
        case AffineOrder::ALower:
          std::cout << "a: lower affine degree\n";
          break;
        case AffineOrder::BLower:
          std::cout << "b: lower affine degree\n";
          break;
        case AffineOrder::Tie:
          std::cout << "tie\n";
          break;
      }
      std::cout << "matches(a, tilted b)=" << r.matches_a_probe_b << " matches(tilted a, b)=" << r.matches_probe_a_b
                << '\n';
    } else if (*bench_cmd) {
      if (!config_path.empty()) apply_config_text(bench, read_text(config_path), config_path);
      if (!dataset.empty()) bench.dataset = dataset;
      if (!kind.empty()) bench.kind = parse_dataset_kind(kind);
      if (no_simulation) bench.pipeline.simulation = false;
      if (alpha1 >= 0) bench.pipeline.alpha1 = alpha1;
      if (alpha2 >= 0) bench.pipeline.alpha2 = alpha2;
      if (bench_cmd->count("--ratio")) bench.pipeline.ratio = pipeline.ratio;
      if (bench_cmd->count("--seed")) bench.seed = seed;
      for (const std::string& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) fail(ErrorKind::Configuration, "--set expects key=value, got '" + kv + "'");
        apply_config_value(bench, kv.substr(0, eq), kv.substr(eq + 1));
      }
      if (dump) {
        std::cout << dump_config(bench);
        return 0;
      }
      const BenchReport report = run_benchmark(bench);
      for (const std::string& s : report.skipped) std::cerr << "skipped " << s << '\n';
      if (out_path.empty()) {
        write_csv(report, std::cout);
      } else {
        std::ofstream out(out_path);
        if (!out) fail(ErrorKind::Io, "cannot write " + out_path);
        write_csv(report, out);
      }
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return 0;
}
