#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include "armatch/bench.hpp"
#include "armatch/error.hpp"
#include "armatch/geometry_eval.hpp"
#include "armatch/imaging.hpp"
#include "armatch/synth.hpp"
#include "test_util.hpp"

#ifndef ARMATCH_CLI_PATH
#error "ARMATCH_CLI_PATH must point at the armatch executable"
#endif

using namespace armatch;
namespace fs = std::filesystem;

namespace {

void write_h(const fs::path& p, const Affine2& a) {
  std::ofstream out(p);
  out.precision(17);
  out << a.linear.a << ' ' << a.linear.b << ' ' << a.translation.x << '\n'
      << a.linear.c << ' ' << a.linear.d << ' ' << a.translation.y << "\n0 0 1\n";
}

// img1 plus five views under known similarity maps.
fs::path make_oxford(const std::string& name) {
  const fs::path dir = test::temp_dir(name);
  const GrayImage base = synth::textured_image(320, 320, 12);
  write_pgm(base, dir / "img1.pgm");
  for (int k = 2; k <= 6; ++k) {
    const Affine2 m{Mat2::rotation(0.05 * k), {4.0 * k, 2.0}};
    const WarpResult w = warp_affine(base, m, false);
    write_pgm(w.image, dir / ("img" + std::to_string(k) + ".pgm"));
    write_h(dir / ("H1to" + std::to_string(k) + "p"), w.forward);
  }
  return dir;
}

BenchConfig fast_config(const fs::path& dir) {
  BenchConfig c;
  c.dataset = dir;
  c.pipeline.simulation = false;
  c.ransac_iterations = 300;
  return c;
}

std::string csv_of(const BenchReport& r) {
  std::ostringstream s;
  write_csv(r, s);
  return s.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + ARMATCH_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(BenchConfig, ParseAndDumpRoundTrip) {
  BenchConfig c;
  apply_config_text(c,
                    "# comment\nkind = oxford\nseed = 7\nratio = 0.7  # inline\n"
                    "simulation = false\npooling = pooled\nmser.min_area = 30\n"
                    "detector.max_keypoints = 200\nalpha1 = 0\n",
                    "cfg");
  EXPECT_EQ(c.kind, DatasetKind::Oxford);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_DOUBLE_EQ(c.pipeline.ratio, 0.7);
  EXPECT_FALSE(c.pipeline.simulation);
  EXPECT_EQ(c.pipeline.pooling, PoolingMode::Pooled);
  EXPECT_EQ(c.pipeline.mser.min_area, 30);
  EXPECT_EQ(c.pipeline.detector.max_keypoints, 200);
  EXPECT_EQ(c.pipeline.alpha1, 0.0);

  BenchConfig back;
  apply_config_text(back, dump_config(c), "dump");
  EXPECT_EQ(dump_config(back), dump_config(c));
}

TEST(BenchConfig, Errors) {
  BenchConfig c;
  auto kind_of = [&](const std::string& text) {
    try {
      apply_config_text(c, text, "cfg");
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Io;
  };
  EXPECT_EQ(kind_of("bogus = 1\n"), ErrorKind::Configuration);
  EXPECT_EQ(kind_of("seed = abc\n"), ErrorKind::Configuration);
  EXPECT_EQ(kind_of("no equals sign\n"), ErrorKind::Configuration);
  EXPECT_EQ(kind_of("simulation = maybe\n"), ErrorKind::Configuration);
  EXPECT_THROW(parse_dataset_kind("kitti"), Error);
}

TEST(Bench, DetectsLayouts) {
  const fs::path ox = test::temp_dir("layout_ox");
  std::ofstream(ox / "H1to2p") << "1 0 0 0 1 0 0 0 1\n";
  EXPECT_EQ(detect_dataset_kind(ox), DatasetKind::Oxford);
  const fs::path hp = test::temp_dir("layout_hp");
  std::ofstream(hp / "H_1_2") << "1 0 0 0 1 0 0 0 1\n";
  EXPECT_EQ(detect_dataset_kind(hp), DatasetKind::HPatches);
  const fs::path pp = test::temp_dir("layout_pp");
  std::ofstream(pp / "temple_par.txt") << "0\n";
  EXPECT_EQ(detect_dataset_kind(pp), DatasetKind::PosePar);
  const fs::path none = test::temp_dir("layout_none");
  EXPECT_THROW(detect_dataset_kind(none), Error);
  EXPECT_EQ(detect_dataset_kind(""), DatasetKind::Synthetic);
}

TEST(Bench, OxfordLayoutProducesFiveRows) {
  const fs::path dir = make_oxford("oxford");
  const BenchReport r = run_benchmark(fast_config(dir));
  ASSERT_EQ(r.rows.size(), 5u);
  EXPECT_TRUE(r.skipped.empty());
  EXPECT_EQ(r.rows[0].pair, "img1-img2");
  for (const BenchRow& row : r.rows) {
    EXPECT_GT(row.n_matches, 10u) << row.pair;
    EXPECT_GT(row.accuracy, 0.8) << row.pair;
    EXPECT_NEAR(row.threshold, epsilon_for(320, 320), 1e-12);
  }
  const std::string csv = csv_of(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "pair,n_matches,accuracy,h_accuracy_or_f_accuracy,threshold");
}

TEST(Bench, MissingGroundTruthIsSkipped) {
  const fs::path dir = make_oxford("oxford_missing");
  fs::remove(dir / "H1to4p");
  const BenchReport r = run_benchmark(fast_config(dir));
  EXPECT_EQ(r.rows.size(), 4u);
  ASSERT_EQ(r.skipped.size(), 1u);
  EXPECT_NE(r.skipped[0].find("img1-img4"), std::string::npos);
}

TEST(Bench, DeterministicAcrossJobCounts) {
  const fs::path dir = make_oxford("oxford_det");
  BenchConfig c = fast_config(dir);
  const std::string one = csv_of(run_benchmark(c));
  c.jobs = 3;
  EXPECT_EQ(csv_of(run_benchmark(c)), one);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = test::temp_dir("cli_codes");
  write_pgm(synth::textured_image(96, 96, 4), dir / "a.pgm");
  EXPECT_EQ(run_cli(""), 1);
  EXPECT_EQ(run_cli("frobnicate"), 1);
  EXPECT_EQ(run_cli("detect " + (dir / "missing.pgm").string() + " -o " + (dir / "k.txt").string()), 2);
  EXPECT_EQ(run_cli("detect " + (dir / "a.pgm").string() + " -o " + (dir / "k.txt").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "k.txt"));
  EXPECT_EQ(run_cli("bench --set nonsense=1 --dump-config"), 1);
  EXPECT_EQ(run_cli("bench --set seed=9 --dump-config"), 0);
  EXPECT_EQ(run_cli("enhance " + (dir / "a.pgm").string() + " -o " + (dir / "e.pgm").string()), 0);
  EXPECT_EQ(read_image(dir / "e.pgm").width(), 96);
}
