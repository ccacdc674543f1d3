#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "armatch/matching.hpp"

namespace armatch {

enum class DatasetKind { Oxford, HPatches, PosePar, Synthetic };

const char* to_string(DatasetKind kind);
DatasetKind parse_dataset_kind(const std::string& text);

struct BenchConfig {
  std::optional<DatasetKind> kind;  // auto-detected from the directory when empty
  std::filesystem::path dataset;    // directory, or source image for synthetic
  int synthetic_size = 512;         // used when the synthetic source is generated
  int pose_interval = 1;
  std::uint64_t seed = 42;
  int ransac_iterations = 2000;
  double f_threshold = 5e-4;
  int jobs = 1;
  PipelineConfig pipeline;
};

/// Flat `key = value` lines; `#` starts a comment.
void apply_config_text(BenchConfig& config, const std::string& text, const std::string& source);
void apply_config_value(BenchConfig& config, const std::string& key, const std::string& value);
std::string dump_config(const BenchConfig& config);

struct BenchRow {
  std::string pair;
  std::size_t n_matches = 0;
  double accuracy = 0.0;
  double secondary = 0.0;  // h_precision or f accuracy
  double threshold = 0.0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::vector<std::string> skipped;  // pair name and reason
};

DatasetKind detect_dataset_kind(const std::filesystem::path& dir);
BenchReport run_benchmark(const BenchConfig& config);
void write_csv(const BenchReport& report, std::ostream& out);

/// Tilt series used for synthetic benchmarks: {sqrt2, 2, 2 sqrt2, 4, 4 sqrt2}.
std::vector<double> synthetic_tilts();

}  // namespace armatch
