#pragma once

// Experiment runner. Executes every config of a matrix over its seed list,
// records desk-scale metric analogs per run and aggregates them per config.
// Deterministic artifacts (CSV, traces, tensors) never contain wall time;
// timings go to a separate file.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "noisesearch/config.hpp"
#include "noisesearch/sampler.hpp"

namespace noisesearch {

struct RunReport {
  std::size_t cell = 0;
  std::string fingerprint;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double subject_consistency = 0.0;
  double temporal_flicker = 0.0;
  std::uint64_t denoiser_calls = 0;
  std::uint64_t predicted_calls = 0;
  double wall_seconds = 0.0;
  Clip video;
  std::vector<TraceRecord> trace;
};

struct CellSummary {
  std::size_t cell = 0;
  std::string fingerprint;
  std::size_t runs = 0;      // successful runs
  std::size_t failures = 0;
  double sc_mean = 0.0;
  double sc_std = 0.0;       // sample standard deviation, 0 for one run
  double flicker_mean = 0.0;
  double flicker_std = 0.0;
  double calls_mean = 0.0;
};

struct BenchmarkResult {
  std::vector<RunReport> runs;
  std::vector<CellSummary> summaries;
};

struct BenchmarkOptions {
  std::optional<std::filesystem::path> out_dir;  // artifacts and CSVs when set
  std::size_t cell_threads = 1;                  // cells evaluated concurrently
  bool keep_videos = false;                      // retain videos in RunReport
};

// Builds the denoising model a config describes (synthetic or loaded corpus).
std::shared_ptr<const NoiseModel> make_model(const RunConfig& cfg);
std::vector<Clip> make_run_corpus(const RunConfig& cfg);

// One generation run; failures are captured in the report, not thrown.
RunReport execute_run(const RunConfig& cfg, std::uint64_t seed, std::shared_ptr<const NoiseModel> model,
                      const std::optional<std::filesystem::path>& artifact_dir);

std::uint64_t predicted_calls(const RunConfig& cfg, std::uint64_t seed);

CellSummary summarize_cell(std::size_t cell, const std::string& fingerprint, const std::vector<RunReport>& runs);

BenchmarkResult run_benchmark(const std::vector<RunConfig>& matrix, const BenchmarkOptions& options = {});

// CSV with a header row: one "run" row per (config, seed), then one
// "summary" row per config. Numbers use shortest round-trip formatting.
std::string results_csv(const std::vector<RunConfig>& matrix, const BenchmarkResult& result);
std::string timing_csv(const BenchmarkResult& result);

// Expands "section.key=v1,v2,..." sweeps over a base config into the
// cartesian product, first sweep varying slowest.
std::vector<RunConfig> expand_sweeps(const RunConfig& base, const std::vector<std::string>& sweeps);

}  // namespace noisesearch
