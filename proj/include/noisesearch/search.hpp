#pragma once

// Step-level beam search over initial noises. Each step draws n candidates
// per beam slot, scores every candidate from a single clean-prediction
// evaluation against the slot's anchor frame, keeps the k best across all
// slots and fully denoises only those.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "noisesearch/noisepool.hpp"
#include "noisesearch/paradigms.hpp"
#include "noisesearch/reward.hpp"
#include "noisesearch/sampler.hpp"
#include "noisesearch/schedule.hpp"

namespace noisesearch {

enum class Paradigm { Chunk, Fifo };
std::string_view paradigm_name(Paradigm p);
Paradigm parse_paradigm(std::string_view name);

struct SearchConfig {
  Paradigm paradigm = Paradigm::Fifo;
  std::size_t beam_k = 2;
  std::size_t cands_n = 5;
  std::size_t steps = 24;
  RewardKind reward = RewardKind::Full;
  PoolParams pool;
  // The anchor is the clean frame `anchor_lag` frames before the newest one.
  std::size_t anchor_lag = 0;
  std::size_t window = 4;      // M, frames per clip
  std::size_t partitions = 2;  // P, FIFO queue = M * P frames
  std::size_t overlap = 1;     // chunk conditioning frames
  std::size_t height = 16;
  std::size_t width = 16;
  std::optional<SubjectSpec> subject;  // FIFO warm-up condition
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  void validate(const NoiseSchedule& schedule) const;
  Shape candidate_shape() const;
  // Noise level candidates are drawn at.
  int top_level(const NoiseSchedule& schedule) const;
};

struct TraceRecord {
  std::size_t step = 0;
  std::size_t slot = 0;
  std::size_t candidate = 0;
  Strategy strategy = Strategy::Random;
  double score = 0.0;
  bool selected = false;
};

std::string to_json_line(const TraceRecord& rec);
TraceRecord parse_trace_line(const std::string& line);

// Collects trace records; when a sink is attached each step's records are
// written and flushed as soon as the step is scored.
class TraceLog {
 public:
  TraceLog() = default;
  explicit TraceLog(std::ostream* sink) : sink_(sink) {}

  void append(std::span<const TraceRecord> records);
  void flush();
  const std::vector<TraceRecord>& records() const { return records_; }

 private:
  std::ostream* sink_ = nullptr;
  std::vector<TraceRecord> records_;
  std::size_t written_ = 0;
};

struct SearchResult {
  Clip video;
  std::vector<TraceRecord> trace;
};

// Scores each candidate against its slot with exactly one denoiser call per candidate.
void score_candidates(std::vector<Candidate>& candidates, std::span<const Trajectory> slots, const SearchConfig& cfg,
                      const DenoiserFn& denoiser, const NoiseSchedule& schedule);

// Indices of the k best scored candidates, best first; ties go to the lower
// (slot, candidate index).
std::vector<std::size_t> select_top_k(std::span<const Candidate> scored, std::size_t k);

SearchResult beam_search_generate(const SearchConfig& cfg, const DenoiserFn& denoiser, const NoiseSchedule& schedule,
                                  TraceLog* trace = nullptr);

// No-search baseline: one A1 noise per step, no scoring.
Clip greedy_generate(const SearchConfig& cfg, const DenoiserFn& denoiser, const NoiseSchedule& schedule);

struct BestOfNResult {
  Clip video;
  std::size_t best_run = 0;
  std::vector<double> run_scores;  // subject consistency of every run
};

// Seed of the i-th independent run; run 0 reuses the configured seed.
std::uint64_t best_of_n_seed(std::uint64_t seed, std::size_t run);
BestOfNResult best_of_n(const SearchConfig& cfg, std::size_t n_total, const DenoiserFn& denoiser,
                        const NoiseSchedule& schedule);

// Exact denoiser-call budgets, asserted against the counter in tests.
std::uint64_t greedy_calls(const SearchConfig& cfg, const NoiseSchedule& schedule);
std::uint64_t beam_search_calls(const SearchConfig& cfg, const NoiseSchedule& schedule);

}  // namespace noisesearch
