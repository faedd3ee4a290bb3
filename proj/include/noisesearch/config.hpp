#pragma once

// Run configuration: every knob of a generation run, read from a flat
// `key = value` file with [sections]. Unknown sections or keys are errors.
// Command-line flags are applied as overrides after the file.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "noisesearch/schedule.hpp"
#include "noisesearch/search.hpp"
#include "noisesearch/toyworld.hpp"

namespace noisesearch {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ScheduleParams {
  int total_steps = 1000;
  int ddim_steps = 8;
  double beta_min = 1e-4;
  double beta_max = 0.002;
};

enum class RunMode { Search, Greedy, BestOfN };
std::string_view run_mode_name(RunMode m);
RunMode parse_run_mode(std::string_view name);

struct RunConfig {
  SearchConfig search;        // frame size, M, P, overlap; search.subject is ignored
  SubjectSpec subject;        // FIFO warm-up condition, used when use_subject is set
  bool use_subject = false;
  ScheduleParams schedule;
  CorpusParams corpus;        // height/width follow search.height/width
  std::uint64_t corpus_seed = 7;
  std::string corpus_path;    // NBT1 corpus file; empty = synthesize
  RunMode mode = RunMode::Search;
  std::size_t best_of_n = 4;  // full generations for RunMode::BestOfN
  std::vector<std::uint64_t> seeds{0};
  std::string out = "out";
  bool export_frames = false;
  bool save_tensors = true;
  bool write_trace = true;

  void validate() const;
  NoiseSchedule make_noise_schedule() const;
  CorpusParams corpus_params() const;
  SearchConfig search_config(std::uint64_t seed) const;
};

// Fully qualified keys ("section.key") accepted by set_config_value.
const std::vector<std::string>& config_keys();

void set_config_value(RunConfig& cfg, std::string_view qualified_key, std::string_view value);
std::string get_config_value(const RunConfig& cfg, std::string_view qualified_key);

// Applies a config text on top of `cfg`. Errors carry the line number.
void apply_config_text(RunConfig& cfg, std::string_view text);
RunConfig load_config_file(const std::filesystem::path& path);

// Canonical text form (every key, fixed order, shortest round-trip numbers).
std::string config_to_text(const RunConfig& cfg);

// 64-bit FNV-1a over the canonical text of every result-affecting key (the
// output directory, thread count and artifact switches are excluded), as 16
// hex digits.
std::string config_fingerprint(const RunConfig& cfg);

// "3", "0,4,9" or inclusive ranges "0-19" (mixable: "0-3,10").
std::vector<std::uint64_t> parse_seed_list(std::string_view text);

}  // namespace noisesearch
