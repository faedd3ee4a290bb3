// Command-line surface: generate, search, benchmark, inspect, corpus.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "noisesearch/benchmark.hpp"
#include "noisesearch/config.hpp"
#include "noisesearch/export.hpp"
#include "noisesearch/metrics.hpp"
#include "noisesearch/tensor_io.hpp"

namespace fs = std::filesystem;
using namespace noisesearch;

namespace {

struct Overrides {
  std::string config;
  std::map<std::string, std::string> flags;  // qualified key -> value
  std::vector<std::string> sets;
  bool export_frames = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "run-config file (key = value with [sections])");
    struct Flag {
      const char* name;
      const char* key;
      const char* help;
    };
    static const Flag table[] = {
        {"--paradigm", "search.paradigm", "chunk | fifo"},
        {"--beam-k", "search.beam_k", "beam size k"},
        {"--cands-n", "search.cands_n", "candidates per beam slot n"},
        {"--steps", "search.steps", "generation steps"},
        {"--reward", "search.reward", "full | local | anchor"},
        {"--mix", "pool.mix", "strategy weights a1,a2,a3,a4"},
        {"--fft-r", "pool.fft_r", "A2 low-pass cutoff in [0,1]"},
        {"--delta", "pool.delta", "A4 neighbourhood radius in [0,1)"},
        {"--anchor-lag", "search.anchor_lag", "anchor = frame this many frames before the newest"},
        {"--seed", "run.seeds", "seed, list or range (e.g. 0-19)"},
        {"--out", "run.out", "output directory"},
        {"--threads", "search.threads", "worker threads for candidate scoring"},
    };
    for (const Flag& f : table)
      app->add_option_function<std::string>(
          f.name, [this, key = std::string(f.key)](const std::string& v) { flags[key] = v; }, f.help);
    app->add_option("--set", sets, "override any config key: section.key=value")->take_all();
    app->add_flag("--export-frames", export_frames, "write one PGM per frame");
  }

  RunConfig build() const {
    RunConfig cfg = config.empty() ? RunConfig{} : load_config_file(config);
    for (const auto& [key, value] : flags) set_config_value(cfg, key, value);
    for (const std::string& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects section.key=value: " + s);
      set_config_value(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    if (export_frames) cfg.export_frames = true;
    return cfg;
  }
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void print_report(const RunReport& r) {
  if (!r.ok) {
    std::fprintf(stderr, "run failed (seed %llu): %s\n", static_cast<unsigned long long>(r.seed), r.error.c_str());
    return;
  }
  std::printf("seed=%llu subject_consistency_analog=%.6f temporal_flicker_analog=%.6f denoiser_calls=%llu predicted=%llu\n",
              static_cast<unsigned long long>(r.seed), r.subject_consistency, r.temporal_flicker,
              static_cast<unsigned long long>(r.denoiser_calls), static_cast<unsigned long long>(r.predicted_calls));
}

int single_run(RunConfig cfg, RunMode mode) {
  cfg.mode = mode;
  if (cfg.seeds.size() != 1) throw ConfigError("this subcommand runs one seed; use benchmark for seed lists");
  cfg.validate();
  const fs::path out = cfg.out;
  fs::create_directories(out);
  BenchmarkResult result;
  result.runs.push_back(execute_run(cfg, cfg.seeds.front(), make_model(cfg), out));
  result.summaries.push_back(summarize_cell(0, config_fingerprint(cfg), result.runs));
  write_file(out / "results.csv", results_csv({cfg}, result));
  write_file(out / "timing.csv", timing_csv(result));
  write_file(out / "config.ini", config_to_text(cfg));
  print_report(result.runs.front());
  return result.runs.front().ok ? 0 : 1;
}

int run_benchmark_cmd(const RunConfig& base, const std::vector<std::string>& sweeps, std::size_t cell_threads) {
  const auto matrix = expand_sweeps(base, sweeps);
  for (const RunConfig& c : matrix) c.validate();
  BenchmarkOptions opt;
  opt.out_dir = fs::path(base.out);
  opt.cell_threads = cell_threads;
  const BenchmarkResult res = run_benchmark(matrix, opt);
  std::size_t failures = 0;
  for (const CellSummary& s : res.summaries) {
    failures += s.failures;
    std::printf("cell %zu [%s] runs=%zu failures=%zu subject_consistency_analog=%.6f +- %.6f temporal_flicker_analog=%.6f\n",
                s.cell, s.fingerprint.c_str(), s.runs, s.failures, s.sc_mean, s.sc_std, s.flicker_mean);
  }
  std::printf("wrote %s\n", (fs::path(base.out) / "results.csv").string().c_str());
  return failures == 0 ? 0 : 2;
}

int build_corpus(const RunConfig& cfg) {
  const fs::path out = cfg.out;
  fs::create_directories(out);
  const auto corpus = make_corpus(cfg.corpus_params(), cfg.corpus_seed);
  save_corpus(out / "corpus.nbt", corpus);
  if (cfg.export_frames) {
    for (std::size_t j = 0; j < corpus.size(); ++j) {
      char name[32];
      std::snprintf(name, sizeof name, "clip_%03zu", j);
      export_frames(corpus[j], out / "frames" / name);
    }
  }
  std::printf("wrote %zu clips of %zu frames (%zux%zu) to %s\n", corpus.size(), corpus.front().frames(),
              corpus.front().height(), corpus.front().width(), (out / "corpus.nbt").string().c_str());
  return 0;
}

int inspect_trace(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::map<std::size_t, std::vector<TraceRecord>> steps;
  std::map<std::string, std::size_t> chosen_by_strategy;
  std::string line;
  std::size_t records = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const TraceRecord r = parse_trace_line(line);
    steps[r.step].push_back(r);
    ++records;
    if (r.selected) ++chosen_by_strategy[std::string(strategy_tag(r.strategy))];
  }
  std::printf("trace: %zu records over %zu steps\n", records, steps.size());
  std::printf("step,candidates,best_score,worst_score,selected\n");
  for (const auto& [step, recs] : steps) {
    double best = -2.0, worst = 2.0;
    std::size_t sel = 0;
    for (const TraceRecord& r : recs) {
      best = std::max(best, r.score);
      worst = std::min(worst, r.score);
      sel += r.selected ? 1 : 0;
    }
    std::printf("%zu,%zu,%.6f,%.6f,%zu\n", step, recs.size(), best, worst, sel);
  }
  for (const auto& [tag, n] : chosen_by_strategy) std::printf("selected %s: %zu\n", tag.c_str(), n);
  return 0;
}

int inspect_tensor(const fs::path& path) {
  const RawTensor t = load_tensor(path);
  std::printf("NBT1 rank %zu dims", t.dims.size());
  for (auto d : t.dims) std::printf(" %u", d);
  std::printf("\n");
  if (t.dims.size() == 3 && t.dims[0] >= 2) {
    const Clip clip = tensor_to_clip(t);
    std::printf("subject_consistency_analog=%.6f temporal_flicker_analog=%.6f\n", subject_consistency(clip),
                temporal_flicker(clip));
  }
  return 0;
}

int inspect(const fs::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".jsonl") return inspect_trace(path);
  if (ext == ".csv") {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::cout << in.rdbuf();
    return 0;
  }
  return inspect_tensor(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inference-time noise search for long video generation on a synthetic moving-shape world"};
  app.require_subcommand(1);

  Overrides gen_o, search_o, bench_o, corpus_o;
  auto* gen = app.add_subcommand("generate", "generate one video greedily (no search)");
  gen_o.attach(gen);
  auto* srch = app.add_subcommand("search", "one beam-search run; writes video, trace and metrics");
  search_o.attach(srch);
  auto* bench = app.add_subcommand("benchmark", "run a config matrix over its seeds; writes results.csv");
  bench_o.attach(bench);
  std::vector<std::string> sweeps;
  std::size_t cell_threads = 1;
  bench->add_option("--sweep", sweeps, "section.key=v1,v2,... (pool.mix values separated by |)")->take_all();
  bench->add_option("--cell-threads", cell_threads, "runs evaluated concurrently");
  auto* insp = app.add_subcommand("inspect", "dump a tensor, trace or results file");
  std::string inspect_path;
  insp->add_option("path", inspect_path, "file to inspect (.nbt, .jsonl, .csv)")->required();
  auto* corp = app.add_subcommand("corpus", "build the reference corpus (corpus.nbt)");
  corpus_o.attach(corp);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return single_run(gen_o.build(), RunMode::Greedy);
    if (*srch) return single_run(search_o.build(), RunMode::Search);
    if (*bench) return run_benchmark_cmd(bench_o.build(), sweeps, cell_threads);
    if (*insp) return inspect(inspect_path);
    if (*corp) return build_corpus(corpus_o.build());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
