#include "noisesearch/benchmark.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "noisesearch/export.hpp"
#include "noisesearch/metrics.hpp"
#include "noisesearch/tensor_io.hpp"

namespace noisesearch {

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string run_dir_name(std::size_t cell, std::uint64_t seed) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "cell_%03zu_seed_%llu", cell, static_cast<unsigned long long>(seed));
  return buf;
}

}  // namespace

std::vector<Clip> make_run_corpus(const RunConfig& cfg) {
  if (!cfg.corpus_path.empty()) {
    auto corpus = load_corpus(cfg.corpus_path);
    if (corpus.front().height() != cfg.search.height || corpus.front().width() != cfg.search.width)
      throw ConfigError("corpus frame size does not match world.height/world.width");
    return corpus;
  }
  return make_corpus(cfg.corpus_params(), cfg.corpus_seed);
}

std::shared_ptr<const NoiseModel> make_model(const RunConfig& cfg) {
  return std::make_shared<MixtureDenoiser>(make_run_corpus(cfg));
}

std::uint64_t predicted_calls(const RunConfig& cfg, std::uint64_t seed) {
  const NoiseSchedule sched = cfg.make_noise_schedule();
  const SearchConfig sc = cfg.search_config(seed);
  switch (cfg.mode) {
    case RunMode::Search: return beam_search_calls(sc, sched);
    case RunMode::Greedy: return greedy_calls(sc, sched);
    case RunMode::BestOfN: return cfg.best_of_n * greedy_calls(sc, sched);
  }
  return 0;
}

RunReport execute_run(const RunConfig& cfg, std::uint64_t seed, std::shared_ptr<const NoiseModel> model,
                      const std::optional<std::filesystem::path>& artifact_dir) {
  RunReport rep;
  rep.seed = seed;
  rep.fingerprint = config_fingerprint(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  std::ofstream trace_file;
  try {
    cfg.validate();
    rep.predicted_calls = predicted_calls(cfg, seed);
    const NoiseSchedule sched = cfg.make_noise_schedule();
    const SearchConfig sc = cfg.search_config(seed);
    DenoiserFn den(std::move(model));
    if (artifact_dir) std::filesystem::create_directories(*artifact_dir);
    std::optional<TraceLog> log;
    if (cfg.mode == RunMode::Search) {
      if (artifact_dir && cfg.write_trace) {
        trace_file.open(*artifact_dir / "trace.jsonl", std::ios::binary | std::ios::trunc);
        if (!trace_file) throw std::runtime_error("cannot write trace file");
        log.emplace(&trace_file);
      } else {
        log.emplace();
      }
      SearchResult res = beam_search_generate(sc, den, sched, &*log);
      rep.video = std::move(res.video);
      rep.trace = std::move(res.trace);
    } else if (cfg.mode == RunMode::Greedy) {
      rep.video = greedy_generate(sc, den, sched);
    } else {
      rep.video = best_of_n(sc, cfg.best_of_n, den, sched).video;
    }
    rep.denoiser_calls = den.calls();
    if (rep.video.frames() < 2) throw std::runtime_error("run produced fewer than two frames; metrics need two");
    rep.subject_consistency = subject_consistency(rep.video);
    rep.temporal_flicker = temporal_flicker(rep.video);
    if (!std::isfinite(rep.subject_consistency) || !std::isfinite(rep.temporal_flicker))
      throw std::runtime_error("non-finite metric");
    if (artifact_dir) {
      if (cfg.save_tensors) save_clip(*artifact_dir / "video.nbt", rep.video);
      if (cfg.export_frames) export_frames(rep.video, *artifact_dir / "frames");
    }
    rep.ok = true;
  } catch (const std::exception& e) {
    rep.ok = false;
    rep.error = e.what();
  }
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

CellSummary summarize_cell(std::size_t cell, const std::string& fingerprint, const std::vector<RunReport>& runs) {
  CellSummary s;
  s.cell = cell;
  s.fingerprint = fingerprint;
  std::vector<const RunReport*> ok;
  for (const RunReport& r : runs) {
    if (r.cell != cell) continue;
    if (r.ok) ok.push_back(&r);
    else ++s.failures;
  }
  s.runs = ok.size();
  if (ok.empty()) return s;
  const double n = static_cast<double>(ok.size());
  for (const RunReport* r : ok) {
    s.sc_mean += r->subject_consistency;
    s.flicker_mean += r->temporal_flicker;
    s.calls_mean += static_cast<double>(r->denoiser_calls);
  }
  s.sc_mean /= n;
  s.flicker_mean /= n;
  s.calls_mean /= n;
  if (ok.size() > 1) {
    double a = 0.0, b = 0.0;
    for (const RunReport* r : ok) {
      a += (r->subject_consistency - s.sc_mean) * (r->subject_consistency - s.sc_mean);
      b += (r->temporal_flicker - s.flicker_mean) * (r->temporal_flicker - s.flicker_mean);
    }
    s.sc_std = std::sqrt(a / (n - 1.0));
    s.flicker_std = std::sqrt(b / (n - 1.0));
  }
  return s;
}

BenchmarkResult run_benchmark(const std::vector<RunConfig>& matrix, const BenchmarkOptions& options) {
  if (matrix.empty()) throw std::invalid_argument("run_benchmark: empty config matrix");

  // One model per distinct corpus description, shared read-only by every run.
  std::map<std::string, std::shared_ptr<const NoiseModel>> models;
  std::vector<std::shared_ptr<const NoiseModel>> cell_model(matrix.size());
  std::vector<std::string> model_error(matrix.size());
  for (std::size_t c = 0; c < matrix.size(); ++c) {
    const RunConfig& cfg = matrix[c];
    std::string key = cfg.corpus_path;
    for (const char* k : {"world.height", "world.width", "world.families", "world.cut_variants",
                          "world.glitch_variants", "world.drift_variants", "world.corpus_frames",
                          "world.glitch_length", "world.speed", "world.pixel_noise", "world.corpus_seed"})
      key += "|" + get_config_value(cfg, k);
    auto it = models.find(key);
    if (it == models.end()) {
      try {
        it = models.emplace(key, make_model(cfg)).first;
      } catch (const std::exception& e) {
        model_error[c] = e.what();
        continue;
      }
    }
    cell_model[c] = it->second;
  }

  struct Job {
    std::size_t cell;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < matrix.size(); ++c)
    for (std::uint64_t s : matrix[c].seeds) jobs.push_back({c, s});

  BenchmarkResult result;
  result.runs.resize(jobs.size());
  auto run_job = [&](std::size_t j) {
    const Job& job = jobs[j];
    const RunConfig& cfg = matrix[job.cell];
    RunReport rep;
    if (!cell_model[job.cell]) {
      rep.seed = job.seed;
      rep.fingerprint = config_fingerprint(cfg);
      rep.error = "model construction failed: " + model_error[job.cell];
    } else {
      std::optional<std::filesystem::path> dir;
      if (options.out_dir) dir = *options.out_dir / run_dir_name(job.cell, job.seed);
      rep = execute_run(cfg, job.seed, cell_model[job.cell], dir);
    }
    rep.cell = job.cell;
    if (!options.keep_videos) rep.video = Clip();
    result.runs[j] = std::move(rep);
  };

  const std::size_t threads = std::max<std::size_t>(1, std::min(options.cell_threads, jobs.size()));
  if (threads == 1) {
    for (std::size_t j = 0; j < jobs.size(); ++j) run_job(j);
  } else {
    std::vector<std::jthread> workers;
    for (std::size_t t = 0; t < threads; ++t)
      workers.emplace_back([&, t] {
        for (std::size_t j = t; j < jobs.size(); j += threads) run_job(j);
      });
  }

  for (std::size_t c = 0; c < matrix.size(); ++c)
    result.summaries.push_back(summarize_cell(c, config_fingerprint(matrix[c]), result.runs));

  if (options.out_dir) {
    std::filesystem::create_directories(*options.out_dir);
    write_text(*options.out_dir / "results.csv", results_csv(matrix, result));
    write_text(*options.out_dir / "timing.csv", timing_csv(result));
    for (std::size_t c = 0; c < matrix.size(); ++c) {
      char name[32];
      std::snprintf(name, sizeof name, "cell_%03zu.ini", c);
      write_text(*options.out_dir / name, config_to_text(matrix[c]));
    }
  }
  return result;
}

std::string results_csv(const std::vector<RunConfig>& matrix, const BenchmarkResult& result) {
  std::ostringstream out;
  out << "kind,cell,fingerprint,mode,paradigm,beam_k,cands_n,steps,reward,mix,seed,status,runs,"
         "subject_consistency_analog,subject_consistency_analog_std,temporal_flicker_analog,"
         "temporal_flicker_analog_std,denoiser_calls,predicted_calls\n";
  auto cell_columns = [&](std::size_t c) {
    const RunConfig& cfg = matrix[c];
    std::string mix = get_config_value(cfg, "pool.mix");
    for (char& ch : mix)
      if (ch == ',') ch = ';';
    return std::to_string(c) + "," + config_fingerprint(cfg) + "," + std::string(run_mode_name(cfg.mode)) + "," +
           std::string(paradigm_name(cfg.search.paradigm)) + "," + std::to_string(cfg.search.beam_k) + "," +
           std::to_string(cfg.search.cands_n) + "," + std::to_string(cfg.search.steps) + "," +
           std::string(reward_name(cfg.search.reward)) + "," + mix;
  };
  for (const RunReport& r : result.runs) {
    out << "run," << cell_columns(r.cell) << "," << r.seed << "," << (r.ok ? "ok" : "failed") << ","
        << (r.ok ? 1 : 0) << ",";
    if (r.ok)
      out << fmt(r.subject_consistency) << ",," << fmt(r.temporal_flicker) << ",," << r.denoiser_calls;
    else
      out << ",,,,";
    out << "," << r.predicted_calls << "\n";
  }
  for (const CellSummary& s : result.summaries) {
    const char* status = s.failures == 0 ? "ok" : (s.runs == 0 ? "failed" : "partial");
    out << "summary," << cell_columns(s.cell) << ",," << status << "," << s.runs << ",";
    if (s.runs > 0)
      out << fmt(s.sc_mean) << "," << fmt(s.sc_std) << "," << fmt(s.flicker_mean) << "," << fmt(s.flicker_std) << ","
          << fmt(s.calls_mean);
    else
      out << ",,,,";
    out << ",\n";
  }
  return out.str();
}

std::string timing_csv(const BenchmarkResult& result) {
  std::ostringstream out;
  out << "cell,seed,wall_seconds\n";
  for (const RunReport& r : result.runs) out << r.cell << "," << r.seed << "," << fmt(r.wall_seconds) << "\n";
  return out.str();
}

std::vector<RunConfig> expand_sweeps(const RunConfig& base, const std::vector<std::string>& sweeps) {
  std::vector<RunConfig> out{base};
  for (const std::string& sweep : sweeps) {
    const auto eq = sweep.find('=');
    if (eq == std::string::npos) throw ConfigError("sweep must look like section.key=v1,v2: " + sweep);
    const std::string key = sweep.substr(0, eq);
    const std::string values = sweep.substr(eq + 1);
    std::vector<std::string> list;
    // pool.mix values are themselves comma lists; sweep entries are split on '|'.
    const char sep = values.find('|') != std::string::npos || key == "pool.mix" ? '|' : ',';
    std::size_t start = 0;
    while (true) {
      const auto pos = values.find(sep, start);
      list.push_back(values.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    std::vector<RunConfig> next;
    for (const RunConfig& cfg : out)
      for (const std::string& v : list) {
        RunConfig c = cfg;
        set_config_value(c, key, v);
        next.push_back(std::move(c));
      }
    out = std::move(next);
  }
  return out;
}

}  // namespace noisesearch
