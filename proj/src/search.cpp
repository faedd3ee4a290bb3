#include "noisesearch/search.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include "json.hpp"
#include <ostream>
#include <stdexcept>
#include <thread>

#include "noisesearch/metrics.hpp"

namespace noisesearch {

std::string_view paradigm_name(Paradigm p) { return p == Paradigm::Chunk ? "chunk" : "fifo"; }

Paradigm parse_paradigm(std::string_view name) {
  if (name == "chunk") return Paradigm::Chunk;
  if (name == "fifo") return Paradigm::Fifo;
  throw std::invalid_argument("unknown paradigm: " + std::string(name));
}

void SearchConfig::validate(const NoiseSchedule& schedule) const {
  if (beam_k < 1 || cands_n < 1) throw std::invalid_argument("search: beam_k and cands_n must be >= 1");
  if (steps < 1) throw std::invalid_argument("search: steps must be >= 1");
  if (window < 1 || partitions < 1) throw std::invalid_argument("search: window and partitions must be >= 1");
  if (paradigm == Paradigm::Chunk && overlap >= window)
    throw std::invalid_argument("search: overlap must be smaller than the window");
  if (paradigm == Paradigm::Fifo && static_cast<int>(window * partitions) > schedule.ddim_steps())
    throw std::invalid_argument("search: FIFO queue M * P needs at least M * P remapped DDIM steps");
  if (!(pool.delta >= 0.0 && pool.delta < 1.0)) throw std::invalid_argument("search: delta must lie in [0, 1)");
  if (!(pool.fft_cutoff >= 0.0 && pool.fft_cutoff <= 1.0)) throw std::invalid_argument("search: fft cutoff must lie in [0, 1]");
  (void)allocate_counts(cands_n, pool.mix);
  if (subject) subject->validate(height, width);
}

Shape SearchConfig::candidate_shape() const {
  return Shape{paradigm == Paradigm::Fifo ? std::size_t{1} : window, height, width};
}

int SearchConfig::top_level(const NoiseSchedule& schedule) const {
  return paradigm == Paradigm::Fifo ? schedule.tau(static_cast<int>(window * partitions)) : schedule.top();
}

// ------------------------------------------------------------------ trace

std::string to_json_line(const TraceRecord& rec) {
  nlohmann::ordered_json j;
  j["step"] = rec.step;
  j["slot"] = rec.slot;
  j["candidate"] = rec.candidate;
  j["strategy"] = std::string(strategy_tag(rec.strategy));
  j["score"] = rec.score;
  j["selected"] = rec.selected;
  return j.dump();
}

TraceRecord parse_trace_line(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  TraceRecord rec;
  rec.step = j.at("step").get<std::size_t>();
  rec.slot = j.at("slot").get<std::size_t>();
  rec.candidate = j.at("candidate").get<std::size_t>();
  rec.strategy = parse_strategy_tag(j.at("strategy").get<std::string>());
  rec.score = j.at("score").get<double>();
  rec.selected = j.at("selected").get<bool>();
  return rec;
}

void TraceLog::append(std::span<const TraceRecord> records) {
  records_.insert(records_.end(), records.begin(), records.end());
  flush();
}

void TraceLog::flush() {
  if (sink_ == nullptr) return;
  for (; written_ < records_.size(); ++written_) *sink_ << to_json_line(records_[written_]) << '\n';
  sink_->flush();
}

// ---------------------------------------------------------------- helpers

namespace {

template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> workers;
    workers.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      workers.emplace_back([&, t] {
        try {
          for (std::size_t i = t; i < count; i += threads) fn(i);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::size_t effective_overlap(const SearchConfig& cfg, const Trajectory& traj) {
  return traj.empty() ? 0 : std::min(cfg.overlap, traj.video.frames());
}

void update_anchor(Trajectory& traj, std::size_t lag) {
  if (traj.empty()) return;
  const std::size_t last = traj.video.frames() - 1;
  traj.anchor = traj.video.frame(lag <= last ? last - lag : 0);
}

Trajectory initial_trajectory(const SearchConfig& cfg, const DenoiserFn& denoiser, const NoiseSchedule& schedule) {
  Trajectory traj;
  if (cfg.paradigm == Paradigm::Fifo) {
    RngStream rng(StreamKey{cfg.seed, 0, 0, 0, Purpose::Warmup});
    traj.queue = fifo_init(cfg.subject, denoiser, schedule, cfg.window, cfg.partitions, cfg.height, cfg.width, rng);
  }
  return traj;
}

// Denoises the chosen noise into the trajectory.
void commit(Trajectory& traj, const Clip& noise, const SearchConfig& cfg, const DenoiserFn& denoiser,
            const NoiseSchedule& schedule) {
  if (cfg.paradigm == Paradigm::Chunk) {
    const std::size_t overlap = effective_overlap(cfg, traj);
    const Clip chunk = chunk_step(traj, noise, denoiser, schedule, overlap);
    commit_chunk(traj, chunk, overlap);
  } else {
    auto [queue, frame] = fifo_step(*traj.queue, noise.frame(0), denoiser, schedule);
    traj.queue = std::move(queue);
    traj.video.append_frame(frame);
  }
  update_anchor(traj, cfg.anchor_lag);
}

Clip one_step_prediction(const Candidate& cand, const Trajectory& traj, const SearchConfig& cfg,
                         const DenoiserFn& denoiser, const NoiseSchedule& schedule) {
  if (cfg.paradigm == Paradigm::Chunk) {
    const std::size_t overlap = effective_overlap(cfg, traj);
    const int top = schedule.top();
    Clip state = cand.noise;
    if (overlap > 0) state = condition_on_tail(state, cand.noise, trajectory_tail(traj, overlap), top, schedule);
    return predict_x0(state, top, denoiser, schedule);
  }
  const FifoEvalState state = fifo_eval_state(*traj.queue, cand.noise.frame(0), schedule);
  return predict_x0(state.frames, state.levels, denoiser, schedule);
}

}  // namespace

void score_candidates(std::vector<Candidate>& candidates, std::span<const Trajectory> slots, const SearchConfig& cfg,
                      const DenoiserFn& denoiser, const NoiseSchedule& schedule) {
  for (const Candidate& c : candidates)
    if (c.slot >= slots.size()) throw std::invalid_argument("score_candidates: candidate bound to a missing slot");
  parallel_for(candidates.size(), cfg.threads, [&](std::size_t i) {
    Candidate& cand = candidates[i];
    const Trajectory& traj = slots[cand.slot];
    const Clip predicted = one_step_prediction(cand, traj, cfg, denoiser, schedule);
    std::optional<Frame> anchor = traj.anchor;
    if (!anchor && !traj.empty()) anchor = traj.video.frame(0);
    cand.score = score_clip(cfg.reward, anchor, predicted);
  });
}

std::vector<std::size_t> select_top_k(std::span<const Candidate> scored, std::size_t k) {
  if (scored.size() < k) throw std::invalid_argument("select_top_k: fewer candidates than k");
  for (const Candidate& c : scored)
    if (!c.score || std::isnan(*c.score)) throw std::invalid_argument("select_top_k: unscored candidate");
  std::vector<std::size_t> order(scored.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Candidate& ca = scored[a];
    const Candidate& cb = scored[b];
    if (*ca.score != *cb.score) return *ca.score > *cb.score;
    if (ca.slot != cb.slot) return ca.slot < cb.slot;
    if (ca.index != cb.index) return ca.index < cb.index;
    return a < b;
  });
  order.resize(k);
  return order;
}

SearchResult beam_search_generate(const SearchConfig& cfg, const DenoiserFn& denoiser, const NoiseSchedule& schedule,
                                  TraceLog* trace) {
  cfg.validate(schedule);
  TraceLog local_trace;
  TraceLog& log = trace != nullptr ? *trace : local_trace;
  const std::size_t first_record = log.records().size();
  try {
    std::vector<Trajectory> slots(cfg.beam_k, initial_trajectory(cfg, denoiser, schedule));
    for (std::size_t k = 0; k < slots.size(); ++k) slots[k].stream_label = k;
    const Shape shape = cfg.candidate_shape();
    const int top = cfg.top_level(schedule);

    for (std::size_t step = 0; step < cfg.steps; ++step) {
      std::vector<std::vector<Candidate>> pools(slots.size());
      parallel_for(slots.size(), cfg.threads, [&](std::size_t s) {
        PoolContext ctx{&slots[s], shape, top, cfg.seed, step, s};
        pools[s] = build_pool(cfg.cands_n, ctx, cfg.pool, denoiser, schedule);
      });
      std::vector<Candidate> all;
      all.reserve(slots.size() * cfg.cands_n);
      for (auto& p : pools)
        for (auto& c : p) all.push_back(std::move(c));

      score_candidates(all, slots, cfg, denoiser, schedule);
      const auto chosen = select_top_k(all, cfg.beam_k);

      std::vector<TraceRecord> records;
      records.reserve(all.size());
      for (const Candidate& c : all) records.push_back({step, c.slot, c.index, c.strategy, *c.score, false});
      for (std::size_t idx : chosen) records[idx].selected = true;
      log.append(records);

      std::vector<Trajectory> next(chosen.size());
      parallel_for(chosen.size(), cfg.threads, [&](std::size_t i) {
        const Candidate& c = all[chosen[i]];
        next[i] = slots[c.slot];
        next[i].stream_label = i;
        commit(next[i], c.noise, cfg, denoiser, schedule);
      });
      slots = std::move(next);
    }
    SearchResult result;
    result.video = std::move(slots.front().video);
    result.trace.assign(log.records().begin() + static_cast<std::ptrdiff_t>(first_record), log.records().end());
    return result;
  } catch (...) {
    log.flush();
    throw;
  }
}

Clip greedy_generate(const SearchConfig& cfg, const DenoiserFn& denoiser, const NoiseSchedule& schedule) {
  cfg.validate(schedule);
  Trajectory traj = initial_trajectory(cfg, denoiser, schedule);
  const Shape shape = cfg.candidate_shape();
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    RngStream rng(StreamKey{cfg.seed, step, 0, 0, Purpose::Candidate});
    commit(traj, sample_random(shape, rng), cfg, denoiser, schedule);
  }
  return std::move(traj.video);
}

std::uint64_t best_of_n_seed(std::uint64_t seed, std::size_t run) {
  return run == 0 ? seed : mix_key({seed, 0x426f4eULL, run});
}

BestOfNResult best_of_n(const SearchConfig& cfg, std::size_t n_total, const DenoiserFn& denoiser,
                        const NoiseSchedule& schedule) {
  if (n_total < 1) throw std::invalid_argument("best_of_n: need at least one run");
  BestOfNResult out;
  out.run_scores.resize(n_total);
  std::vector<Clip> videos(n_total);
  parallel_for(n_total, cfg.threads, [&](std::size_t i) {
    SearchConfig run = cfg;
    run.seed = best_of_n_seed(cfg.seed, i);
    run.threads = 1;
    videos[i] = greedy_generate(run, denoiser, schedule);
    out.run_scores[i] = videos[i].frames() >= 2 ? subject_consistency(videos[i]) : 0.0;
  });
  out.best_run = static_cast<std::size_t>(
      std::max_element(out.run_scores.begin(), out.run_scores.end()) - out.run_scores.begin());
  out.video = std::move(videos[out.best_run]);
  return out;
}

std::uint64_t greedy_calls(const SearchConfig& cfg, const NoiseSchedule& schedule) {
  const auto S = static_cast<std::uint64_t>(schedule.ddim_steps());
  if (cfg.paradigm == Paradigm::Chunk) return cfg.steps * S;
  return (cfg.subject ? 0 : S) + cfg.steps;
}

std::uint64_t beam_search_calls(const SearchConfig& cfg, const NoiseSchedule& schedule) {
  const auto S = static_cast<std::uint64_t>(schedule.ddim_steps());
  const std::uint64_t kn = cfg.beam_k * cfg.cands_n;
  const auto counts = allocate_counts(cfg.cands_n, cfg.pool.mix);
  const bool inverts = counts[static_cast<std::size_t>(Strategy::Inversion)] +
                           counts[static_cast<std::size_t>(Strategy::InversionResample)] > 0;
  std::uint64_t total = 0;
  if (cfg.paradigm == Paradigm::Chunk) {
    // Every step after the first has non-empty slots.
    total += cfg.steps * (kn + cfg.beam_k * S);
    if (inverts) total += (cfg.steps - 1) * cfg.beam_k * S;
  } else {
    const auto L = static_cast<std::uint64_t>(cfg.window * cfg.partitions);
    total += cfg.subject ? 0 : S;
    total += cfg.steps * (kn + cfg.beam_k);
    if (inverts) total += (cfg.steps - 1) * cfg.beam_k * L;
  }
  return total;
}

}  // namespace noisesearch
