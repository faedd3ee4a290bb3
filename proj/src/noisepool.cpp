#include "noisesearch/noisepool.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <string>

namespace noisesearch {

std::string_view strategy_tag(Strategy s) {
  switch (s) {
    case Strategy::Random: return "A1";
    case Strategy::FftBlend: return "A2";
    case Strategy::Inversion: return "A3";
    case Strategy::InversionResample: return "A4";
  }
  return "A?";
}

Strategy parse_strategy_tag(std::string_view tag) {
  if (tag == "A1") return Strategy::Random;
  if (tag == "A2") return Strategy::FftBlend;
  if (tag == "A3") return Strategy::Inversion;
  if (tag == "A4") return Strategy::InversionResample;
  throw std::invalid_argument("unknown strategy tag: " + std::string(tag));
}

Clip sample_random(const Shape& shape, RngStream& rng) {
  if (shape.size() == 0) throw std::invalid_argument("sample_random: empty shape");
  Clip out(shape);
  rng.fill_normal(out.values());
  return out;
}

namespace {

// FFTW planning is not thread-safe; the transforms are tiny, so the whole
// plan/execute/destroy cycle runs under one lock.
std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

using Complex = std::complex<double>;

void transform(std::vector<Complex>& data, const std::vector<int>& dims, int sign) {
  std::lock_guard lock(fftw_mutex());
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), ptr, ptr, sign, FFTW_ESTIMATE);
  if (plan == nullptr) throw std::runtime_error("fft: planning failed");
  fftw_execute(plan);
  fftw_destroy_plan(plan);
}

double normalized_frequency(std::size_t k, std::size_t n) {
  // cycles/sample in [-0.5, 0.5)
  const double signed_k = k < (n + 1) / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n);
  return signed_k / static_cast<double>(n);
}

// Mask over a block of dims; true = low band.
std::vector<bool> low_mask(const std::vector<int>& dims, double cutoff) {
  std::size_t total = 1;
  for (int d : dims) total *= static_cast<std::size_t>(d);
  std::vector<bool> mask(total, cutoff >= 1.0);
  if (cutoff >= 1.0) return mask;
  std::vector<std::size_t> idx(dims.size(), 0);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (std::size_t d = dims.size(); d-- > 0;) {
      idx[d] = rem % static_cast<std::size_t>(dims[d]);
      rem /= static_cast<std::size_t>(dims[d]);
    }
    double acc = 0.0;
    for (std::size_t d = 0; d < dims.size(); ++d) {
      const double f = 2.0 * normalized_frequency(idx[d], static_cast<std::size_t>(dims[d]));
      acc += f * f;
    }
    mask[flat] = std::sqrt(acc / static_cast<double>(dims.size())) < cutoff;
  }
  return mask;
}

void blend_block(std::span<const double> low, std::span<const double> high, std::span<double> out,
                 const std::vector<int>& dims, const std::vector<bool>& mask) {
  const std::size_t n = low.size();
  std::vector<Complex> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = low[i];
    b[i] = high[i];
  }
  transform(a, dims, FFTW_FORWARD);
  transform(b, dims, FFTW_FORWARD);
  for (std::size_t i = 0; i < n; ++i) a[i] = mask[i] ? a[i] : b[i];
  transform(a, dims, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i].real() * scale;
}

void normalize_unit_mean_square(Clip& clip) {
  double ss = 0.0;
  for (double v : clip.values()) ss += v * v;
  const double ms = ss / static_cast<double>(clip.size());
  if (ms <= 0.0) return;
  const double inv = 1.0 / std::sqrt(ms);
  for (double& v : clip.values()) v *= inv;
}

}  // namespace

Clip fft_blend(const Clip& low_source, const Clip& noise, double cutoff, FftMode mode) {
  if (!(cutoff >= 0.0 && cutoff <= 1.0)) throw std::invalid_argument("fft_blend: cutoff must lie in [0, 1]");
  if (low_source.shape() != noise.shape()) throw std::invalid_argument("fft_blend: shape mismatch");
  if (low_source.empty()) throw std::invalid_argument("fft_blend: empty input");
  Clip out(noise.shape());
  const int h = static_cast<int>(noise.height());
  const int w = static_cast<int>(noise.width());
  if (mode == FftMode::Spatial2D) {
    const std::vector<int> dims{h, w};
    const auto mask = low_mask(dims, cutoff);
    for (std::size_t f = 0; f < noise.frames(); ++f)
      blend_block(low_source.frame_values(f), noise.frame_values(f), out.frame_values(f), dims, mask);
  } else {
    const std::vector<int> dims{static_cast<int>(noise.frames()), h, w};
    blend_block(low_source.values(), noise.values(), out.values(), dims, low_mask(dims, cutoff));
  }
  normalize_unit_mean_square(out);
  return out;
}

Clip sample_fft_blend(const Clip& prev_frames, double cutoff, RngStream& rng, FftMode mode,
                      const NoiseSchedule& schedule, int level) {
  if (prev_frames.empty()) throw std::invalid_argument("sample_fft_blend: no previous frames");
  if (!(cutoff >= 0.0 && cutoff <= 1.0)) throw std::invalid_argument("sample_fft_blend: cutoff must lie in [0, 1]");
  Clip renoise_eps = sample_random(prev_frames.shape(), rng);
  const Clip renoised =
      forward_noise(prev_frames, renoise_eps, uniform_levels(prev_frames.frames(), level), schedule);
  const Clip eta = sample_random(prev_frames.shape(), rng);
  return fft_blend(renoised, eta, cutoff, mode);
}

Clip sample_inversion(const Clip& prev_clip, const DenoiserFn& denoiser, const NoiseSchedule& schedule,
                      std::optional<int> top_level) {
  return ddim_invert(prev_clip, schedule.tau(0), top_level.value_or(schedule.top()), denoiser, schedule);
}

Clip resample_neighborhood(const Clip& inverted, double delta, RngStream& rng) {
  if (!(delta >= 0.0 && delta < 1.0)) throw std::invalid_argument("inversion resampling: delta must lie in [0, 1)");
  if (delta == 0.0) return inverted;
  Clip out(inverted.shape());
  const double keep = std::sqrt(1.0 - delta * delta);
  auto src = inverted.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = keep * src[i] + delta * rng.normal();
  return out;
}

Clip sample_inversion_resample(const Clip& prev_clip, double delta, const DenoiserFn& denoiser,
                               const NoiseSchedule& schedule, RngStream& rng, std::optional<int> top_level) {
  if (!(delta >= 0.0 && delta < 1.0)) throw std::invalid_argument("inversion resampling: delta must lie in [0, 1)");
  return resample_neighborhood(sample_inversion(prev_clip, denoiser, schedule, top_level), delta, rng);
}

std::array<std::size_t, kStrategyCount> allocate_counts(std::size_t n,
                                                        const std::array<double, kStrategyCount>& weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("pool mix: weights must be finite and non-negative");
    total += w;
  }
  if (total <= 0.0) throw std::invalid_argument("pool mix: all weights are zero");
  std::array<std::size_t, kStrategyCount> counts{};
  std::array<double, kStrategyCount> remainder{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < kStrategyCount; ++i) {
    const double quota = static_cast<double>(n) * weights[i] / total;
    counts[i] = static_cast<std::size_t>(std::floor(quota));
    remainder[i] = quota - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::array<std::size_t, kStrategyCount> order{};
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < n; i = (i + 1) % kStrategyCount) {
    counts[order[i]] += 1;
    ++assigned;
  }
  return counts;
}

Clip pool_context_frames(const Trajectory& traj, const Shape& candidate_shape) {
  const std::size_t have = traj.video.frames();
  if (have == 0) throw std::invalid_argument("pool: trajectory has no frames");
  const std::size_t want = candidate_shape.frames;
  Clip out(candidate_shape);
  // Short videos are padded at the front with their oldest frame.
  for (std::size_t f = 0; f < want; ++f) {
    const std::size_t back = want - f;
    const std::size_t src = back <= have ? have - back : 0;
    auto s = traj.video.frame_values(src);
    std::copy(s.begin(), s.end(), out.frame_values(f).begin());
  }
  return out;
}

bool pool_needs_inversion(std::size_t n, const PoolContext& ctx, const PoolParams& params) {
  if (ctx.trajectory == nullptr || ctx.trajectory->empty()) return false;
  const auto counts = allocate_counts(n, params.mix);
  return counts[static_cast<std::size_t>(Strategy::Inversion)] + counts[static_cast<std::size_t>(Strategy::InversionResample)] > 0;
}

std::vector<Candidate> build_pool(std::size_t n, const PoolContext& ctx, const PoolParams& params,
                                  const DenoiserFn& denoiser, const NoiseSchedule& schedule) {
  if (n == 0) throw std::invalid_argument("build_pool: need at least one candidate");
  if (ctx.trajectory == nullptr) throw std::invalid_argument("build_pool: missing trajectory");
  const auto counts = allocate_counts(n, params.mix);
  const bool has_context = !ctx.trajectory->empty();

  std::optional<Clip> context;
  std::optional<Clip> inverted;
  if (has_context) {
    context = pool_context_frames(*ctx.trajectory, ctx.candidate_shape);
    if (pool_needs_inversion(n, ctx, params))
      inverted = sample_inversion(*context, denoiser, schedule, ctx.top_level);
  }

  std::vector<Candidate> pool;
  pool.reserve(n);
  for (std::size_t s = 0; s < kStrategyCount; ++s) {
    for (std::size_t c = 0; c < counts[s]; ++c) {
      Candidate cand;
      cand.slot = ctx.slot;
      cand.index = pool.size();
      const StreamKey key{ctx.seed, ctx.step, ctx.slot, cand.index, Purpose::Candidate};
      cand.stream = key.hash();
      cand.strategy = has_context ? static_cast<Strategy>(s) : Strategy::Random;
      switch (cand.strategy) {
        case Strategy::Random: {
          RngStream rng(key);
          cand.noise = sample_random(ctx.candidate_shape, rng);
          break;
        }
        case Strategy::FftBlend: {
          RngStream rng(key.with(Purpose::FftNoise));
          cand.noise = sample_fft_blend(*context, params.fft_cutoff, rng, params.fft_mode, schedule, ctx.top_level);
          break;
        }
        case Strategy::Inversion:
          cand.noise = *inverted;
          break;
        case Strategy::InversionResample: {
          RngStream rng(key.with(Purpose::Resample));
          cand.noise = resample_neighborhood(*inverted, params.delta, rng);
          break;
        }
      }
      pool.push_back(std::move(cand));
    }
  }
  return pool;
}

}  // namespace noisesearch
