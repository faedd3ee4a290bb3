#pragma once

// Candidate initial noises drawn from tilted distributions around the
// already generated video: plain Gaussian (A1), low-frequency blend with the
// recent frames (A2), DDIM inversion of the recent frames (A3) and a
// spherical neighbourhood of that inversion (A4).

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "noisesearch/paradigms.hpp"
#include "noisesearch/rng.hpp"
#include "noisesearch/sampler.hpp"
#include "noisesearch/tensor.hpp"

namespace noisesearch {

enum class Strategy : int { Random = 0, FftBlend = 1, Inversion = 2, InversionResample = 3 };
inline constexpr std::size_t kStrategyCount = 4;

std::string_view strategy_tag(Strategy s);  // "A1" .. "A4"
Strategy parse_strategy_tag(std::string_view tag);

enum class FftMode { Spatial2D, SpatioTemporal3D };

struct Candidate {
  Clip noise;
  Strategy strategy = Strategy::Random;
  std::size_t slot = 0;
  std::size_t index = 0;
  std::uint64_t stream = 0;
  std::optional<double> score;
};

Clip sample_random(const Shape& shape, RngStream& rng);

// Ideal radial mask split: frequency bins with normalized radius below
// `cutoff` come from `low_source`, the rest from `noise`. The normalized
// radius is sqrt(mean_d (2 f_d)^2) with f_d in cycles/sample, so the
// all-Nyquist corner has radius 1; cutoff == 1 keeps every bin low. The
// result is rescaled to unit mean square.
Clip fft_blend(const Clip& low_source, const Clip& noise, double cutoff, FftMode mode);

// Forward-noises `prev_frames` to `level` and blends it with fresh Gaussian
// noise of the same shape.
Clip sample_fft_blend(const Clip& prev_frames, double cutoff, RngStream& rng, FftMode mode,
                      const NoiseSchedule& schedule, int level);

// ddim_invert(prev, tau_0, top_level); top_level defaults to tau_S.
Clip sample_inversion(const Clip& prev_clip, const DenoiserFn& denoiser, const NoiseSchedule& schedule,
                      std::optional<int> top_level = std::nullopt);

// sqrt(1 - delta^2) * inverted + delta * eta, eta ~ N(0, I); delta in [0, 1).
Clip resample_neighborhood(const Clip& inverted, double delta, RngStream& rng);
Clip sample_inversion_resample(const Clip& prev_clip, double delta, const DenoiserFn& denoiser,
                               const NoiseSchedule& schedule, RngStream& rng,
                               std::optional<int> top_level = std::nullopt);

// Largest-remainder apportionment of n items by non-negative weights; ties in
// the fractional parts go to the lower strategy index.
std::array<std::size_t, kStrategyCount> allocate_counts(std::size_t n, const std::array<double, kStrategyCount>& weights);

struct PoolParams {
  std::array<double, kStrategyCount> mix{0.25, 0.25, 0.25, 0.25};
  double fft_cutoff = 0.25;
  FftMode fft_mode = FftMode::Spatial2D;
  double delta = 0.5;
};

struct PoolContext {
  const Trajectory* trajectory = nullptr;
  Shape candidate_shape;
  int top_level = 0;  // noise level of the candidates
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
  std::size_t slot = 0;
};

// Recent clean frames the tilted strategies build on: the last
// candidate_shape.frames frames of the video (fewer if the video is shorter).
Clip pool_context_frames(const Trajectory& traj, const Shape& candidate_shape);

// True when building this pool runs a DDIM inversion (A3/A4 present and the
// trajectory has frames).
bool pool_needs_inversion(std::size_t n, const PoolContext& ctx, const PoolParams& params);

std::vector<Candidate> build_pool(std::size_t n, const PoolContext& ctx, const PoolParams& params,
                                  const DenoiserFn& denoiser, const NoiseSchedule& schedule);

}  // namespace noisesearch
