#pragma once

// Long-video generation paradigms: chunk-by-chunk sliding-window
// autoregression and diagonal (FIFO) denoising over a queue of frames at
// increasing noise levels.

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "noisesearch/rng.hpp"
#include "noisesearch/sampler.hpp"
#include "noisesearch/schedule.hpp"
#include "noisesearch/tensor.hpp"
#include "noisesearch/toyworld.hpp"

namespace noisesearch {

// Queue of M * P frames, front first. After construction and after every
// fifo_step, entry i sits at remapped level tau_i.
struct DenoisingQueue {
  Clip frames;
  std::vector<int> levels;
  std::size_t window = 0;      // M
  std::size_t partitions = 0;  // P

  std::size_t length() const { return frames.frames(); }
  // Throws std::invalid_argument on a malformed queue.
  void validate(const NoiseSchedule& schedule) const;
};

struct Trajectory {
  Clip video;                    // fully denoised frames, oldest first
  std::optional<Frame> anchor;   // clean frame used as the long-range reference
  std::optional<DenoisingQueue> queue;
  std::uint64_t stream_label = 0;

  bool empty() const { return video.frames() == 0; }
};

// Clip of `overlap` frames ending the trajectory video.
Clip trajectory_tail(const Trajectory& traj, std::size_t overlap);

// Evaluation state for a chunk candidate: the noise with its first `overlap`
// positions replaced by the tail re-noised to level t (the tail's noise is
// taken from the same positions of init_noise).
Clip condition_on_tail(const Clip& noisy, const Clip& init_noise, const Clip& tail, int t,
                       const NoiseSchedule& schedule);

// Denoises one M-frame chunk from the top level, holding the first `overlap`
// positions on the re-noised tail of the trajectory at every step. The first
// `overlap` output frames equal the tail bit-for-bit.
Clip chunk_step(const Trajectory& traj, const Clip& init_noise, const DenoiserFn& denoiser,
                const NoiseSchedule& schedule, std::size_t overlap);

// Appends the new frames of a chunk (those after the overlap) to the video.
void commit_chunk(Trajectory& traj, const Clip& chunk, std::size_t overlap);

// Builds the initial queue from a clean base clip by forward-noising frame i
// to tau_i with noise drawn from `rng`.
DenoisingQueue fifo_init_from_clip(const Clip& base, const NoiseSchedule& schedule, std::size_t window,
                                   std::size_t partitions, RngStream& rng);

// Latent warm-up: the base clip is the subject rendered from `cond` when
// given, otherwise an unconditional full_denoise of fresh noise.
DenoisingQueue fifo_init(const std::optional<SubjectSpec>& cond, const DenoiserFn& denoiser,
                         const NoiseSchedule& schedule, std::size_t window, std::size_t partitions,
                         std::size_t height, std::size_t width, RngStream& rng);

struct FifoEvalState {
  Clip frames;
  std::vector<int> levels;
};

// Queue after dequeuing the front and enqueuing `fresh_noise` at the top,
// before the diagonal update: levels tau_1 .. tau_L.
FifoEvalState fifo_eval_state(const DenoisingQueue& queue, const Frame& fresh_noise, const NoiseSchedule& schedule);

// One diagonal denoising step: dequeues the clean front frame, enqueues the
// fresh noise at tau_L and moves every entry down one level with a single
// denoiser call on the whole queue.
std::pair<DenoisingQueue, Frame> fifo_step(const DenoisingQueue& queue, const Frame& fresh_noise,
                                           const DenoiserFn& denoiser, const NoiseSchedule& schedule);

}  // namespace noisesearch
