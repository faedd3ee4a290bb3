#include "noisesearch/paradigms.hpp"

#include <stdexcept>

#include "noisesearch/kernels.hpp"

namespace noisesearch {

void DenoisingQueue::validate(const NoiseSchedule& schedule) const {
  const std::size_t n = frames.frames();
  if (n == 0 || levels.size() != n) throw std::invalid_argument("DenoisingQueue: level count must match frames");
  if (window * partitions != n) throw std::invalid_argument("DenoisingQueue: length must equal M * P");
  for (std::size_t i = 0; i < n; ++i) {
    if (levels[i] != schedule.tau(static_cast<int>(i)))
      throw std::invalid_argument("DenoisingQueue: entry levels must be tau_0 .. tau_{L-1}");
  }
  if (static_cast<int>(n) > schedule.ddim_steps())
    throw std::invalid_argument("DenoisingQueue: schedule has no level above the queue for fresh noise");
}

Clip trajectory_tail(const Trajectory& traj, std::size_t overlap) {
  if (overlap > traj.video.frames()) throw std::invalid_argument("trajectory_tail: trajectory shorter than overlap");
  return traj.video.slice(traj.video.frames() - overlap, overlap);
}

Clip condition_on_tail(const Clip& noisy, const Clip& init_noise, const Clip& tail, int t,
                       const NoiseSchedule& schedule) {
  Clip out = noisy;
  const auto [alpha, sigma] = schedule.signal_noise(t);
  for (std::size_t f = 0; f < tail.frames(); ++f)
    kernels::lincomb(alpha, tail.frame_values(f), sigma, init_noise.frame_values(f), out.frame_values(f));
  return out;
}

Clip chunk_step(const Trajectory& traj, const Clip& init_noise, const DenoiserFn& denoiser,
                const NoiseSchedule& schedule, std::size_t overlap) {
  if (overlap >= init_noise.frames()) throw std::invalid_argument("chunk_step: overlap must be smaller than the chunk");
  if (overlap > 0 && traj.video.frames() < overlap)
    throw std::invalid_argument("chunk_step: trajectory shorter than the requested overlap");
  if (overlap == 0) return full_denoise(init_noise, denoiser, schedule);

  const Clip tail = trajectory_tail(traj, overlap);
  if (tail.height() != init_noise.height() || tail.width() != init_noise.width())
    throw std::invalid_argument("chunk_step: frame size mismatch");
  Clip v = init_noise;
  for (int i = schedule.ddim_steps(); i > 0; --i) {
    v = condition_on_tail(v, init_noise, tail, schedule.tau(i), schedule);
    v = ddim_step(v, schedule.tau(i), schedule.tau(i - 1), denoiser, schedule);
  }
  for (std::size_t f = 0; f < overlap; ++f) {
    auto src = tail.frame_values(f);
    std::copy(src.begin(), src.end(), v.frame_values(f).begin());
  }
  return v;
}

void commit_chunk(Trajectory& traj, const Clip& chunk, std::size_t overlap) {
  for (std::size_t f = overlap; f < chunk.frames(); ++f) traj.video.append_frame(chunk.frame(f));
}

DenoisingQueue fifo_init_from_clip(const Clip& base, const NoiseSchedule& schedule, std::size_t window,
                                   std::size_t partitions, RngStream& rng) {
  const std::size_t length = window * partitions;
  if (length == 0) throw std::invalid_argument("fifo_init: M and P must be positive");
  if (static_cast<int>(length) > schedule.ddim_steps())
    throw std::invalid_argument("fifo_init: schedule resolution too low for a queue of M * P frames");
  if (base.frames() < length) throw std::invalid_argument("fifo_init: base clip shorter than the queue");

  DenoisingQueue q;
  q.window = window;
  q.partitions = partitions;
  q.frames = base.slice(0, length);
  q.levels.resize(length);
  Clip eps(q.frames.shape());
  rng.fill_normal(eps.values());
  for (std::size_t i = 0; i < length; ++i) q.levels[i] = schedule.tau(static_cast<int>(i));
  q.frames = forward_noise(q.frames, eps, q.levels, schedule);
  return q;
}

DenoisingQueue fifo_init(const std::optional<SubjectSpec>& cond, const DenoiserFn& denoiser,
                         const NoiseSchedule& schedule, std::size_t window, std::size_t partitions,
                         std::size_t height, std::size_t width, RngStream& rng) {
  const std::size_t length = window * partitions;
  if (length == 0) throw std::invalid_argument("fifo_init: M and P must be positive");
  if (static_cast<int>(length) > schedule.ddim_steps())
    throw std::invalid_argument("fifo_init: schedule resolution too low for a queue of M * P frames");
  Clip base;
  if (cond) {
    base = gen_clip(*cond, length, height, width, rng);
  } else {
    Clip noise(Shape{length, height, width});
    rng.fill_normal(noise.values());
    base = full_denoise(noise, denoiser, schedule);
  }
  return fifo_init_from_clip(base, schedule, window, partitions, rng);
}

FifoEvalState fifo_eval_state(const DenoisingQueue& queue, const Frame& fresh_noise, const NoiseSchedule& schedule) {
  queue.validate(schedule);
  const std::size_t n = queue.length();
  if (fresh_noise.height() != queue.frames.height() || fresh_noise.width() != queue.frames.width())
    throw std::invalid_argument("fifo_step: fresh noise frame size mismatch");
  FifoEvalState state;
  state.frames = queue.frames.slice(1, n - 1);
  state.frames.append_frame(fresh_noise);
  state.levels.resize(n);
  for (std::size_t i = 0; i < n; ++i) state.levels[i] = schedule.tau(static_cast<int>(i) + 1);
  return state;
}

std::pair<DenoisingQueue, Frame> fifo_step(const DenoisingQueue& queue, const Frame& fresh_noise,
                                           const DenoiserFn& denoiser, const NoiseSchedule& schedule) {
  FifoEvalState state = fifo_eval_state(queue, fresh_noise, schedule);
  Frame emitted = queue.frames.frame(0);
  DenoisingQueue next;
  next.window = queue.window;
  next.partitions = queue.partitions;
  next.levels = queue.levels;
  next.frames = ddim_step(state.frames, state.levels, next.levels, denoiser, schedule);
  return {std::move(next), std::move(emitted)};
}

}  // namespace noisesearch
