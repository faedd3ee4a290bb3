#include "noisesearch/sampler.hpp"

#include <stdexcept>

#include "noisesearch/kernels.hpp"

namespace noisesearch {

std::shared_ptr<const NoiseModel> zero_denoiser() {
  return std::make_shared<FunctionDenoiser>(
      [](const Clip& v, std::span<const int>, const NoiseSchedule&) { return Clip(v.shape()); }, "zero");
}

DenoiserFn::DenoiserFn(std::shared_ptr<const NoiseModel> model) : model_(std::move(model)) {
  if (!model_) throw std::invalid_argument("DenoiserFn: null model");
}

Clip DenoiserFn::operator()(const Clip& noisy, std::span<const int> levels, const NoiseSchedule& schedule) const {
  calls_.fetch_add(1, std::memory_order_relaxed);
  return model_->predict_noise(noisy, levels, schedule);
}

Clip DenoiserFn::operator()(const Clip& noisy, int t, const NoiseSchedule& schedule) const {
  const auto levels = uniform_levels(noisy.frames(), t);
  return (*this)(noisy, levels, schedule);
}

std::vector<int> uniform_levels(std::size_t frames, int t) { return std::vector<int>(frames, t); }

Clip forward_noise(const Clip& clean, const Clip& eps, std::span<const int> levels, const NoiseSchedule& schedule) {
  if (clean.shape() != eps.shape() || levels.size() != clean.frames())
    throw std::invalid_argument("forward_noise: shape mismatch");
  Clip out(clean.shape());
  for (std::size_t f = 0; f < clean.frames(); ++f) {
    const auto [alpha, sigma] = schedule.signal_noise(levels[f]);
    kernels::lincomb(alpha, clean.frame_values(f), sigma, eps.frame_values(f), out.frame_values(f));
  }
  return out;
}

Clip ddim_update(const Clip& noisy, const Clip& eps, std::span<const int> from, std::span<const int> to,
                 const NoiseSchedule& schedule) {
  if (noisy.shape() != eps.shape() || from.size() != noisy.frames() || to.size() != noisy.frames())
    throw std::invalid_argument("ddim_update: shape mismatch");
  Clip out = noisy;
  for (std::size_t f = 0; f < noisy.frames(); ++f) {
    if (from[f] == to[f]) continue;
    const auto src = schedule.signal_noise(from[f]);
    const auto dst = schedule.signal_noise(to[f]);
    // dst.alpha * (v - src.sigma * eps) / src.alpha + dst.sigma * eps
    const double ratio = dst.alpha / src.alpha;
    kernels::lincomb(ratio, noisy.frame_values(f), dst.sigma - ratio * src.sigma, eps.frame_values(f),
                     out.frame_values(f));
  }
  return out;
}

namespace {

void require_ddim_time(const NoiseSchedule& schedule, int t, const char* what) {
  if (!schedule.is_ddim_time(t)) throw std::invalid_argument(std::string(what) + ": time is not a remapped DDIM time");
}

}  // namespace

Clip ddim_step(const Clip& noisy, int t_from, int t_to, const DenoiserFn& denoiser, const NoiseSchedule& schedule) {
  require_ddim_time(schedule, t_from, "ddim_step");
  require_ddim_time(schedule, t_to, "ddim_step");
  if (!(t_from > t_to)) throw std::invalid_argument("ddim_step: need t_from > t_to");
  const auto from = uniform_levels(noisy.frames(), t_from);
  const auto to = uniform_levels(noisy.frames(), t_to);
  const Clip eps = denoiser(noisy, from, schedule);
  return ddim_update(noisy, eps, from, to, schedule);
}

Clip ddim_step(const Clip& noisy, std::span<const int> from, std::span<const int> to, const DenoiserFn& denoiser,
               const NoiseSchedule& schedule) {
  if (from.size() != noisy.frames() || to.size() != noisy.frames())
    throw std::invalid_argument("ddim_step: one level per frame required");
  for (std::size_t f = 0; f < from.size(); ++f)
    if (to[f] > from[f]) throw std::invalid_argument("ddim_step: target level above source level");
  const Clip eps = denoiser(noisy, from, schedule);
  return ddim_update(noisy, eps, from, to, schedule);
}

Clip predict_x0(const Clip& noisy, std::span<const int> levels, const DenoiserFn& denoiser,
                const NoiseSchedule& schedule) {
  if (levels.size() != noisy.frames()) throw std::invalid_argument("predict_x0: one level per frame required");
  bool any_noisy = false;
  for (int t : levels) any_noisy = any_noisy || schedule.signal_noise(t).sigma > 0.0;
  if (!any_noisy) return noisy;
  const Clip eps = denoiser(noisy, levels, schedule);
  Clip out(noisy.shape());
  for (std::size_t f = 0; f < noisy.frames(); ++f) {
    const auto [alpha, sigma] = schedule.signal_noise(levels[f]);
    // same coefficient arithmetic as ddim_update with a clean target, so the two agree bit-for-bit
    const double inv = 1.0 / alpha;
    kernels::lincomb(inv, noisy.frame_values(f), 0.0 - inv * sigma, eps.frame_values(f), out.frame_values(f));
  }
  return out;
}

Clip predict_x0(const Clip& noisy, int t, const DenoiserFn& denoiser, const NoiseSchedule& schedule) {
  require_ddim_time(schedule, t, "predict_x0");
  const auto levels = uniform_levels(noisy.frames(), t);
  return predict_x0(noisy, levels, denoiser, schedule);
}

Clip ddim_invert(const Clip& clean, int t_from, int t_to, const DenoiserFn& denoiser, const NoiseSchedule& schedule) {
  require_ddim_time(schedule, t_from, "ddim_invert");
  require_ddim_time(schedule, t_to, "ddim_invert");
  if (!(t_from < t_to)) throw std::invalid_argument("ddim_invert: need t_from < t_to");
  Clip v = clean;
  const int lo = schedule.ddim_position(t_from);
  const int hi = schedule.ddim_position(t_to);
  for (int i = lo; i < hi; ++i) {
    const auto from = uniform_levels(v.frames(), schedule.tau(i));
    const auto to = uniform_levels(v.frames(), schedule.tau(i + 1));
    const Clip eps = denoiser(v, from, schedule);
    v = ddim_update(v, eps, from, to, schedule);
  }
  return v;
}

Clip full_denoise(const Clip& init_noise, const DenoiserFn& denoiser, const NoiseSchedule& schedule) {
  Clip v = init_noise;
  for (int i = schedule.ddim_steps(); i > 0; --i) v = ddim_step(v, schedule.tau(i), schedule.tau(i - 1), denoiser, schedule);
  return v;
}

int remapped_intervals(const NoiseSchedule& schedule, int t_low, int t_high) {
  const int lo = schedule.ddim_position(t_low);
  const int hi = schedule.ddim_position(t_high);
  if (lo < 0 || hi < 0) throw std::invalid_argument("remapped_intervals: not a remapped time");
  return hi - lo;
}

}  // namespace noisesearch
