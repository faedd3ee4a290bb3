#pragma once

// Deterministic DDIM (eta = 0): reverse steps, one-step clean prediction,
// inversion toward higher noise, and full-trajectory denoising.

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "noisesearch/schedule.hpp"
#include "noisesearch/tensor.hpp"
#include "noisesearch/toyworld.hpp"

namespace noisesearch {

// Noise model adapter built from a callable; handy for oracle denoisers.
class FunctionDenoiser final : public NoiseModel {
 public:
  using Fn = std::function<Clip(const Clip&, std::span<const int>, const NoiseSchedule&)>;
  explicit FunctionDenoiser(Fn fn, std::string_view name = "function") : fn_(std::move(fn)), name_(name) {}
  Clip predict_noise(const Clip& noisy, std::span<const int> levels, const NoiseSchedule& schedule) const override {
    return fn_(noisy, levels, schedule);
  }
  std::string_view name() const override { return name_; }

 private:
  Fn fn_;
  std::string_view name_;
};

std::shared_ptr<const NoiseModel> zero_denoiser();

// Counted evaluation of a shared, immutable noise model. Each call adds
// exactly one to the counter; the counter is safe to bump from many threads.
class DenoiserFn {
 public:
  explicit DenoiserFn(std::shared_ptr<const NoiseModel> model);
  DenoiserFn(const DenoiserFn&) = delete;
  DenoiserFn& operator=(const DenoiserFn&) = delete;

  Clip operator()(const Clip& noisy, std::span<const int> levels, const NoiseSchedule& schedule) const;
  Clip operator()(const Clip& noisy, int t, const NoiseSchedule& schedule) const;

  std::uint64_t calls() const { return calls_.load(std::memory_order_relaxed); }
  void reset_calls() { calls_.store(0, std::memory_order_relaxed); }
  const NoiseModel& model() const { return *model_; }
  const std::shared_ptr<const NoiseModel>& model_ptr() const { return model_; }

 private:
  std::shared_ptr<const NoiseModel> model_;
  mutable std::atomic<std::uint64_t> calls_{0};
};

std::vector<int> uniform_levels(std::size_t frames, int t);

// Forward map v = alpha_t x + sigma_t eps, per frame.
Clip forward_noise(const Clip& clean, const Clip& eps, std::span<const int> levels, const NoiseSchedule& schedule);

// One DDIM update with per-frame source and target levels. Frames whose
// source and target coincide are left untouched.
Clip ddim_update(const Clip& noisy, const Clip& eps, std::span<const int> from, std::span<const int> to,
                 const NoiseSchedule& schedule);

// Reverse step t_from -> t_to (t_from > t_to, both remapped times).
Clip ddim_step(const Clip& noisy, int t_from, int t_to, const DenoiserFn& denoiser, const NoiseSchedule& schedule);

// Per-frame variant used by diagonal denoising: one denoiser call on the whole clip.
Clip ddim_step(const Clip& noisy, std::span<const int> from, std::span<const int> to, const DenoiserFn& denoiser,
               const NoiseSchedule& schedule);

// x0 = (v - sigma_t eps(v, t)) / alpha_t with exactly one denoiser call;
// returns the input untouched (no call) when sigma_t == 0.
Clip predict_x0(const Clip& noisy, int t, const DenoiserFn& denoiser, const NoiseSchedule& schedule);
Clip predict_x0(const Clip& noisy, std::span<const int> levels, const DenoiserFn& denoiser,
                const NoiseSchedule& schedule);

// Re-noises a clip from t_from up to t_to (t_from < t_to) one remapped
// interval at a time, anchoring eps at the current state of each interval.
Clip ddim_invert(const Clip& clean, int t_from, int t_to, const DenoiserFn& denoiser, const NoiseSchedule& schedule);

// Walks every remapped interval from the top level down to tau_0.
Clip full_denoise(const Clip& init_noise, const DenoiserFn& denoiser, const NoiseSchedule& schedule);

// Number of remapped intervals between two remapped times.
int remapped_intervals(const NoiseSchedule& schedule, int t_low, int t_high);

}  // namespace noisesearch
