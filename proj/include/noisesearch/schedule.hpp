#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace noisesearch {

struct SignalNoise {
  double alpha;  // sqrt(alpha_bar)
  double sigma;  // sqrt(1 - alpha_bar)
  friend bool operator==(const SignalNoise&, const SignalNoise&) = default;
};

// Variance-preserving noise schedule with a DDIM sub-sequence of time indices.
// Immutable once built.
class NoiseSchedule {
 public:
  // Linear beta schedule over `total_steps` DDPM steps and `ddim_steps + 1`
  // evenly spaced remapped times that include both 0 and total_steps - 1.
  static NoiseSchedule linear(int total_steps, int ddim_steps, double beta_min, double beta_max);

  // Explicit alpha_bar and remapped times, validated against the invariants.
  static NoiseSchedule from_alpha_bar(std::vector<double> alpha_bar, std::vector<int> ddim_times);

  int total_steps() const { return static_cast<int>(alpha_bar_.size()); }
  // S: number of remapped intervals; ddim_times() has S + 1 entries.
  int ddim_steps() const { return static_cast<int>(ddim_times_.size()) - 1; }
  std::span<const int> ddim_times() const { return ddim_times_; }
  std::span<const double> alpha_bar() const { return alpha_bar_; }

  // Time index of remapped position i (tau_i).
  int tau(int i) const;
  int top() const { return ddim_times_.back(); }

  SignalNoise signal_noise(int t) const;
  bool is_ddim_time(int t) const;
  // Position of t inside ddim_times, or -1.
  int ddim_position(int t) const;

  friend bool operator==(const NoiseSchedule&, const NoiseSchedule&) = default;

 private:
  NoiseSchedule(std::vector<double> alpha_bar, std::vector<int> ddim_times, std::vector<SignalNoise> coeffs)
      : alpha_bar_(std::move(alpha_bar)), ddim_times_(std::move(ddim_times)), coeffs_(std::move(coeffs)) {}

  std::vector<double> alpha_bar_;
  std::vector<int> ddim_times_;
  std::vector<SignalNoise> coeffs_;
};

NoiseSchedule make_schedule(int total_steps, int ddim_steps, double beta_min, double beta_max);

inline SignalNoise signal_noise(const NoiseSchedule& schedule, int t) { return schedule.signal_noise(t); }

}  // namespace noisesearch
