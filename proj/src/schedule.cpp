#include "noisesearch/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace noisesearch {
namespace {

std::vector<SignalNoise> coefficients(const std::vector<double>& alpha_bar) {
  std::vector<SignalNoise> out;
  out.reserve(alpha_bar.size());
  for (double ab : alpha_bar) out.push_back({std::sqrt(ab), std::sqrt(1.0 - ab)});
  return out;
}

}  // namespace

NoiseSchedule NoiseSchedule::linear(int total_steps, int ddim_steps, double beta_min, double beta_max) {
  if (ddim_steps < 1) throw std::invalid_argument("make_schedule: ddim_steps must be >= 1");
  if (total_steps < 2 || ddim_steps > total_steps - 1)
    throw std::invalid_argument("make_schedule: need total_steps >= 2 and ddim_steps <= total_steps - 1");
  if (!(beta_min > 0.0) || !(beta_min <= beta_max) || !(beta_max < 1.0))
    throw std::invalid_argument("make_schedule: need 0 < beta_min <= beta_max < 1");

  std::vector<double> alpha_bar(static_cast<std::size_t>(total_steps));
  double prod = 1.0;
  for (int t = 0; t < total_steps; ++t) {
    const double beta = beta_min + (beta_max - beta_min) * static_cast<double>(t) / (total_steps - 1);
    prod *= 1.0 - beta;
    alpha_bar[static_cast<std::size_t>(t)] = prod;
  }

  std::vector<int> times(static_cast<std::size_t>(ddim_steps) + 1);
  for (int i = 0; i <= ddim_steps; ++i) {
    // round-half-up of i * (T - 1) / S; spacing >= 1 keeps the sequence strictly increasing
    times[static_cast<std::size_t>(i)] =
        static_cast<int>((static_cast<long long>(i) * (total_steps - 1) * 2 + ddim_steps) / (2LL * ddim_steps));
  }
  return from_alpha_bar(std::move(alpha_bar), std::move(times));
}

NoiseSchedule NoiseSchedule::from_alpha_bar(std::vector<double> alpha_bar, std::vector<int> ddim_times) {
  if (alpha_bar.empty()) throw std::invalid_argument("schedule: empty alpha_bar");
  if (!(alpha_bar.front() <= 1.0) || !(alpha_bar.back() > 0.0))
    throw std::invalid_argument("schedule: alpha_bar must lie in (0, 1]");
  for (std::size_t i = 1; i < alpha_bar.size(); ++i)
    if (!(alpha_bar[i] < alpha_bar[i - 1]))
      throw std::invalid_argument("schedule: alpha_bar must be strictly decreasing");
  if (ddim_times.size() < 2) throw std::invalid_argument("schedule: need at least two remapped times");
  if (ddim_times.front() != 0) throw std::invalid_argument("schedule: ddim_times must start at 0");
  for (std::size_t i = 1; i < ddim_times.size(); ++i)
    if (ddim_times[i] <= ddim_times[i - 1])
      throw std::invalid_argument("schedule: ddim_times must be strictly increasing");
  if (ddim_times.back() >= static_cast<int>(alpha_bar.size()))
    throw std::invalid_argument("schedule: ddim_times out of range");
  auto coeffs = coefficients(alpha_bar);
  return NoiseSchedule(std::move(alpha_bar), std::move(ddim_times), std::move(coeffs));
}

int NoiseSchedule::tau(int i) const {
  if (i < 0 || i >= static_cast<int>(ddim_times_.size()))
    throw std::out_of_range("schedule: remapped position " + std::to_string(i) + " out of range");
  return ddim_times_[static_cast<std::size_t>(i)];
}

SignalNoise NoiseSchedule::signal_noise(int t) const {
  if (t < 0 || t >= total_steps())
    throw std::out_of_range("schedule: time index " + std::to_string(t) + " out of range");
  return coeffs_[static_cast<std::size_t>(t)];
}

bool NoiseSchedule::is_ddim_time(int t) const { return ddim_position(t) >= 0; }

int NoiseSchedule::ddim_position(int t) const {
  auto it = std::lower_bound(ddim_times_.begin(), ddim_times_.end(), t);
  if (it == ddim_times_.end() || *it != t) return -1;
  return static_cast<int>(it - ddim_times_.begin());
}

NoiseSchedule make_schedule(int total_steps, int ddim_steps, double beta_min, double beta_max) {
  return NoiseSchedule::linear(total_steps, ddim_steps, beta_min, beta_max);
}

}  // namespace noisesearch
