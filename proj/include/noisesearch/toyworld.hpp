#pragma once

// Synthetic moving-subject videos and two noise-prediction models whose
// outputs are exact posterior quantities, so sampler behaviour can be checked
// against closed forms instead of trained weights.

#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "noisesearch/rng.hpp"
#include "noisesearch/schedule.hpp"
#include "noisesearch/tensor.hpp"

namespace noisesearch {

enum class ShapeKind { Square, Disc };

struct SubjectSpec {
  ShapeKind kind = ShapeKind::Square;
  int size = 4;
  double intensity = 1.0;
  int row = 0;
  int col = 0;
  // Pixels per frame; positions are rounded half up.
  double d_row = 0.0;
  double d_col = 0.0;
  double background = -1.0;

  // Throws std::invalid_argument when the subject does not fit an H x W frame.
  void validate(std::size_t height, std::size_t width) const;
};

// Renders frame f of the subject (toroidal wrap) without pixel noise.
Frame render_frame(const SubjectSpec& spec, std::size_t f, std::size_t height, std::size_t width);

// M frames; frame f has the subject at (row, col) + f * velocity. Gaussian
// pixel noise of the given std is added to frames f >= 1 only, so frame 0
// always matches render_frame exactly.
Clip gen_clip(const SubjectSpec& spec, std::size_t frames, std::size_t height, std::size_t width,
              RngStream& rng, double pixel_noise = 0.0);

// The reference corpus is organised in families. Each family has one base
// clip of a subject in uniform (periodic, toroidal) motion plus variants that
// copy the base up to a random frame and then either cut to an unrelated
// subject for the rest of the clip, glitch to one for a few frames before
// returning to the base, or keep the subject but change its velocity.
struct CorpusParams {
  std::size_t families = 12;
  std::size_t cut_variants = 1;
  std::size_t glitch_variants = 1;
  std::size_t drift_variants = 1;
  std::size_t frames = 32;
  std::size_t height = 16;
  std::size_t width = 16;
  std::size_t glitch_length = 2;
  double speed = 0.25;
  double pixel_noise = 0.0;

  std::size_t clips() const { return families * (1 + cut_variants + glitch_variants + drift_variants); }
};

// Velocity components are drawn from {-speed, 0, speed}.
SubjectSpec random_subject(RngStream& rng, std::size_t height, std::size_t width, double speed = 1.0);
std::vector<Clip> make_corpus(const CorpusParams& params, std::uint64_t seed);

// Predicts the noise component of a clip whose frame f sits at schedule index
// levels[f]. Implementations are immutable and thread-safe.
class NoiseModel {
 public:
  virtual ~NoiseModel() = default;
  virtual Clip predict_noise(const Clip& noisy, std::span<const int> levels,
                             const NoiseSchedule& schedule) const = 0;
  virtual std::string_view name() const = 0;
};

// Exact noise prediction for the prior x ~ N(mean, prior_std^2 I).
class GaussianDenoiser final : public NoiseModel {
 public:
  // `mean` has either one frame (broadcast over time) or as many frames as the inputs.
  GaussianDenoiser(Clip mean, double prior_std);

  Clip posterior_mean(const Clip& noisy, std::span<const int> levels, const NoiseSchedule& schedule) const;
  Clip predict_noise(const Clip& noisy, std::span<const int> levels,
                     const NoiseSchedule& schedule) const override;
  std::string_view name() const override { return "gaussian"; }

  const Clip& mean() const { return mean_; }
  double prior_std() const { return prior_std_; }

 private:
  std::span<const double> mean_frame(std::size_t f) const;

  Clip mean_;
  double prior_std_;
};

// Exact noise prediction for the empirical distribution of a reference
// corpus. An input of F frames is scored against every contiguous F-frame
// window of every corpus clip (a time-stationary empirical prior); when F
// equals the corpus clip length there is exactly one window per clip.
class MixtureDenoiser final : public NoiseModel {
 public:
  // With `prune` set, windows whose partial log-weight already sits more than
  // 800 nats below a complete one are dropped early. Their weight would
  // underflow to exactly zero, so results are bit-identical either way.
  explicit MixtureDenoiser(std::vector<Clip> corpus, bool prune = true);

  // Normalized posterior weights over windows, ordered (clip, offset)
  // (log-sum-exp stabilized).
  std::vector<double> posterior_weights(const Clip& noisy, std::span<const int> levels,
                                        const NoiseSchedule& schedule) const;
  Clip posterior_mean(const Clip& noisy, std::span<const int> levels, const NoiseSchedule& schedule) const;
  Clip predict_noise(const Clip& noisy, std::span<const int> levels,
                     const NoiseSchedule& schedule) const override;
  std::string_view name() const override { return "mixture"; }

  std::size_t corpus_size() const { return count_; }
  std::size_t window_count(std::size_t frames) const { return count_ * (clip_shape_.frames - frames + 1); }
  const Shape& clip_shape() const { return clip_shape_; }
  Clip corpus_clip(std::size_t j) const;

 private:
  void check_input(const Clip& noisy, std::span<const int> levels) const;
  std::span<const double> corpus_frame(std::size_t j, std::size_t f) const;
  std::span<const double> window(std::size_t j, std::size_t offset, std::size_t frames) const;

  Shape clip_shape_;
  std::size_t count_ = 0;
  std::vector<double> data_;
  bool prune_ = true;
};

// Noise from a posterior mean: eps_f = (v_f - alpha_f m_f) / sigma_f, zero where sigma_f == 0.
Clip noise_from_mean(const Clip& noisy, const Clip& mean, std::span<const int> levels,
                     const NoiseSchedule& schedule);

}  // namespace noisesearch
