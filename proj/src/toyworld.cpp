#include "noisesearch/toyworld.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "noisesearch/kernels.hpp"

namespace noisesearch {

void SubjectSpec::validate(std::size_t height, std::size_t width) const {
  const auto h = static_cast<int>(height);
  const auto w = static_cast<int>(width);
  if (size < 1 || size > h || size > w) throw std::invalid_argument("SubjectSpec: shape larger than frame");
  if (row < 0 || row >= h || col < 0 || col >= w)
    throw std::invalid_argument("SubjectSpec: initial position outside frame");
  if (!std::isfinite(d_row) || !std::isfinite(d_col) || 2.0 * std::abs(d_row) >= h || 2.0 * std::abs(d_col) >= w)
    throw std::invalid_argument("SubjectSpec: per-frame displacement must be below half the frame");
  if (!std::isfinite(intensity) || !std::isfinite(background))
    throw std::invalid_argument("SubjectSpec: non-finite intensity");
}

namespace {

int wrap(long long v, int n) {
  const long long r = v % n;
  return static_cast<int>(r < 0 ? r + n : r);
}

// Shortest toroidal offset from a to b.
double torus_delta(double a, double b, int n) {
  double d = std::fmod(b - a, static_cast<double>(n));
  if (d < 0) d += n;
  if (d > n / 2.0) d -= n;
  return d;
}

}  // namespace

Frame render_frame(const SubjectSpec& spec, std::size_t f, std::size_t height, std::size_t width) {
  spec.validate(height, width);
  const int h = static_cast<int>(height);
  const int w = static_cast<int>(width);
  Frame frame(height, width, spec.background);
  const auto step = [f](int p0, double v) {
    return static_cast<long long>(std::floor(p0 + static_cast<double>(f) * v + 0.5));
  };
  const int r0 = wrap(step(spec.row, spec.d_row), h);
  const int c0 = wrap(step(spec.col, spec.d_col), w);
  if (spec.kind == ShapeKind::Square) {
    for (int dr = 0; dr < spec.size; ++dr)
      for (int dc = 0; dc < spec.size; ++dc)
        frame.at(static_cast<std::size_t>(wrap(r0 + dr, h)), static_cast<std::size_t>(wrap(c0 + dc, w))) =
            spec.intensity;
  } else {
    // Disc of diameter `size` whose bounding box starts at (r0, c0).
    const double radius = spec.size / 2.0;
    const double cr = r0 + radius - 0.5;
    const double cc = c0 + radius - 0.5;
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        const double dr = torus_delta(cr, r, h);
        const double dc = torus_delta(cc, c, w);
        if (dr * dr + dc * dc <= radius * radius)
          frame.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = spec.intensity;
      }
  }
  return frame;
}

Clip gen_clip(const SubjectSpec& spec, std::size_t frames, std::size_t height, std::size_t width,
              RngStream& rng, double pixel_noise) {
  if (frames < 1) throw std::invalid_argument("gen_clip: need at least one frame");
  spec.validate(height, width);
  Clip clip(Shape{frames, height, width});
  for (std::size_t f = 0; f < frames; ++f) {
    clip.set_frame(f, render_frame(spec, f, height, width));
    if (pixel_noise > 0.0 && f > 0)
      for (double& v : clip.frame_values(f)) v += pixel_noise * rng.normal();
  }
  return clip;
}

SubjectSpec random_subject(RngStream& rng, std::size_t height, std::size_t width, double speed) {
  SubjectSpec s;
  const int h = static_cast<int>(height);
  const int w = static_cast<int>(width);
  s.kind = rng.below(2) == 0 ? ShapeKind::Square : ShapeKind::Disc;
  const int max_size = std::max(1, std::min(h, w) / 3);
  const int min_size = std::min(3, max_size);
  s.size = min_size + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_size - min_size + 1)));
  s.intensity = 0.4 + 0.6 * rng.uniform();
  s.row = static_cast<int>(rng.below(static_cast<std::uint64_t>(h)));
  s.col = static_cast<int>(rng.below(static_cast<std::uint64_t>(w)));
  s.d_row = speed * (static_cast<double>(rng.below(3)) - 1.0);
  s.d_col = speed * (static_cast<double>(rng.below(3)) - 1.0);
  if (2.0 * speed >= h) s.d_row = 0.0;
  if (2.0 * speed >= w) s.d_col = 0.0;
  s.background = -1.0;
  return s;
}

std::vector<Clip> make_corpus(const CorpusParams& params, std::uint64_t seed) {
  if (params.families == 0 || params.frames == 0) throw std::invalid_argument("make_corpus: empty corpus");
  const std::size_t h = params.height;
  const std::size_t w = params.width;
  std::vector<Clip> corpus;
  corpus.reserve(params.clips());
  for (std::size_t fam = 0; fam < params.families; ++fam) {
    RngStream rng(StreamKey{seed, fam, 0, 0, Purpose::Corpus});
    const SubjectSpec base_spec = random_subject(rng, h, w, params.speed);
    const Clip base = gen_clip(base_spec, params.frames, h, w, rng, params.pixel_noise);
    corpus.push_back(base);
    for (std::size_t v = 0; v < params.cut_variants + params.glitch_variants; ++v) {
      Clip clip = base;
      if (params.frames > 1) {
        const bool glitch = v >= params.cut_variants;
        const std::size_t start = 1 + rng.below(params.frames - 1);
        const SubjectSpec other = random_subject(rng, h, w, params.speed);
        const std::size_t stop = glitch ? std::min(params.frames, start + params.glitch_length) : params.frames;
        for (std::size_t f = start; f < stop; ++f) clip.set_frame(f, render_frame(other, f - start, h, w));
      }
      corpus.push_back(std::move(clip));
    }
    for (std::size_t v = 0; v < params.drift_variants; ++v) {
      Clip clip = base;
      if (params.frames > 1) {
        const std::size_t start = 1 + rng.below(params.frames - 1);
        SubjectSpec drifted = base_spec;
        const double t = static_cast<double>(start);
        drifted.row = wrap(static_cast<long long>(std::floor(base_spec.row + t * base_spec.d_row + 0.5)), static_cast<int>(h));
        drifted.col = wrap(static_cast<long long>(std::floor(base_spec.col + t * base_spec.d_col + 0.5)), static_cast<int>(w));
        while (drifted.d_row == base_spec.d_row && drifted.d_col == base_spec.d_col) {
          const SubjectSpec fresh = random_subject(rng, h, w, params.speed);
          drifted.d_row = fresh.d_row;
          drifted.d_col = fresh.d_col;
        }
        for (std::size_t f = start; f < params.frames; ++f) clip.set_frame(f, render_frame(drifted, f - start, h, w));
      }
      corpus.push_back(std::move(clip));
    }
  }
  return corpus;
}

Clip noise_from_mean(const Clip& noisy, const Clip& mean, std::span<const int> levels,
                     const NoiseSchedule& schedule) {
  Clip eps(noisy.shape());
  for (std::size_t f = 0; f < noisy.frames(); ++f) {
    const auto [alpha, sigma] = schedule.signal_noise(levels[f]);
    if (sigma == 0.0) continue;
    kernels::lincomb(1.0 / sigma, noisy.frame_values(f), -alpha / sigma, mean.frame_values(f), eps.frame_values(f));
  }
  return eps;
}

// ---------------------------------------------------------------- Gaussian

GaussianDenoiser::GaussianDenoiser(Clip mean, double prior_std) : mean_(std::move(mean)), prior_std_(prior_std) {
  if (!(prior_std_ > 0.0)) throw std::invalid_argument("GaussianDenoiser: prior std must be positive");
  if (mean_.empty()) throw std::invalid_argument("GaussianDenoiser: empty mean");
}

std::span<const double> GaussianDenoiser::mean_frame(std::size_t f) const {
  return mean_.frame_values(mean_.frames() == 1 ? 0 : f);
}

Clip GaussianDenoiser::posterior_mean(const Clip& noisy, std::span<const int> levels,
                                      const NoiseSchedule& schedule) const {
  if (noisy.height() != mean_.height() || noisy.width() != mean_.width() ||
      (mean_.frames() != 1 && mean_.frames() != noisy.frames()))
    throw std::invalid_argument("GaussianDenoiser: input shape does not match prior mean");
  if (levels.size() != noisy.frames()) throw std::invalid_argument("GaussianDenoiser: one level per frame required");
  const double s2 = prior_std_ * prior_std_;
  Clip m(noisy.shape());
  for (std::size_t f = 0; f < noisy.frames(); ++f) {
    const auto [alpha, sigma] = schedule.signal_noise(levels[f]);
    const double gain = alpha * s2 / (alpha * alpha * s2 + sigma * sigma);
    const auto mu = mean_frame(f);
    const auto v = noisy.frame_values(f);
    auto out = m.frame_values(f);
    // m = mu + gain * (v - alpha * mu) = (1 - gain * alpha) * mu + gain * v
    kernels::lincomb(1.0 - gain * alpha, mu, gain, v, out);
  }
  return m;
}

Clip GaussianDenoiser::predict_noise(const Clip& noisy, std::span<const int> levels,
                                     const NoiseSchedule& schedule) const {
  return noise_from_mean(noisy, posterior_mean(noisy, levels, schedule), levels, schedule);
}

// ----------------------------------------------------------------- Mixture

MixtureDenoiser::MixtureDenoiser(std::vector<Clip> corpus, bool prune) : prune_(prune) {
  if (corpus.empty()) throw std::invalid_argument("MixtureDenoiser: reference corpus is empty");
  clip_shape_ = corpus.front().shape();
  count_ = corpus.size();
  data_.reserve(count_ * clip_shape_.size());
  for (const Clip& c : corpus) {
    if (c.shape() != clip_shape_) throw std::invalid_argument("MixtureDenoiser: corpus clips differ in shape");
    if (!c.all_finite()) throw std::invalid_argument("MixtureDenoiser: corpus contains non-finite values");
    data_.insert(data_.end(), c.values().begin(), c.values().end());
  }
}

Clip MixtureDenoiser::corpus_clip(std::size_t j) const {
  const auto n = clip_shape_.size();
  return Clip(clip_shape_, std::vector<double>(data_.begin() + static_cast<std::ptrdiff_t>(j * n),
                                               data_.begin() + static_cast<std::ptrdiff_t>((j + 1) * n)));
}

std::span<const double> MixtureDenoiser::corpus_frame(std::size_t j, std::size_t f) const {
  const auto fs = clip_shape_.frame_size();
  return std::span<const double>(data_).subspan(j * clip_shape_.size() + f * fs, fs);
}

void MixtureDenoiser::check_input(const Clip& noisy, std::span<const int> levels) const {
  if (noisy.height() != clip_shape_.height || noisy.width() != clip_shape_.width)
    throw std::invalid_argument("MixtureDenoiser: frame size does not match corpus");
  if (noisy.frames() == 0 || noisy.frames() > clip_shape_.frames)
    throw std::invalid_argument("MixtureDenoiser: input must have 1..corpus-length frames");
  if (levels.size() != noisy.frames()) throw std::invalid_argument("MixtureDenoiser: one level per frame required");
}

std::span<const double> MixtureDenoiser::window(std::size_t j, std::size_t offset, std::size_t frames) const {
  const auto fs = clip_shape_.frame_size();
  return std::span<const double>(data_).subspan(j * clip_shape_.size() + offset * fs, frames * fs);
}

std::vector<double> MixtureDenoiser::posterior_weights(const Clip& noisy, std::span<const int> levels,
                                                       const NoiseSchedule& schedule) const {
  check_input(noisy, levels);
  const std::size_t frames = noisy.frames();
  const std::size_t offsets = clip_shape_.frames - frames + 1;
  const std::size_t windows = count_ * offsets;

  // Frames are accumulated from the most to the least precise one; clean
  // frames (sigma == 0) carry no usable likelihood and are skipped.
  struct Term {
    std::size_t frame;
    double alpha;
    double scale;
    double sigma;
  };
  std::vector<Term> terms;
  for (std::size_t f = 0; f < frames; ++f) {
    const auto [alpha, sigma] = schedule.signal_noise(levels[f]);
    if (sigma > 0.0) terms.push_back({f, alpha, -0.5 / (sigma * sigma), sigma});
  }
  std::stable_sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) { return a.sigma < b.sigma; });

  auto term_value = [&](std::size_t win, const Term& t) {
    const std::size_t j = win / offsets;
    const std::size_t o = win % offsets;
    return t.scale * kernels::scaled_sq_dist(noisy.frame_values(t.frame), corpus_frame(j, o + t.frame), t.alpha);
  };

  std::vector<double> logits(windows, 0.0);
  std::vector<char> alive(windows, 1);
  if (!terms.empty()) {
    for (std::size_t win = 0; win < windows; ++win) logits[win] = term_value(win, terms[0]);
    double reference = -std::numeric_limits<double>::infinity();
    if (prune_) {
      const std::size_t best = static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
      double full = logits[best];
      for (std::size_t i = 1; i < terms.size(); ++i) full += term_value(best, terms[i]);
      reference = full;
    }
    constexpr double kPruneGap = 800.0;
    for (std::size_t win = 0; win < windows; ++win) {
      for (std::size_t i = 1; i < terms.size(); ++i) {
        if (logits[win] < reference - kPruneGap) {
          alive[win] = 0;
          break;
        }
        logits[win] += term_value(win, terms[i]);
      }
      if (logits[win] < reference - kPruneGap) alive[win] = 0;
    }
  }

  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t win = 0; win < windows; ++win)
    if (alive[win]) peak = std::max(peak, logits[win]);
  double total = 0.0;
  for (std::size_t win = 0; win < windows; ++win) {
    logits[win] = alive[win] ? std::exp(logits[win] - peak) : 0.0;
    total += logits[win];
  }
  for (double& l : logits) l /= total;
  return logits;
}

Clip MixtureDenoiser::posterior_mean(const Clip& noisy, std::span<const int> levels,
                                     const NoiseSchedule& schedule) const {
  const auto weights = posterior_weights(noisy, levels, schedule);
  const std::size_t frames = noisy.frames();
  const std::size_t offsets = clip_shape_.frames - frames + 1;
  Clip m(noisy.shape());
  for (std::size_t j = 0; j < count_; ++j)
    for (std::size_t o = 0; o < offsets; ++o) {
      const double w = weights[j * offsets + o];
      if (w == 0.0) continue;
      kernels::axpy(w, window(j, o, frames), m.values());
    }
  return m;
}

Clip MixtureDenoiser::predict_noise(const Clip& noisy, std::span<const int> levels,
                                    const NoiseSchedule& schedule) const {
  return noise_from_mean(noisy, posterior_mean(noisy, levels, schedule), levels, schedule);
}

}  // namespace noisesearch
