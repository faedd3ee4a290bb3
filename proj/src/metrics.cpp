#include "noisesearch/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "noisesearch/reward.hpp"

namespace noisesearch {

double subject_consistency(const Clip& video) {
  if (video.frames() < 2) throw std::invalid_argument("subject_consistency: need at least two frames");
  const auto d = clip_features(video);
  double acc = 0.0;
  for (std::size_t i = 1; i < d.size(); ++i) acc += 0.5 * (cosine(d.front(), d[i]) + cosine(d[i - 1], d[i]));
  const double mean = acc / static_cast<double>(d.size() - 1);
  return (mean + 1.0) / 2.0;
}

double temporal_flicker(const Clip& video) {
  if (video.frames() < 2) throw std::invalid_argument("temporal_flicker: need at least two frames");
  double acc = 0.0;
  for (std::size_t f = 1; f < video.frames(); ++f) {
    const auto a = video.frame_values(f - 1);
    const auto b = video.frame_values(f);
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(b[i] - a[i]);
  }
  const double mean = acc / static_cast<double>((video.frames() - 1) * video.frame_size());
  return std::clamp(1.0 - mean, 0.0, 1.0);
}

}  // namespace noisesearch
