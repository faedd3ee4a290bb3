#include "noisesearch/reward.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "noisesearch/kernels.hpp"

namespace noisesearch {

FeatureVec extract_features(std::span<const double> frame, std::size_t height, std::size_t width) {
  if (height < kFeatureGrid || width < kFeatureGrid)
    throw std::invalid_argument("extract_features: frame must be at least 8 x 8");
  if (frame.size() != height * width) throw std::invalid_argument("extract_features: size mismatch");
  FeatureVec out;
  out.values.assign(kFeatureDim, 0.0);
  for (std::size_t by = 0; by < kFeatureGrid; ++by) {
    const std::size_t r0 = by * height / kFeatureGrid;
    const std::size_t r1 = (by + 1) * height / kFeatureGrid;
    for (std::size_t bx = 0; bx < kFeatureGrid; ++bx) {
      const std::size_t c0 = bx * width / kFeatureGrid;
      const std::size_t c1 = (bx + 1) * width / kFeatureGrid;
      double acc = 0.0;
      for (std::size_t r = r0; r < r1; ++r)
        for (std::size_t c = c0; c < c1; ++c) acc += frame[r * width + c];
      out.values[by * kFeatureGrid + bx] = acc / static_cast<double>((r1 - r0) * (c1 - c0));
    }
  }
  double mean = 0.0;
  for (double v : out.values) mean += v;
  mean /= static_cast<double>(kFeatureDim);
  double norm2 = 0.0;
  for (double& v : out.values) {
    v -= mean;
    norm2 += v * v;
  }
  const double norm = std::sqrt(norm2);
  if (!(norm > 1e-12) || !std::isfinite(norm)) {
    out.values.assign(kFeatureDim, 0.0);
    out.values[0] = 1.0;
    out.degenerate = true;
    return out;
  }
  for (double& v : out.values) v /= norm;
  return out;
}

double cosine(const FeatureVec& a, const FeatureVec& b) {
  if (a.values.size() != b.values.size()) throw std::invalid_argument("cosine: dimension mismatch");
  // a rounded unit vector dotted with itself can land an ulp off 1
  if (a.values == b.values) return 1.0;
  return std::clamp(kernels::dot(a.values, b.values), -1.0, 1.0);
}

std::vector<FeatureVec> clip_features(const Clip& clip) {
  std::vector<FeatureVec> out;
  out.reserve(clip.frames());
  for (std::size_t f = 0; f < clip.frames(); ++f)
    out.push_back(extract_features(clip.frame_values(f), clip.height(), clip.width()));
  return out;
}

std::string_view reward_name(RewardKind kind) {
  switch (kind) {
    case RewardKind::Full: return "full";
    case RewardKind::Local: return "local";
    case RewardKind::Anchor: return "anchor";
  }
  return "?";
}

RewardKind parse_reward(std::string_view name) {
  if (name == "full") return RewardKind::Full;
  if (name == "local") return RewardKind::Local;
  if (name == "anchor") return RewardKind::Anchor;
  throw std::invalid_argument("unknown reward variant: " + std::string(name));
}

double reward_full(const FeatureVec& anchor, std::span<const FeatureVec> frames) {
  if (frames.empty()) throw std::invalid_argument("reward_full: empty clip");
  double acc = 0.0;
  const FeatureVec* prev = &anchor;
  for (const FeatureVec& d : frames) {
    acc += cosine(anchor, d) + cosine(d, *prev);
    prev = &d;
  }
  return acc / (2.0 * static_cast<double>(frames.size()));
}

double reward_local(std::span<const FeatureVec> frames) {
  if (frames.size() < 2) throw std::invalid_argument("reward_local: need at least two frames");
  double acc = 0.0;
  for (std::size_t i = 1; i < frames.size(); ++i) acc += cosine(frames[i], frames[i - 1]);
  return acc / static_cast<double>(frames.size() - 1);
}

double reward_anchor(const FeatureVec& anchor, std::span<const FeatureVec> frames) {
  if (frames.empty()) throw std::invalid_argument("reward_anchor: empty clip");
  return cosine(anchor, frames.back());
}

double reward_full(const Frame& anchor, const Clip& predicted) {
  return reward_full(extract_features(anchor), clip_features(predicted));
}

double reward_local(const Clip& predicted) { return reward_local(clip_features(predicted)); }

double reward_anchor(const Frame& anchor, const Clip& predicted) {
  if (predicted.frames() == 0) throw std::invalid_argument("reward_anchor: empty clip");
  return reward_anchor(extract_features(anchor), clip_features(predicted));
}

double score_clip(RewardKind kind, const std::optional<Frame>& anchor, const Clip& predicted) {
  if (predicted.frames() == 0) throw std::invalid_argument("score_clip: empty clip");
  if (!anchor) return predicted.frames() >= 2 ? reward_local(predicted) : 0.0;
  switch (kind) {
    case RewardKind::Full: return reward_full(*anchor, predicted);
    case RewardKind::Local: return predicted.frames() >= 2 ? reward_local(predicted) : reward_anchor(*anchor, predicted);
    case RewardKind::Anchor: return reward_anchor(*anchor, predicted);
  }
  return 0.0;
}

}  // namespace noisesearch
