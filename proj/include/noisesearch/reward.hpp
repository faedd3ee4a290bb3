#pragma once

// Frame features and the consistency rewards used to rank candidate noises.
// Features are an 8 x 8 grid of block means with the global mean removed,
// scaled to unit length; rewards are means of cosine similarities.

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "noisesearch/tensor.hpp"

namespace noisesearch {

inline constexpr std::size_t kFeatureGrid = 8;
inline constexpr std::size_t kFeatureDim = kFeatureGrid * kFeatureGrid;

struct FeatureVec {
  std::vector<double> values;
  // Constant frames have no direction; they map to the first basis vector.
  bool degenerate = false;
};

FeatureVec extract_features(std::span<const double> frame, std::size_t height, std::size_t width);
inline FeatureVec extract_features(const Frame& frame) {
  return extract_features(frame.values(), frame.height(), frame.width());
}

double cosine(const FeatureVec& a, const FeatureVec& b);

std::vector<FeatureVec> clip_features(const Clip& clip);

enum class RewardKind { Full, Local, Anchor };
std::string_view reward_name(RewardKind kind);
RewardKind parse_reward(std::string_view name);

// (1 / 2M) * sum_i (<d_a, d_i> + <d_i, d_{i-1}>), d_0 = d_a.
double reward_full(const Frame& anchor, const Clip& predicted);
// Mean adjacent-frame cosine; needs at least two frames.
double reward_local(const Clip& predicted);
// Cosine between the anchor and the last frame.
double reward_anchor(const Frame& anchor, const Clip& predicted);

double reward_full(const FeatureVec& anchor, std::span<const FeatureVec> frames);
double reward_local(std::span<const FeatureVec> frames);
double reward_anchor(const FeatureVec& anchor, std::span<const FeatureVec> frames);

// Dispatch by kind. Without an anchor every kind falls back to the local
// reward; a single-frame clip without an anchor scores 0.
double score_clip(RewardKind kind, const std::optional<Frame>& anchor, const Clip& predicted);

}  // namespace noisesearch
