#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "noisesearch/metrics.hpp"
#include "noisesearch/reward.hpp"
#include "noisesearch/rng.hpp"
#include "noisesearch/toyworld.hpp"

using namespace noisesearch;

namespace {

Clip random_clip(Shape shape, std::uint64_t seed) {
  Clip c(shape);
  RngStream rng(StreamKey{seed, 0, 0, 0, Purpose::Test});
  rng.fill_normal(c.values());
  return c;
}

Frame negated(const Frame& f) {
  Frame out = f;
  for (double& v : out.values()) v = -v;
  return out;
}

// Block pooling written per pixel: each pixel adds to the block its row and
// column fall in.
std::vector<long double> pooled(std::span<const double> frame, std::size_t h, std::size_t w) {
  std::vector<long double> sum(64, 0.0L), count(64, 0.0L);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) {
      std::size_t br = 0, bc = 0;
      while ((br + 1) * h / 8 <= r) ++br;
      while ((bc + 1) * w / 8 <= c) ++bc;
      sum[br * 8 + bc] += frame[r * w + c];
      count[br * 8 + bc] += 1.0L;
    }
  long double mean = 0.0L;
  for (std::size_t k = 0; k < 64; ++k) mean += (sum[k] /= count[k]);
  mean /= 64.0L;
  long double n2 = 0.0L;
  for (auto& v : sum) {
    v -= mean;
    n2 += v * v;
  }
  for (auto& v : sum) v /= std::sqrt(n2);
  return sum;
}

double oracle_cos(std::span<const double> a, std::span<const double> b, std::size_t h, std::size_t w) {
  const auto pa = pooled(a, h, w), pb = pooled(b, h, w);
  long double d = 0.0L;
  for (std::size_t k = 0; k < 64; ++k) d += pa[k] * pb[k];
  return static_cast<double>(d);
}

}  // namespace

TEST_CASE("feature extraction") {
  const Clip c = random_clip(Shape{2, 16, 16}, 1);
  const FeatureVec a = extract_features(c.frame(0));
  REQUIRE(a.values.size() == kFeatureDim);
  double n2 = 0.0, sum = 0.0;
  for (double v : a.values) {
    n2 += v * v;
    sum += v;
  }
  CHECK(std::abs(n2 - 1.0) < 1e-9);
  CHECK(std::abs(sum) < 1e-12);
  CHECK_FALSE(a.degenerate);
  CHECK(cosine(a, extract_features(c.frame(0))) == 1.0);
  CHECK(cosine(a, extract_features(negated(c.frame(0)))) == doctest::Approx(-1.0).epsilon(1e-15));

  const FeatureVec flat = extract_features(Frame(16, 16, 0.3));
  CHECK(flat.degenerate);
  CHECK(flat.values[0] == 1.0);
  CHECK_THROWS_AS(extract_features(Frame(7, 16)), std::invalid_argument);
}

TEST_CASE("features match a direct pooling oracle") {
  SubjectSpec s;
  s.size = 4;
  s.row = 3;
  s.col = 5;
  const Frame f0 = render_frame(s, 0, 16, 16);
  s.col += 2;  // one block to the right
  const Frame f1 = render_frame(s, 0, 16, 16);
  CHECK(cosine(extract_features(f0), extract_features(f1)) ==
        doctest::Approx(oracle_cos(f0.values(), f1.values(), 16, 16)).epsilon(1e-12));
  // Uneven blocks (13 x 10 frame).
  const Clip c = random_clip(Shape{2, 13, 10}, 2);
  CHECK(std::abs(cosine(extract_features(c.frame_values(0), 13, 10), extract_features(c.frame_values(1), 13, 10)) -
                 oracle_cos(c.frame_values(0), c.frame_values(1), 13, 10)) < 1e-12);
}

TEST_CASE("full reward") {
  const Clip c = random_clip(Shape{4, 16, 16}, 3);
  const Frame anchor = c.frame(0);
  Clip copies(Shape{3, 16, 16});
  for (std::size_t f = 0; f < 3; ++f) copies.set_frame(f, anchor);
  CHECK(reward_full(anchor, copies) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(reward_full(anchor, c.slice(1, 1)) ==
        doctest::Approx(cosine(extract_features(anchor), extract_features(c.frame(1)))).epsilon(1e-15));

  const Clip pred = c.slice(1, 3);
  double expect = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto prev = i == 0 ? anchor.values() : pred.frame_values(i - 1);
    expect += oracle_cos(anchor.values(), pred.frame_values(i), 16, 16) + oracle_cos(pred.frame_values(i), prev, 16, 16);
  }
  expect /= 6.0;
  CHECK(std::abs(reward_full(anchor, pred) - expect) < 1e-12);
  CHECK_THROWS_AS(reward_full(anchor, Clip(Shape{0, 16, 16})), std::invalid_argument);

  // Positive affine rescaling of every frame leaves the reward unchanged.
  Frame a2 = anchor;
  for (double& v : a2.values()) v = 3.0 * v + 0.7;
  Clip p2 = pred;
  for (double& v : p2.values()) v = 3.0 * v + 0.7;
  CHECK(std::abs(reward_full(a2, p2) - reward_full(anchor, pred)) < 1e-12);
}

TEST_CASE("local and anchor rewards") {
  const Clip c = random_clip(Shape{3, 16, 16}, 4);
  Clip constant(Shape{3, 16, 16});
  for (std::size_t f = 0; f < 3; ++f) constant.set_frame(f, c.frame(0));
  CHECK(reward_local(constant) == doctest::Approx(1.0).epsilon(1e-15));
  Clip alt(Shape{4, 16, 16});
  for (std::size_t f = 0; f < 4; ++f) alt.set_frame(f, f % 2 == 0 ? c.frame(0) : negated(c.frame(0)));
  CHECK(reward_local(alt) == doctest::Approx(-1.0).epsilon(1e-15));
  const double expect =
      (oracle_cos(c.frame_values(0), c.frame_values(1), 16, 16) + oracle_cos(c.frame_values(1), c.frame_values(2), 16, 16)) / 2.0;
  CHECK(std::abs(reward_local(c) - expect) < 1e-12);
  CHECK_THROWS_AS(reward_local(c.slice(0, 1)), std::invalid_argument);

  CHECK(reward_anchor(c.frame(2), c) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(reward_anchor(negated(c.frame(2)), c) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(std::abs(reward_anchor(c.frame(0), c) - oracle_cos(c.frame_values(0), c.frame_values(2), 16, 16)) < 1e-12);
  CHECK_THROWS_AS(reward_anchor(c.frame(0), Clip(Shape{0, 16, 16})), std::invalid_argument);
}

TEST_CASE("reward dispatch") {
  const Clip c = random_clip(Shape{3, 16, 16}, 5);
  const std::optional<Frame> anchor = c.frame(0);
  CHECK(score_clip(RewardKind::Full, anchor, c) == reward_full(*anchor, c));
  CHECK(score_clip(RewardKind::Local, anchor, c) == reward_local(c));
  CHECK(score_clip(RewardKind::Anchor, anchor, c) == reward_anchor(*anchor, c));
  CHECK(score_clip(RewardKind::Full, std::nullopt, c) == reward_local(c));
  CHECK(score_clip(RewardKind::Anchor, std::nullopt, c.slice(0, 1)) == 0.0);
  CHECK(score_clip(RewardKind::Local, anchor, c.slice(1, 1)) == reward_anchor(*anchor, c.slice(1, 1)));
  for (RewardKind k : {RewardKind::Full, RewardKind::Local, RewardKind::Anchor}) CHECK(parse_reward(reward_name(k)) == k);
  CHECK_THROWS_AS(parse_reward("dino"), std::invalid_argument);
}

TEST_CASE("rewards stay in bounds") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Clip c = random_clip(Shape{4, 16, 16}, 100 + s);
    for (double r : {reward_full(c.frame(0), c), reward_local(c), reward_anchor(c.frame(1), c)}) {
      CHECK(r >= -1.0);
      CHECK(r <= 1.0);
    }
  }
}

TEST_CASE("subject consistency analog") {
  const Clip c = random_clip(Shape{4, 16, 16}, 6);
  Clip constant(Shape{5, 16, 16});
  for (std::size_t f = 0; f < 5; ++f) constant.set_frame(f, c.frame(0));
  CHECK(subject_consistency(constant) == doctest::Approx(1.0).epsilon(1e-15));

  Clip alt(Shape{2, 16, 16});
  alt.set_frame(0, c.frame(0));
  alt.set_frame(1, negated(c.frame(0)));
  CHECK(std::abs(subject_consistency(alt)) < 1e-15);
  // Longer alternations score above zero: frame 3 matches frame 1.
  alt.append_frame(c.frame(0));
  CHECK(subject_consistency(alt) == doctest::Approx(0.25).epsilon(1e-14));

  double acc = 0.0;
  for (std::size_t i = 1; i < 4; ++i)
    acc += (oracle_cos(c.frame_values(0), c.frame_values(i), 16, 16) + oracle_cos(c.frame_values(i - 1), c.frame_values(i), 16, 16)) / 2.0;
  CHECK(std::abs(subject_consistency(c) - (acc / 3.0 + 1.0) / 2.0) < 1e-12);
  CHECK_THROWS_AS(subject_consistency(c.slice(0, 1)), std::invalid_argument);
}

TEST_CASE("temporal flicker analog") {
  Clip constant(Shape{3, 4, 4}, 0.2);
  CHECK(temporal_flicker(constant) == 1.0);
  Clip alt(Shape{4, 4, 4});
  for (std::size_t f = 0; f < 4; ++f)
    for (double& v : alt.frame_values(f)) v = f % 2 == 0 ? 1.0 : -1.0;
  CHECK(temporal_flicker(alt) == 0.0);
  // Ramp: frame f pixel p holds 0.01 * f * (p + 1), so |diff| = 0.01 * (p + 1);
  // mean over 16 pixels is 0.01 * 8.5.
  Clip ramp(Shape{5, 4, 4});
  for (std::size_t f = 0; f < 5; ++f)
    for (std::size_t p = 0; p < 16; ++p) ramp.frame_values(f)[p] = 0.01 * static_cast<double>(f) * static_cast<double>(p + 1);
  CHECK(temporal_flicker(ramp) == doctest::Approx(1.0 - 0.085).epsilon(1e-14));
  CHECK_THROWS_AS(temporal_flicker(ramp.slice(0, 1)), std::invalid_argument);
}
