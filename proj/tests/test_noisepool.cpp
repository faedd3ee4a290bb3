#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <set>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "noisesearch/noisepool.hpp"

using namespace noisesearch;

namespace {

Clip random_clip(Shape shape, std::uint64_t seed) {
  Clip c(shape);
  RngStream rng(StreamKey{seed, 0, 0, 0, Purpose::Test});
  rng.fill_normal(c.values());
  return c;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Largest remainder written out longhand.
std::array<std::size_t, 4> apportion(std::size_t n, std::array<double, 4> w) {
  const double total = w[0] + w[1] + w[2] + w[3];
  std::array<std::size_t, 4> out{};
  std::array<double, 4> frac{};
  std::size_t used = 0;
  for (int i = 0; i < 4; ++i) {
    const double q = n * w[i] / total;
    out[i] = static_cast<std::size_t>(q);
    frac[i] = q - out[i];
    used += out[i];
  }
  while (used < n) {
    int best = 0;
    for (int i = 1; i < 4; ++i)
      if (frac[i] > frac[best]) best = i;
    out[best] += 1;
    frac[best] = -1.0;
    ++used;
  }
  return out;
}

// Direct-sum DFT low/high split over a dense block with the given dims.
std::vector<double> naive_blend(std::span<const double> low, std::span<const double> high,
                                const std::vector<std::size_t>& dims, double cutoff) {
  const std::size_t n = low.size();
  const std::size_t rank = dims.size();
  auto unflatten = [&](std::size_t flat) {
    std::vector<std::size_t> idx(rank);
    for (std::size_t d = rank; d-- > 0;) {
      idx[d] = flat % dims[d];
      flat /= dims[d];
    }
    return idx;
  };
  auto phase = [&](std::size_t a, std::size_t b) {
    const auto ia = unflatten(a), ib = unflatten(b);
    double p = 0.0;
    for (std::size_t d = 0; d < rank; ++d) p += static_cast<double>(ia[d] * ib[d] % dims[d]) / dims[d];
    return 2.0 * std::numbers::pi * p;
  };
  std::vector<std::complex<double>> bins(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto ik = unflatten(k);
    double r2 = 0.0;
    for (std::size_t d = 0; d < rank; ++d) {
      double f = static_cast<double>(ik[d]) / dims[d];
      if (f >= 0.5) f -= 1.0;
      r2 += 4.0 * f * f;
    }
    const bool is_low = cutoff >= 1.0 || std::sqrt(r2 / rank) < cutoff;
    std::span<const double> src = is_low ? low : high;
    std::complex<double> acc = 0.0;
    for (std::size_t x = 0; x < n; ++x) acc += src[x] * std::polar(1.0, -phase(k, x));
    bins[k] = acc;
  }
  std::vector<double> out(n);
  double ms = 0.0;
  for (std::size_t x = 0; x < n; ++x) {
    std::complex<double> acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += bins[k] * std::polar(1.0, phase(k, x));
    out[x] = acc.real() / n;
    ms += out[x] * out[x];
  }
  ms /= n;
  for (double& v : out) v /= std::sqrt(ms);
  return out;
}

double mean_square(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s / v.size();
}

}  // namespace

TEST_CASE("candidate counts by largest remainder") {
  using W = std::array<double, 4>;
  CHECK(allocate_counts(5, W{0.4, 0.2, 0.2, 0.2}) == std::array<std::size_t, 4>{2, 1, 1, 1});
  CHECK(allocate_counts(5, W{0.25, 0.25, 0.25, 0.25}) == std::array<std::size_t, 4>{2, 1, 1, 1});
  CHECK(allocate_counts(10, W{1, 1, 1, 1}) == std::array<std::size_t, 4>{3, 3, 2, 2});
  CHECK(allocate_counts(3, W{0, 1, 0, 0}) == std::array<std::size_t, 4>{0, 3, 0, 0});
  CHECK(allocate_counts(1, W{1, 1, 1, 1}) == std::array<std::size_t, 4>{1, 0, 0, 0});
  CHECK_THROWS_AS(allocate_counts(4, W{0, 0, 0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(allocate_counts(4, W{1, -1, 0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(allocate_counts(4, W{1, NAN, 0, 0}), std::invalid_argument);

  RngStream rng(StreamKey{1, 0, 0, 0, Purpose::Test});
  for (int trial = 0; trial < 500; ++trial) {
    W w{};
    for (double& x : w) x = rng.below(4) == 0 ? 0.0 : rng.uniform();
    if (w[0] + w[1] + w[2] + w[3] == 0.0) w[2] = 1.0;
    const std::size_t n = 1 + rng.below(20);
    const auto got = allocate_counts(n, w);
    CHECK(got[0] + got[1] + got[2] + got[3] == n);
    CHECK(got == apportion(n, w));
  }
}

TEST_CASE("fft blend endpoints") {
  const Clip low = random_clip(Shape{3, 4, 6}, 2);
  const Clip noise = random_clip(Shape{3, 4, 6}, 3);
  for (FftMode mode : {FftMode::Spatial2D, FftMode::SpatioTemporal3D}) {
    const Clip none = fft_blend(low, noise, 0.0, mode);
    const Clip all = fft_blend(low, noise, 1.0, mode);
    const double sn = std::sqrt(mean_square(noise.values()));
    const double sl = std::sqrt(mean_square(low.values()));
    for (std::size_t i = 0; i < noise.size(); ++i) {
      CHECK(std::abs(none.values()[i] - noise.values()[i] / sn) < 1e-12);
      CHECK(std::abs(all.values()[i] - low.values()[i] / sl) < 1e-12);
    }
  }
  CHECK_THROWS_AS(fft_blend(low, noise, 1.5, FftMode::Spatial2D), std::invalid_argument);
  CHECK_THROWS_AS(fft_blend(low, random_clip(Shape{2, 4, 6}, 1), 0.5, FftMode::Spatial2D), std::invalid_argument);
}

TEST_CASE("fft blend matches a direct DFT") {
  const Clip low = random_clip(Shape{3, 4, 5}, 4);
  const Clip noise = random_clip(Shape{3, 4, 5}, 5);
  for (double r : {0.1, 0.25, 0.5, 0.8}) {
    CAPTURE(r);
    const Clip spatial = fft_blend(low, noise, r, FftMode::Spatial2D);
    // Frames share one global rescale, so compare each frame up to its own scale.
    for (std::size_t f = 0; f < 3; ++f) {
      std::vector<double> got(spatial.frame_values(f).begin(), spatial.frame_values(f).end());
      const double g = std::sqrt(mean_square(got));
      for (double& v : got) v /= g;
      CHECK(max_abs_diff(got, naive_blend(low.frame_values(f), noise.frame_values(f), {4, 5}, r)) < 1e-10);
    }
    CHECK(std::abs(mean_square(spatial.values()) - 1.0) < 1e-12);

    const Clip st = fft_blend(low, noise, r, FftMode::SpatioTemporal3D);
    CHECK(max_abs_diff(st.values(), naive_blend(low.values(), noise.values(), {3, 4, 5}, r)) < 1e-10);
  }
}

TEST_CASE("blended noise keeps the low band of the source") {
  const auto sched = make_schedule(1000, 8, 1e-4, 0.002);
  const Clip prev = random_clip(Shape{4, 8, 8}, 6);
  RngStream a(StreamKey{7, 0, 0, 0, Purpose::FftNoise});
  RngStream b(StreamKey{7, 0, 0, 0, Purpose::FftNoise});
  const Clip x = sample_fft_blend(prev, 0.25, a, FftMode::Spatial2D, sched, sched.top());
  CHECK(x == sample_fft_blend(prev, 0.25, b, FftMode::Spatial2D, sched, sched.top()));
  CHECK(std::abs(mean_square(x.values()) - 1.0) < 1e-12);
  // Replay the two draws and check against the explicit construction.
  RngStream c(StreamKey{7, 0, 0, 0, Purpose::FftNoise});
  const Clip renoise = sample_random(prev.shape(), c);
  const Clip eta = sample_random(prev.shape(), c);
  const Clip renoised = forward_noise(prev, renoise, uniform_levels(4, sched.top()), sched);
  CHECK(x == fft_blend(renoised, eta, 0.25, FftMode::Spatial2D));
  CHECK_THROWS_AS(sample_fft_blend(Clip(), 0.25, c, FftMode::Spatial2D, sched, sched.top()), std::invalid_argument);
}

TEST_CASE("gaussian candidates have unit variance") {
  RngStream rng(StreamKey{8, 0, 0, 0, Purpose::Candidate});
  const Clip x = sample_random(Shape{16, 64, 64}, rng);
  double mean = 0.0;
  for (double v : x.values()) mean += v;
  mean /= x.size();
  const double var = mean_square(x.values()) - mean * mean;
  const double se = std::sqrt(2.0 / x.size());
  CHECK(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(x.size())));
  CHECK(std::abs(var - 1.0) < 4.0 * se);
}

TEST_CASE("neighbourhood resampling") {
  const Clip inv = random_clip(Shape{8, 32, 32}, 9);
  RngStream rng(StreamKey{10, 0, 0, 0, Purpose::Resample});
  CHECK(resample_neighborhood(inv, 0.0, rng) == inv);
  const double delta = 0.5;
  const Clip out = resample_neighborhood(inv, delta, rng);
  const double keep = std::sqrt(1.0 - delta * delta);
  std::vector<double> eta(inv.size());
  for (std::size_t i = 0; i < eta.size(); ++i) eta[i] = (out.values()[i] - keep * inv.values()[i]) / delta;
  const double ms = mean_square(eta);
  CHECK(std::abs(ms - 1.0) < 4.0 * std::sqrt(2.0 / eta.size()));
  // unit-variance inputs stay unit variance
  CHECK(std::abs(mean_square(out.values()) - 1.0) < 0.05);
  CHECK_THROWS_AS(resample_neighborhood(inv, 1.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(resample_neighborhood(inv, -0.1, rng), std::invalid_argument);
}

TEST_CASE("pool context frames") {
  Trajectory traj;
  traj.video = random_clip(Shape{2, 2, 2}, 11);
  const Clip ctx = pool_context_frames(traj, Shape{4, 2, 2});
  CHECK(ctx.frame(0) == traj.video.frame(0));
  CHECK(ctx.frame(1) == traj.video.frame(0));
  CHECK(ctx.frame(2) == traj.video.frame(0));
  CHECK(ctx.frame(3) == traj.video.frame(1));
  traj.video = random_clip(Shape{6, 2, 2}, 12);
  CHECK(pool_context_frames(traj, Shape{3, 2, 2}) == traj.video.slice(3, 3));
  CHECK_THROWS_AS(pool_context_frames(Trajectory{}, Shape{3, 2, 2}), std::invalid_argument);
}

TEST_CASE("pool construction") {
  const auto sched = make_schedule(1000, 8, 1e-4, 0.002);
  CorpusParams cp;
  cp.families = 2;
  DenoiserFn den(std::make_shared<MixtureDenoiser>(make_corpus(cp, 1)));
  Trajectory traj;
  traj.video = make_corpus(cp, 2).front().slice(0, 6);
  PoolContext ctx{&traj, Shape{4, 16, 16}, sched.top(), 42, 3, 1};
  PoolParams params;

  const auto pool = build_pool(5, ctx, params, den, sched);
  CHECK(den.calls() == 8);  // one inversion shared by A3 and A4
  REQUIRE(pool.size() == 5);
  const Strategy expect[] = {Strategy::Random, Strategy::Random, Strategy::FftBlend, Strategy::Inversion,
                             Strategy::InversionResample};
  std::set<std::uint64_t> streams;
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(pool[i].strategy == expect[i]);
    CHECK(pool[i].index == i);
    CHECK(pool[i].slot == 1);
    CHECK(pool[i].noise.shape() == ctx.candidate_shape);
    CHECK(pool[i].noise.all_finite());
    CHECK_FALSE(pool[i].score.has_value());
    streams.insert(pool[i].stream);
  }
  CHECK(streams.size() == 5);
  CHECK(pool[0].noise != pool[1].noise);
  const Clip inverted = sample_inversion(pool_context_frames(traj, ctx.candidate_shape), den, sched);
  CHECK(pool[3].noise == inverted);

  den.reset_calls();
  const auto again = build_pool(5, ctx, params, den, sched);
  for (std::size_t i = 0; i < 5; ++i) CHECK(again[i].noise == pool[i].noise);

  SUBCASE("no inversion without A3/A4") {
    den.reset_calls();
    params.mix = {1, 1, 0, 0};
    CHECK_FALSE(pool_needs_inversion(4, ctx, params));
    const auto p = build_pool(4, ctx, params, den, sched);
    CHECK(den.calls() == 0);
    CHECK(p[0].noise == pool[0].noise);  // streams depend only on position
  }
  SUBCASE("empty trajectory falls back to Gaussian") {
    den.reset_calls();
    Trajectory empty;
    ctx.trajectory = &empty;
    CHECK_FALSE(pool_needs_inversion(5, ctx, params));
    const auto p = build_pool(5, ctx, params, den, sched);
    CHECK(den.calls() == 0);
    for (const auto& c : p) CHECK(c.strategy == Strategy::Random);
  }
  SUBCASE("invalid requests") {
    CHECK_THROWS_AS(build_pool(0, ctx, params, den, sched), std::invalid_argument);
    ctx.trajectory = nullptr;
    CHECK_THROWS_AS(build_pool(3, ctx, params, den, sched), std::invalid_argument);
  }
}

TEST_CASE("strategy tags") {
  for (Strategy s : {Strategy::Random, Strategy::FftBlend, Strategy::Inversion, Strategy::InversionResample})
    CHECK(parse_strategy_tag(strategy_tag(s)) == s);
  CHECK_THROWS_AS(parse_strategy_tag("A5"), std::invalid_argument);
}
