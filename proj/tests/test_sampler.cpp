#include <cmath>
#include <stdexcept>
#include <thread>
#include <vector>

#include "doctest.h"
#include "noisesearch/rng.hpp"
#include "noisesearch/sampler.hpp"

using namespace noisesearch;

namespace {

Clip random_clip(Shape shape, std::uint64_t seed) {
  Clip c(shape);
  RngStream rng(StreamKey{seed, 0, 0, 0, Purpose::Test});
  rng.fill_normal(c.values());
  return c;
}

double max_abs_diff(const Clip& a, const Clip& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

}  // namespace

TEST_CASE("forward noise and the DDIM update formula") {
  const auto sched = make_schedule(1000, 8, 1e-4, 0.02);
  const Clip x = random_clip(Shape{3, 4, 4}, 1);
  const Clip eps = random_clip(Shape{3, 4, 4}, 2);
  const std::vector<int> from{sched.tau(8), sched.tau(5), sched.tau(2)};
  const std::vector<int> to{sched.tau(7), sched.tau(5), sched.tau(0)};
  const Clip v = forward_noise(x, eps, from, sched);
  for (std::size_t f = 0; f < 3; ++f) {
    const auto [a, s] = sched.signal_noise(from[f]);
    for (std::size_t i = 0; i < 16; ++i)
      CHECK(v.frame_values(f)[i] == doctest::Approx(a * x.frame_values(f)[i] + s * eps.frame_values(f)[i]).epsilon(1e-14));
  }
  // With the true noise, the update lands exactly on the forward map at the target.
  const Clip moved = ddim_update(v, eps, from, to, sched);
  const Clip expect = forward_noise(x, eps, to, sched);
  CHECK(max_abs_diff(moved, expect) < 1e-12);
  CHECK(moved.frame(1) == v.frame(1));
  CHECK_THROWS_AS(ddim_update(v, eps, from, std::vector<int>{0}, sched), std::invalid_argument);
}

TEST_CASE("DDIM with a point-mass prior keeps the noise direction") {
  // For x ~ delta(mu) the exact eps at v is (v - alpha mu) / sigma, and a DDIM
  // step maps alpha mu + sigma e to alpha' mu + sigma' e.
  const auto sched = make_schedule(1000, 10, 1e-4, 0.02);
  const Clip mu = random_clip(Shape{2, 4, 4}, 3);
  DenoiserFn den(std::make_shared<GaussianDenoiser>(mu, 1e-12));
  const Clip z = random_clip(Shape{2, 4, 4}, 4);
  const Clip out = full_denoise(z, den, sched);
  CHECK(den.calls() == 10);
  const auto [at, st] = sched.signal_noise(sched.top());
  const auto [a0, s0] = sched.signal_noise(sched.tau(0));
  Clip expect(z.shape());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double e = (z.values()[i] - at * mu.values()[i]) / st;
    expect.values()[i] = a0 * mu.values()[i] + s0 * e;
  }
  CHECK(max_abs_diff(out, expect) < 1e-9);

  den.reset_calls();
  const Clip x0 = predict_x0(z, sched.top(), den, sched);
  CHECK(den.calls() == 1);
  CHECK(max_abs_diff(x0, mu) < 1e-9);
}

TEST_CASE("inversion followed by denoising returns the start") {
  const auto sched = make_schedule(1000, 12, 1e-4, 0.02);
  const Clip mu = random_clip(Shape{2, 4, 4}, 5);
  DenoiserFn den(std::make_shared<GaussianDenoiser>(mu, 1e-12));
  const Clip x = random_clip(Shape{2, 4, 4}, 6);
  const Clip top = ddim_invert(x, sched.tau(0), sched.top(), den, sched);
  CHECK(den.calls() == 12);
  const Clip back = full_denoise(top, den, sched);
  CHECK(relative_l2(back, x) < 1e-9);

  den.reset_calls();
  const Clip part = ddim_invert(x, sched.tau(3), sched.tau(7), den, sched);
  CHECK(den.calls() == 4);
  CHECK(part.shape() == x.shape());
  CHECK_THROWS_AS(ddim_invert(x, sched.tau(7), sched.tau(3), den, sched), std::invalid_argument);
  CHECK_THROWS_AS(ddim_invert(x, 1, sched.top(), den, sched), std::invalid_argument);
}

TEST_CASE("zero denoiser rescales by the alpha ratio") {
  const auto sched = make_schedule(1000, 8, 1e-4, 0.02);
  DenoiserFn den(zero_denoiser());
  const Clip v = random_clip(Shape{1, 3, 3}, 7);
  const Clip out = ddim_step(v, sched.tau(6), sched.tau(5), den, sched);
  const double ratio = sched.signal_noise(sched.tau(5)).alpha / sched.signal_noise(sched.tau(6)).alpha;
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(out.values()[i] == doctest::Approx(ratio * v.values()[i]).epsilon(1e-14));
  CHECK(den.calls() == 1);
  CHECK_THROWS_AS(ddim_step(v, sched.tau(5), sched.tau(6), den, sched), std::invalid_argument);
  CHECK_THROWS_AS(ddim_step(v, sched.tau(6) + 1, sched.tau(5), den, sched), std::invalid_argument);
  CHECK(den.calls() == 1);
}

TEST_CASE("per-frame step and clean prediction") {
  const auto sched = make_schedule(1000, 8, 1e-4, 0.02);
  DenoiserFn den(zero_denoiser());
  const Clip v = random_clip(Shape{3, 2, 2}, 8);
  const std::vector<int> from{sched.tau(3), sched.tau(2), sched.tau(1)};
  const std::vector<int> to{sched.tau(2), sched.tau(2), sched.tau(0)};
  const Clip out = ddim_step(v, from, to, den, sched);
  CHECK(den.calls() == 1);
  CHECK(out.frame(1) == v.frame(1));
  CHECK_THROWS_AS(ddim_step(v, to, from, den, sched), std::invalid_argument);

  // Clean prediction agrees bit-for-bit with a step to a noise-free level.
  const auto clean = NoiseSchedule::from_alpha_bar({1.0, 0.8, 0.3}, {0, 1, 2});
  const Clip eps = random_clip(Shape{3, 2, 2}, 9);
  DenoiserFn fixed(std::make_shared<FunctionDenoiser>(
      [eps](const Clip&, std::span<const int>, const NoiseSchedule&) { return eps; }));
  const std::vector<int> lv{2, 1, 2};
  const Clip x0 = predict_x0(v, lv, fixed, clean);
  CHECK(x0 == ddim_update(v, eps, lv, std::vector<int>(3, 0), clean));
  CHECK(fixed.calls() == 1);
  CHECK(predict_x0(v, std::vector<int>(3, 0), fixed, clean) == v);
  CHECK(fixed.calls() == 1);
}

TEST_CASE("call counter is exact under concurrency") {
  const auto sched = make_schedule(1000, 4, 1e-4, 0.02);
  DenoiserFn den(zero_denoiser());
  const Clip v(Shape{1, 2, 2});
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < 8; ++w)
      pool.emplace_back([&] {
        for (int i = 0; i < 250; ++i) den(v, sched.top(), sched);
      });
  }
  CHECK(den.calls() == 2000);
  den.reset_calls();
  CHECK(den.calls() == 0);
  CHECK_THROWS_AS(DenoiserFn(nullptr), std::invalid_argument);
}

TEST_CASE("remapped interval counting") {
  const auto sched = make_schedule(1000, 8, 1e-4, 0.02);
  CHECK(remapped_intervals(sched, sched.tau(0), sched.top()) == 8);
  CHECK(remapped_intervals(sched, sched.tau(2), sched.tau(5)) == 3);
  CHECK_THROWS_AS(remapped_intervals(sched, 3, sched.top()), std::invalid_argument);
}
