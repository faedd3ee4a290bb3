#pragma once

// Counter-keyed random streams. A stream is identified by a key derived from
// (master seed, step, slot, candidate, purpose); the same key always yields
// the same sequence regardless of which thread draws it or in which order
// streams are opened.

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace noisesearch {

enum class Purpose : std::uint64_t {
  Candidate = 1,
  FftNoise = 2,
  FftRenoise = 3,
  Resample = 4,
  Warmup = 5,
  Corpus = 6,
  PixelNoise = 7,
  Test = 99,
};

std::uint64_t splitmix64(std::uint64_t x);

// Order-sensitive hash of a sequence of 64-bit words.
std::uint64_t mix_key(std::initializer_list<std::uint64_t> words);

struct StreamKey {
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
  std::uint64_t slot = 0;
  std::uint64_t candidate = 0;
  Purpose purpose = Purpose::Candidate;

  std::uint64_t hash() const;
  StreamKey with(Purpose p) const {
    StreamKey k = *this;
    k.purpose = p;
    return k;
  }
};

class RngStream {
 public:
  explicit RngStream(const StreamKey& key) : engine_(key.hash()) {}
  explicit RngStream(std::uint64_t raw_seed) : engine_(splitmix64(raw_seed)) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_); }

  void fill_normal(std::span<double> out) {
    for (double& v : out) v = normal_(engine_);
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace noisesearch
