#pragma once

// Seeded random streams. Every consumer derives its own stream from the
// experiment seed and a stream name (plus an index for per-trial or
// per-resample streams), so results do not depend on scheduling.

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace coact::rng {

std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0);

class Stream {
public:
  explicit Stream(std::uint64_t seed) : engine_(seed) {}
  Stream(std::uint64_t seed, std::string_view name, std::uint64_t index = 0)
      : engine_(derive_seed(seed, name, index)) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

  /// Index drawn with probability proportional to weights[i].
  std::size_t categorical(std::span<const double> weights);

  /// Dirichlet(1, ..., 1) draw written into `out`.
  void simplex(std::span<double> out);

  std::mt19937_64& engine() { return engine_; }

private:
  std::mt19937_64 engine_;
};

}  // namespace coact::rng
