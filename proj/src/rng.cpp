#include "coact/rng.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "coact/errors.hpp"

namespace coact::rng {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index) {
  return splitmix64(splitmix64(seed ^ fnv1a(stream)) + splitmix64(index + 1));
}

std::uint64_t Stream::below(std::uint64_t n) {
  if (n == 0) throw UsageError("Stream::below(0)");
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t r;
  do r = engine_();
  while (r >= limit);
  return r % n;
}

std::size_t Stream::categorical(std::span<const double> weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0)) throw UsageError("categorical draw from zero total weight");
  double x = uniform() * total;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0) continue;
    last_positive = i;
    if (x < weights[i]) return i;
    x -= weights[i];
  }
  return last_positive;
}

void Stream::simplex(std::span<double> out) {
  double total = 0;
  for (auto& v : out) {
    v = -std::log1p(-uniform());
    total += v;
  }
  if (!(total > 0)) {
    for (auto& v : out) v = 1.0 / static_cast<double>(out.size());
    return;
  }
  for (auto& v : out) v /= total;
}

}  // namespace coact::rng
