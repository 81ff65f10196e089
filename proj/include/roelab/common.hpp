#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace roelab {

// Bad inputs or configs. The CLI maps this to exit code 2.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Broken internal contract. The CLI maps this to exit code 3; messages name
// the violated invariant.
struct InvariantViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// splitmix64. Every randomized routine derives its own stream from
// (root seed, stream id), so thread scheduling cannot perturb results.
struct SplitMix64 {
  std::uint64_t state = 0;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform() { return double(next() >> 11) * 0x1.0p-53; }

  // standard normal via Box-Muller; implemented here (not <random>) so the
  // stream is identical across standard libraries
  double gauss();
};

inline std::uint64_t split_stream(std::uint64_t root, std::uint64_t stream) {
  SplitMix64 s(root + 0x9e3779b97f4a7c15ULL * (stream + 1));
  return s.next();
}

// Exact fraction for Cheeger constants; always kept reduced with den > 0.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  double value() const { return double(num) / double(den); }
  void reduce();
};

bool operator==(const Rational& a, const Rational& b);
bool operator<(const Rational& a, const Rational& b);

}  // namespace roelab
