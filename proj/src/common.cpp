#include "roelab/common.hpp"

#include <cmath>
#include <numeric>

namespace roelab {

double SplitMix64::gauss() {
  // (0,1] for the log argument
  double u1 = double((next() >> 11) + 1) * 0x1.0p-53;
  double u2 = double(next() >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

void Rational::reduce() {
  if (den < 0) {
    num = -num;
    den = -den;
  }
  std::int64_t g = std::gcd(num < 0 ? -num : num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
}

bool operator==(const Rational& a, const Rational& b) {
  return a.num * b.den == b.num * a.den;
}

bool operator<(const Rational& a, const Rational& b) {
  return a.num * b.den < b.num * a.den;
}

}  // namespace roelab
