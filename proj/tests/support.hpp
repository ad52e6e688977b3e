#pragma once

// Test-local randomness and reference numerics. Deliberately independent of
// the library code paths they are used to check.

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace testsupport {

// xorshift64* with polar-method normals.
struct Rng {
  std::uint64_t state;

  explicit Rng(std::uint64_t seed) : state(seed ? seed : 0x9e3779b97f4a7c15ull) {}

  std::uint64_t next() {
    state ^= state >> 12;
    state ^= state << 25;
    state ^= state >> 27;
    return state * 0x2545F4914F6CDD1Dull;
  }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform_open() { return (static_cast<double>(next() >> 12) + 0.5) * 0x1.0p-52; }

  double normal() {
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    return u * std::sqrt(-2.0 * std::log(s) / s);
  }

  double exponential() { return -std::log(uniform_open()); }

  double chi_square(int df) {
    double acc = 0.0;
    for (int i = 0; i + 1 < df; i += 2) acc += 2.0 * exponential();
    if (df % 2 == 1) {
      const double g = normal();
      acc += g * g;
    }
    return acc;
  }

  // Noncentral chi-square with the whole shift on the first coordinate.
  double noncentral_chi_square(int df, double lambda) {
    const double z = normal() + std::sqrt(lambda);
    return z * z + (df > 1 ? chi_square(df - 1) : 0.0);
  }
};

// Composite Simpson on [a, b].
inline double simpson(const std::function<double(double)>& f, double a, double b, int intervals) {
  if (intervals % 2 == 1) ++intervals;
  const double h = (b - a) / intervals;
  double acc = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) {
    acc += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  }
  return acc * h / 3.0;
}

// erf by its Maclaurin series; accurate to ~1e-15 for |x| <= 3.
inline double erf_series(double x) {
  double term = x;
  double acc = x;
  for (int n = 1; n < 120; ++n) {
    term *= -x * x / n;
    acc += term / (2.0 * n + 1.0);
    if (std::fabs(term) < 1e-18) break;
  }
  return acc * 2.0 / std::sqrt(M_PI);
}

inline double normal_cdf_series(double x) { return 0.5 * (1.0 + erf_series(x / std::sqrt(2.0))); }

// Two-sample Kolmogorov-Smirnov distance.
inline double two_sample_ks(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double dist = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j]) {
      ++i;
    } else {
      ++j;
    }
    const double fa = static_cast<double>(i) / a.size();
    const double fb = static_cast<double>(j) / b.size();
    dist = std::max(dist, std::fabs(fa - fb));
  }
  return dist;
}

inline double mean(const std::vector<double>& values) {
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc / static_cast<double>(values.size());
}

inline double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace testsupport
