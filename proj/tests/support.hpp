#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "periwave/spectral.hpp"

namespace testsupport {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Smooth real random field: Fourier modes up to `modes` with 1/(1+k^2) decay.
inline periwave::Field random_field(const periwave::PeriodicGrid& g, unsigned seed, int modes = 10,
                                    bool zero_mean = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  const double L = g.length();
  std::vector<double> a(modes + 1), b(modes + 1);
  for (int k = 0; k <= modes; ++k) {
    a[k] = n(rng) / (1.0 + k * k);
    b[k] = n(rng) / (1.0 + k * k);
  }
  if (zero_mean) a[0] = 0.0;
  return periwave::Field::from_function(g, [&](double x) {
    double v = a[0];
    for (int k = 1; k <= modes; ++k) v += a[k] * std::cos(two_pi * k * x / L) + b[k] * std::sin(two_pi * k * x / L);
    return v;
  });
}

}  // namespace testsupport
