#pragma once

// Jacobi elliptic functions and complete integrals.
//
// K and E come from the arithmetic-geometric mean, sn/cn/dn from the
// descending Landen transformation, and the Jacobi Zeta function is
// represented by its nome q-series. Everything here is a pure function of
// value inputs.

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "periwave/error.hpp"

namespace periwave::elliptic {

/// Elliptic modulus k in [0, 1).
class EllipticModulus {
 public:
  explicit EllipticModulus(double k) : k_(k) {
    if (!(k >= 0.0 && k < 1.0)) {
      throw DomainError("elliptic modulus must lie in [0, 1), got " +
                        std::to_string(k));
    }
  }

  double k() const noexcept { return k_; }
  /// k' = sqrt(1 - k^2), evaluated without cancellation.
  double complement() const noexcept { return std::sqrt((1.0 - k_) * (1.0 + k_)); }

 private:
  double k_;
};

namespace detail {

struct AgmResult {
  double a;
  /// sum_{n>=0} 2^{n-1} c_n^2
  double weighted_c2;
};

inline AgmResult agm(double k, double kp) {
  double a = 1.0;
  double b = kp;
  double c = k;
  double pow2 = 0.5;
  double sum = pow2 * c * c;
  for (int it = 0; it < 64; ++it) {
    // c converges quadratically; below one ulp it only feeds roundoff into the sum.
    if (std::abs(c) <= std::numeric_limits<double>::epsilon() * a) break;
    const double an = 0.5 * (a + b);
    const double bn = std::sqrt(a * b);
    c = 0.5 * (a - b);
    a = an;
    b = bn;
    pow2 *= 2.0;
    sum += pow2 * c * c;
  }
  return {a, sum};
}

}  // namespace detail

/// Complete elliptic integral of the first kind, K(k) = pi / (2 AGM(1, k')).
inline double complete_K(const EllipticModulus& m) {
  const auto r = detail::agm(m.k(), m.complement());
  return std::numbers::pi / (2.0 * r.a);
}

inline double complete_K(double k) { return complete_K(EllipticModulus(k)); }

/// Complete elliptic integral of the second kind on [0, 1]; E(1) = 1.
inline double complete_E(double k) {
  if (!(k >= 0.0 && k <= 1.0)) {
    throw DomainError("complete_E requires k in [0, 1], got " + std::to_string(k));
  }
  if (k == 1.0) return 1.0;
  const EllipticModulus m(k);
  const auto r = detail::agm(m.k(), m.complement());
  const double K = std::numbers::pi / (2.0 * r.a);
  return K * (1.0 - r.weighted_c2);
}

inline double complete_E(const EllipticModulus& m) { return complete_E(m.k()); }

struct SnCnDn {
  double sn;
  double cn;
  double dn;
};

/// sn, cn, dn by descending Landen transformation.
inline SnCnDn jacobi_sn_cn_dn(double u, const EllipticModulus& m) {
  if (!std::isfinite(u)) throw DomainError("jacobi_sn_cn_dn requires finite u");
  const double k = m.k();
  const double kp = m.complement();
  if (k == 0.0) return {std::sin(u), std::cos(u), 1.0};

  // sn and cn are 4K-periodic; reducing keeps 2^N a_N u small.
  const double K = complete_K(m);
  const double period = 4.0 * K;
  u = std::remainder(u, period);

  constexpr int kMaxLevels = 32;
  double a[kMaxLevels + 1];
  double c[kMaxLevels + 1];
  a[0] = 1.0;
  double b = kp;
  c[0] = k;
  int n = 0;
  while (std::abs(c[n]) > 1e-16 * a[n] && n < kMaxLevels) {
    a[n + 1] = 0.5 * (a[n] + b);
    c[n + 1] = 0.5 * (a[n] - b);
    b = std::sqrt(a[n] * b);
    ++n;
  }
  double phi = std::ldexp(a[n] * u, n);
  for (int j = n; j >= 1; --j) {
    phi = 0.5 * (phi + std::asin(c[j] / a[j] * std::sin(phi)));
  }
  const double sn = std::sin(phi);
  const double cn = std::cos(phi);
  // dn^2 = k'^2 + k^2 cn^2: both terms non-negative, no cancellation near u = K.
  const double dn = std::sqrt(kp * kp + k * k * cn * cn);
  return {sn, cn, dn};
}

inline SnCnDn jacobi_sn_cn_dn(double u, double k) {
  return jacobi_sn_cn_dn(u, EllipticModulus(k));
}

/// Nome q = exp(-pi K(k') / K(k)).
inline double nome(const EllipticModulus& m) {
  const double K = complete_K(m);
  const double Kp = complete_K(EllipticModulus(m.complement()));
  return std::exp(-std::numbers::pi * Kp / K);
}

/// Sine-series coefficients of the Jacobi Zeta function:
///   Z(u; k) = sum_{n=1}^{n_max} b_n sin(n pi u / K),
///   b_n = (2 pi / K) q^n / (1 - q^{2n}).
inline std::vector<double> zeta_fourier_coefficients(const EllipticModulus& m, int n_max) {
  if (n_max < 1) throw DomainError("zeta_fourier_coefficients requires n_max >= 1");
  if (m.k() == 0.0) throw DomainError("zeta_fourier_coefficients requires k > 0");
  const double K = complete_K(m);
  const double q = nome(m);
  std::vector<double> b(static_cast<std::size_t>(n_max));
  double qn = 1.0;
  for (int n = 1; n <= n_max; ++n) {
    qn *= q;
    b[static_cast<std::size_t>(n - 1)] = 2.0 * std::numbers::pi / K * qn / (1.0 - qn * qn);
  }
  return b;
}

/// Evaluates a Zeta sine series at real argument u.
inline double zeta_from_coefficients(const std::vector<double>& coeffs, double K, double u) {
  double z = 0.0;
  for (std::size_t n = 0; n < coeffs.size(); ++n) {
    z += coeffs[n] * std::sin(static_cast<double>(n + 1) * std::numbers::pi * u / K);
  }
  return z;
}

}  // namespace periwave::elliptic
