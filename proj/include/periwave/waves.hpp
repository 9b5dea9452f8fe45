#pragma once

// Traveling waves of u_t + (f(u))_x - (Mu)_x = 0 and of the regularized
// equation u_t + u_x + (f(u))_x + (Mu)_t = 0.
//
// A profile phi with speed omega solves
//   standard:     M phi + omega phi - f(phi) + A = 0
//   regularized:  omega M phi + (omega - 1) phi - f(phi) + A = 0
// Both are written as a_M M phi + a_0 phi - f(phi) + A = 0.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "periwave/elliptic.hpp"
#include "periwave/error.hpp"
#include "periwave/spectral.hpp"

namespace periwave {

/// f(u) = c u^{p+1} / (p+1) with primitive W(u) = c u^{p+2} / ((p+1)(p+2)).
class Nonlinearity {
 public:
  static Nonlinearity power(int p, double c = 1.0) {
    if (p < 1) throw DomainError("power nonlinearity needs p >= 1");
    if (c == 0.0) throw DomainError("power nonlinearity needs c != 0");
    return Nonlinearity(p, c, "power");
  }

  /// f(u) = u^2
  static Nonlinearity quadratic_ilw() { return Nonlinearity(1, 2.0, "quadratic_ilw"); }

  int p() const noexcept { return p_; }
  double c() const noexcept { return c_; }
  const std::string& name() const noexcept { return name_; }
  /// Polynomial degree of f.
  int degree() const noexcept { return p_ + 1; }

  /// f = v^2 / 2
  bool is_kdv() const noexcept { return p_ == 1 && c_ == 1.0; }

  double f(double u) const { return c_ * std::pow(u, p_ + 1) / (p_ + 1); }
  double df(double u) const { return c_ * std::pow(u, p_); }
  double d2f(double u) const { return c_ * p_ * std::pow(u, p_ - 1); }
  double d3f(double u) const {
    return p_ >= 2 ? c_ * p_ * (p_ - 1) * std::pow(u, p_ - 2) : 0.0;
  }
  double W(double u) const { return c_ * std::pow(u, p_ + 2) / ((p_ + 1.0) * (p_ + 2.0)); }

  Field f(const Field& u) const { return u.map([this](double v) { return f(v); }); }
  Field df(const Field& u) const { return u.map([this](double v) { return df(v); }); }
  Field W(const Field& u) const { return u.map([this](double v) { return W(v); }); }

 private:
  Nonlinearity(int p, double c, std::string name) : p_(p), c_(c), name_(std::move(name)) {}

  int p_;
  double c_;
  std::string name_;
};

enum class Variant { standard, regularized };

inline std::string to_string(Variant v) {
  return v == Variant::standard ? "standard" : "regularized";
}

/// How the integration constant A is fixed.
struct Constraint {
  enum class Mode { fixed_A, zero_mean, fixed_mean };

  Mode mode = Mode::zero_mean;
  /// A for fixed_A, int phi dx for fixed_mean.
  double value = 0.0;

  static Constraint fixed_A(double a) { return {Mode::fixed_A, a}; }
  static Constraint zero_mean() { return {Mode::zero_mean, 0.0}; }
  static Constraint fixed_mean(double integral) { return {Mode::fixed_mean, integral}; }

  /// Prescribed int phi dx; zero for zero_mean.
  double mean_target() const noexcept { return mode == Mode::zero_mean ? 0.0 : value; }
};

inline std::string to_string(Constraint::Mode m) {
  switch (m) {
    case Constraint::Mode::fixed_A: return "fixed_A";
    case Constraint::Mode::zero_mean: return "zero_mean";
    case Constraint::Mode::fixed_mean: return "fixed_mean";
  }
  return "unknown";
}

struct EquationCoefficients {
  double a_M;
  double a_0;
};

inline EquationCoefficients coefficients(Variant v, double omega) {
  return v == Variant::standard ? EquationCoefficients{1.0, omega}
                                : EquationCoefficients{omega, omega - 1.0};
}

struct NewtonStep {
  double residual;  ///< ||R||_inf before the step
  double step;      ///< ||delta phi||_inf of the step (0 for the final entry)
};

struct TravelingWave {
  Field phi;
  double omega;
  double A;
  DispersionSymbol symbol;
  Nonlinearity nonlinearity;
  Variant variant = Variant::standard;
  Constraint constraint = Constraint::zero_mean();
  double residual_norm = 0.0;
  std::vector<NewtonStep> history;

  const PeriodicGrid& grid() const noexcept { return phi.grid(); }
};

/// a_M M phi + a_0 phi - f(phi) + A, pointwise.
inline Field residual(const Field& phi, double omega, double A, const DispersionSymbol& s,
                      const Nonlinearity& nl, Variant variant) {
  const auto [aM, a0] = coefficients(variant, omega);
  Field r = aM * apply_multiplier(s, phi) + a0 * phi - nl.f(phi);
  r += A;
  return r;
}

inline Field residual(const TravelingWave& w) {
  return residual(w.phi, w.omega, w.A, w.symbol, w.nonlinearity, w.variant);
}

/// d(residual)/d omega: phi, or M phi + phi for the regularized equation.
inline Field omega_derivative(const TravelingWave& w) {
  if (w.variant == Variant::standard) return w.phi;
  return apply_multiplier(w.symbol, w.phi) + w.phi;
}

namespace detail {

/// Number of independent samples of an even field: indices 0..N/2.
inline int even_size(int n) { return n / 2 + 1; }

inline Eigen::VectorXd even_project(const Eigen::VectorXd& v) {
  const int n = static_cast<int>(v.size());
  Eigen::VectorXd out(even_size(n));
  for (int j = 0; j <= n / 2; ++j) out[j] = 0.5 * (v[j] + v[(n - j) % n]);
  return out;
}

inline Eigen::VectorXd even_expand(const Eigen::VectorXd& half, int n) {
  Eigen::VectorXd v(n);
  for (int j = 0; j <= n / 2; ++j) {
    v[j] = half[j];
    v[(n - j) % n] = half[j];
  }
  return v;
}

/// Trapezoid weight of even sample j in int phi dx.
inline double even_weight(int j, int n, double h) { return (j == 0 || j == n / 2) ? h : 2.0 * h; }

inline double wave_scale(const Field& phi) { return std::max(1.0, phi.max_abs()); }

/// M restricted to even fields, acting on samples 0..N/2.
inline Eigen::MatrixXd folded_multiplier(const DispersionSymbol& s, const PeriodicGrid& g) {
  const int n = g.size();
  const int ne = even_size(n);
  const Eigen::MatrixXd full = multiplier_matrix(s, g);
  Eigen::MatrixXd fold(ne, ne);
  for (int i = 0; i < ne; ++i) {
    for (int j = 0; j < ne; ++j) {
      const int jm = (n - j) % n;
      fold(i, j) = (jm == j) ? full(i, j) : full(i, j) + full(i, jm);
    }
  }
  return fold;
}

/// Jacobian of (residual, mean equation) in (phi_even, A); the A column and
/// mean row are present only when A is free.
inline Eigen::MatrixXd even_jacobian(const Eigen::MatrixXd& Mfold, const Eigen::VectorXd& half, double aM,
                                     double a0, const Nonlinearity& nl, bool free_A, const PeriodicGrid& g) {
  const int ne = static_cast<int>(half.size());
  const int dim = ne + (free_A ? 1 : 0);
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(dim, dim);
  J.topLeftCorner(ne, ne) = aM * Mfold;
  for (int j = 0; j < ne; ++j) J(j, j) += a0 - nl.df(half[j]);
  if (free_A) {
    J.block(0, ne, ne, 1).setOnes();
    for (int j = 0; j < ne; ++j) J(ne, j) = even_weight(j, g.size(), g.spacing()) / g.length();
  }
  return J;
}

}  // namespace detail

struct NewtonOptions {
  double tol = 1e-10;
  int max_iter = 50;
  Variant variant = Variant::standard;
  /// Reject the solve when the Jacobian's reciprocal condition estimate drops below this.
  double singular_rcond = 1e-14;
};

/// Newton's method on the cosine (even) subspace.
///
/// Unknowns are phi_0..phi_{N/2} and, unless A is fixed, A itself together
/// with the mean equation int phi dx = target. The Jacobian is
/// a_M M + a_0 - f'(phi) folded onto the even samples.
inline TravelingWave solve_newton(const Field& guess, double omega, Constraint constraint,
                                  const DispersionSymbol& s, const Nonlinearity& nl,
                                  const NewtonOptions& opt = {}) {
  if (!(opt.tol > 0.0)) throw DomainError("newton tolerance must be positive");
  if (opt.max_iter < 1) throw DomainError("newton max_iter must be >= 1");
  const PeriodicGrid& g = guess.grid();
  const int n = g.size();
  const int ne = detail::even_size(n);
  const double h = g.spacing();
  const bool free_A = constraint.mode != Constraint::Mode::fixed_A;
  const auto [aM, a0] = coefficients(opt.variant, omega);

  Eigen::VectorXd half = detail::even_project(guess.values());
  {
    const double spread = half.maxCoeff() - half.minCoeff();
    if (!(spread > 1e-12 * std::max(1.0, half.cwiseAbs().maxCoeff()))) {
      throw UsageError("newton guess must be nonconstant");
    }
  }

  double A = free_A ? 0.0 : constraint.value;
  if (free_A) {
    // Least-squares A for the guess so the first residual is not dominated by it.
    Field phi(g, detail::even_expand(half, n));
    A = -residual(phi, omega, 0.0, s, nl, opt.variant).values().mean();
  }

  const Eigen::MatrixXd Mfold = detail::folded_multiplier(s, g);

  const int dim = ne + (free_A ? 1 : 0);
  std::vector<NewtonStep> history;
  for (int it = 0; it <= opt.max_iter; ++it) {
    const Field phi(g, detail::even_expand(half, n));
    const Eigen::VectorXd r_full = residual(phi, omega, A, s, nl, opt.variant).values();
    Eigen::VectorXd r(dim);
    r.head(ne) = r_full.head(ne);
    double mean_err = 0.0;
    if (free_A) {
      double integral = 0.0;
      for (int j = 0; j < ne; ++j) integral += detail::even_weight(j, n, h) * half[j];
      mean_err = (integral - constraint.mean_target()) / g.length();
      r[ne] = mean_err;
    }
    const double rnorm = std::max(r_full.cwiseAbs().maxCoeff(), std::abs(mean_err));
    if (!std::isfinite(rnorm)) throw ConvergenceError("newton iterate became non-finite");
    if (rnorm <= opt.tol) {
      history.push_back({rnorm, 0.0});
      const double spread = half.maxCoeff() - half.minCoeff();
      if (spread <= 1e-8 * detail::wave_scale(phi)) {
        throw DegenerateBranchError("newton converged to a constant state");
      }
      TravelingWave w{phi, omega, A, s, nl, opt.variant, constraint, rnorm, std::move(history)};
      return w;
    }
    if (it == opt.max_iter) break;

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(detail::even_jacobian(Mfold, half, aM, a0, nl, free_A, g));
    if (!(lu.rcond() > opt.singular_rcond)) {
      throw BifurcationError("newton jacobian is singular on the even subspace (rcond " +
                             std::to_string(lu.rcond()) + ")");
    }
    const Eigen::VectorXd delta = lu.solve(-r);
    const double step = delta.head(ne).cwiseAbs().maxCoeff();
    history.push_back({rnorm, step});
    half += delta.head(ne);
    if (free_A) A += delta[ne];
    if (step <= 1e-15 * detail::wave_scale(phi) && it > 0) {
      std::ostringstream msg;
      msg << "newton stagnated at residual " << rnorm << " above tolerance " << opt.tol;
      throw ConvergenceError(msg.str());
    }
  }
  throw ConvergenceError("newton did not converge in " + std::to_string(opt.max_iter) +
                         " iterations");
}

/// Recomputes the residual norm and checks it against `tol`.
inline TravelingWave certify(TravelingWave w, double tol) {
  w.residual_norm = residual(w).max_abs();
  if (!(w.residual_norm <= tol)) {
    throw ResolutionError("wave residual " + std::to_string(w.residual_norm) +
                          " exceeds tolerance " + std::to_string(tol));
  }
  return w;
}

// ---------------------------------------------------------------------------
// Closed-form reference waves

/// Parameters of phi = beta (dn^2(lambda x; k) - E/K), lambda = 2K/L, for
/// -phi'' + omega phi - phi^2/2 + A = 0. Matching the dn^4, dn^2 and constant
/// terms after (dn^2)'' = -6 dn^4 + 4(2 - k^2) dn^2 - 2 k'^2 gives
///   beta  = 12 lambda^2
///   omega = lambda^2 (4 (2 - k^2) - 12 E/K)
///   A     = omega beta E/K + beta^2 (E/K)^2 / 2 - 2 k'^2 beta lambda^2
/// and the last one equals (1/2L) int phi^2 because phi has zero mean.
struct CnoidalParameters {
  double K;
  double E;
  double lambda;
  double beta;
  double omega;
  double A;
};

inline CnoidalParameters cnoidal_parameters(double L, const elliptic::EllipticModulus& k) {
  const double K = elliptic::complete_K(k);
  const double E = elliptic::complete_E(k);
  const double lam = 2.0 * K / L;
  const double e = E / K;
  const double kk = k.k() * k.k();
  const double kp2 = k.complement() * k.complement();
  const double beta = 12.0 * lam * lam;
  const double omega = lam * lam * (4.0 * (2.0 - kk) - 12.0 * e);
  const double A = omega * beta * e + 0.5 * beta * beta * e * e - 2.0 * kp2 * beta * lam * lam;
  return {K, E, lam, beta, omega, A};
}

inline TravelingWave cnoidal_wave(double L, const elliptic::EllipticModulus& k, int N) {
  if (!(k.k() > 0.0)) throw DomainError("cnoidal wave needs 0 < k < 1");
  const PeriodicGrid g(L, N);
  const auto cp = cnoidal_parameters(L, k);
  const double e = cp.E / cp.K;
  Field phi = Field::from_function(g, [&](double x) {
    const double dn = elliptic::jacobi_sn_cn_dn(cp.lambda * x, k).dn;
    return cp.beta * (dn * dn - e);
  });
  TravelingWave w{std::move(phi), cp.omega, cp.A, DispersionSymbol::second_derivative(L),
                  Nonlinearity::power(1, 1.0), Variant::standard, Constraint::zero_mean(),
                  0.0, {}};
  w.residual_norm = residual(w).max_abs();
  return w;
}

/// Modulus of the zero-mean cnoidal wave with the given speed. Speeds range
/// over (-(2 pi / L)^2, infinity) and omega(k) is increasing.
inline elliptic::EllipticModulus cnoidal_modulus_for_speed(double L, double omega) {
  const double k_cap = 1.0 - 1e-12;
  const double w_min = -std::pow(2.0 * std::numbers::pi / L, 2);
  if (!(omega > w_min)) throw DomainError("no cnoidal wave at or below the bifurcation speed");
  auto speed = [&](double k) { return cnoidal_parameters(L, elliptic::EllipticModulus(k)).omega; };
  if (omega >= speed(k_cap)) throw DomainError("speed beyond the k -> 1 cap");
  double lo = 1e-12;
  double hi = k_cap;
  for (int it = 0; it < 200 && hi - lo > 4e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    (speed(mid) < omega ? lo : hi) = mid;
  }
  return elliptic::EllipticModulus(0.5 * (lo + hi));
}

/// Intermediate long wave profile (f = u^2, M = T_delta d/dx - 1/delta).
///
/// The Zeta combination (2K i / L)[Z(2K(x - i delta)/L) - Z(2K(x + i delta)/L)]
/// reduces, via sin(a - ib) - sin(a + ib) = -2i cos a sinh b, to
///   phi(x) = sum_{n >= 1} c_n cos(2 pi n x / L),
///   c_n = (8 pi / L) q^n sinh(2 pi n delta / L) / (1 - q^{2n}),
/// which converges for q e^{2 pi delta / L} < 1.
inline std::vector<double> ilw_cosine_coefficients(double L, double delta,
                                                   const elliptic::EllipticModulus& k,
                                                   int n_max) {
  const double q = elliptic::nome(k);
  const double y = 2.0 * std::numbers::pi * delta / L;
  const double log_ratio = std::log(q) + y;
  if (!(log_ratio < 0.0)) {
    throw DomainError("ilw series diverges: delta must be below L K'/(2K)");
  }
  std::vector<double> c;
  const double log_pref = std::log(8.0 * std::numbers::pi / L);
  double first = 0.0;
  for (int n = 1; n <= n_max; ++n) {
    const double ny = n * y;
    // log sinh(ny) = ny + log1p(-e^{-2ny}) - log 2
    const double log_sinh = ny + std::log1p(-std::exp(-2.0 * ny)) - std::numbers::ln2;
    const double log_q2n = 2.0 * n * std::log(q);
    const double log_c = log_pref + n * std::log(q) + log_sinh - std::log1p(-std::exp(log_q2n));
    const double cn = std::exp(log_c);
    if (n == 1) first = cn;
    c.push_back(cn);
    if (cn < 1e-18 * first) break;
  }
  return c;
}

inline TravelingWave ilw_wave(double L, double delta, const elliptic::EllipticModulus& k, int N) {
  if (!(delta > 0.0)) throw DomainError("ilw depth delta must be positive");
  if (!(k.k() > 0.0)) throw DomainError("ilw wave needs 0 < k < 1");
  const PeriodicGrid g(L, N);
  const int modes = N / 2 - 1;
  const auto c = ilw_cosine_coefficients(L, delta, k, modes + 1);
  if (static_cast<int>(c.size()) > modes && c.back() > 1e-12 * c.front()) {
    throw ResolutionError("ilw cosine series needs more than N/2 - 1 modes");
  }
  Eigen::VectorXcd spec = Eigen::VectorXcd::Zero(N);
  for (int m = 1; m <= std::min<int>(modes, static_cast<int>(c.size())); ++m) {
    spec[m] = 0.5 * c[static_cast<std::size_t>(m - 1)];
    spec[N - m] = spec[m];
  }
  Field phi = Field::from_spectrum(g, spec);
  const auto s = DispersionSymbol::ilw(delta, L);
  const auto nl = Nonlinearity::quadratic_ilw();
  const double A = inner(phi, phi) / L;
  // Least-squares speed: omega minimizes ||M phi + omega phi - phi^2 + A||.
  const Field rest = residual(phi, 0.0, A, s, nl, Variant::standard);
  const double omega = -inner(phi, rest) / inner(phi, phi);
  TravelingWave w{std::move(phi), omega, A, s, nl, Variant::standard, Constraint::zero_mean(),
                  0.0, {}};
  return certify(std::move(w), 1e-8);
}

/// The constant solution phi = c; A = f(c) - (a_M theta(0) + a_0) c.
inline TravelingWave constant_state(const PeriodicGrid& g, double c, double omega,
                                    const DispersionSymbol& s, const Nonlinearity& nl,
                                    Variant variant = Variant::standard) {
  const auto [aM, a0] = coefficients(variant, omega);
  const double A = nl.f(c) - (aM * s.value(0, g.length()) + a0) * c;
  TravelingWave w{Field::constant(g, c), omega, A, s, nl, variant,
                  Constraint::fixed_mean(c * g.length()), 0.0, {}};
  w.residual_norm = residual(w).max_abs();
  return w;
}

/// Bifurcation speed of the first harmonic from the constant state c.
inline double bifurcation_speed(const PeriodicGrid& g, double c, const DispersionSymbol& s,
                                const Nonlinearity& nl, Variant variant = Variant::standard) {
  const double th0 = s.value(0, g.length());
  const double th1 = s.value(1, g.length());
  // standard: theta_1 + omega - f'(c) = 0; regularized: omega (1 + theta_1) - 1 - f'(c) = 0
  if (variant == Variant::standard) return nl.df(c) - (th1 - th0);
  return (1.0 + nl.df(c)) / (1.0 + th1 - th0);
}

/// Second-order Stokes expansion about the constant state c at fixed mean:
///   phi = c + a cos(2 pi x / L) + a^2 b_2 cos(4 pi x / L),
///   b_2 = f''/(4(theta_2 - theta_1)),
///   omega = omega_b + a^2 (f''^2/(8(theta_2 - theta_1)) + f'''/8).
/// The regularized equation is first divided by omega.
inline Field stokes_guess(const PeriodicGrid& g, const DispersionSymbol& s,
                          const Nonlinearity& nl, double c, double omega,
                          Variant variant = Variant::standard) {
  const double L = g.length();
  const double th0 = s.value(0, L);
  const double th1 = s.value(1, L) - th0;
  const double th2 = s.value(2, L) - th0;
  if (!(th2 > th1)) throw DomainError("stokes expansion needs theta(2) > theta(1)");
  double scale = 1.0;
  double w_eff = omega;
  if (variant == Variant::regularized) {
    if (!(omega > 0.0)) throw DomainError("regularized stokes expansion needs omega > 0");
    scale = 1.0 / omega;
    w_eff = (omega - 1.0) / omega;
  }
  const double f1 = scale * nl.df(c);
  const double f2 = scale * nl.d2f(c);
  const double f3 = scale * nl.d3f(c);
  const double w_b = f1 - th1;
  const double b2 = f2 / (4.0 * (th2 - th1));
  const double w2 = f2 * f2 / (8.0 * (th2 - th1)) + f3 / 8.0;
  const double ratio = (w_eff - w_b) / w2;
  if (!(ratio > 0.0) || !std::isfinite(ratio)) {
    throw DomainError("no small-amplitude wave branch at this speed");
  }
  const double a = std::sqrt(ratio);
  const double kx = 2.0 * std::numbers::pi / L;
  return Field::from_function(g, [&](double x) {
    return c + a * std::cos(kx * x) + a * a * b2 * std::cos(2.0 * kx * x);
  });
}

// ---------------------------------------------------------------------------
// Continuation

enum class ParameterKind { omega, A, xi };

struct WaveFamily {
  ParameterKind kind = ParameterKind::omega;
  Constraint constraint;
  std::vector<double> parameter;
  std::vector<TravelingWave> members;

  std::size_t size() const noexcept { return members.size(); }
};

/// What is varied: omega at the given constraint, A at fixed omega, or xi
/// with prescribed omega(xi) and A(xi).
struct ContinuationParameter {
  ParameterKind kind = ParameterKind::omega;
  std::function<double(double)> omega_of_xi;
  std::function<double(double)> A_of_xi;

  static ContinuationParameter omega() { return {ParameterKind::omega, {}, {}}; }
  static ContinuationParameter A() { return {ParameterKind::A, {}, {}}; }
  static ContinuationParameter xi(std::function<double(double)> w, std::function<double(double)> a) {
    return {ParameterKind::xi, std::move(w), std::move(a)};
  }
};

/// Tangent d phi / dv of the solution set at w when omega and a prescribed A
/// move at rates (d_omega, d_A); a free A adjusts to hold the mean. Empty
/// when the even-subspace Jacobian is singular.
inline std::optional<Field> branch_tangent(const TravelingWave& w, bool free_A, double d_omega, double d_A) {
  const PeriodicGrid& g = w.grid();
  const int ne = detail::even_size(g.size());
  const auto [aM, a0] = coefficients(w.variant, w.omega);
  const Eigen::VectorXd half = detail::even_project(w.phi.values());
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(
      detail::even_jacobian(detail::folded_multiplier(w.symbol, g), half, aM, a0, w.nonlinearity, free_A, g));
  if (!(lu.rcond() > 1e-14)) return std::nullopt;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ne + (free_A ? 1 : 0));
  rhs.head(ne) = -(d_omega * detail::even_project(omega_derivative(w).values()) +
                   Eigen::VectorXd::Constant(ne, free_A ? 0.0 : d_A));
  const Eigen::VectorXd t = lu.solve(rhs);
  return Field(g, detail::even_expand(t.head(ne), g.size()));
}

/// Members solved before the first failure, plus that failure if any.
struct ContinuationResult {
  WaveFamily family;
  std::optional<ContinuationError> error;
};

/// Natural-parameter continuation; stops at the first value where Newton
/// fails. The first step is predicted along the tangent, later ones by secant.
inline ContinuationResult continue_family_partial(const TravelingWave& seed, const ContinuationParameter& par,
                                                  const std::vector<double>& values, Constraint constraint,
                                                  NewtonOptions opt = {}) {
  if (values.empty()) throw UsageError("continuation grid is empty");
  if (par.kind == ParameterKind::xi && (!par.omega_of_xi || !par.A_of_xi)) {
    throw UsageError("xi continuation needs omega(xi) and A(xi)");
  }
  opt.variant = seed.variant;
  WaveFamily fam;
  fam.kind = par.kind;
  fam.constraint = constraint;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    double omega = seed.omega;
    Constraint c = constraint;
    switch (par.kind) {
      case ParameterKind::omega: omega = v; break;
      case ParameterKind::A: c = Constraint::fixed_A(v); break;
      case ParameterKind::xi:
        omega = par.omega_of_xi(v);
        c = Constraint::fixed_A(par.A_of_xi(v));
        break;
    }
    Field guess = seed.phi;
    if (i == 1) {
      const TravelingWave& w0 = fam.members[0];
      const double dv = v - values[0];
      double d_omega = 0.0, d_A = 0.0;
      switch (par.kind) {
        case ParameterKind::omega: d_omega = 1.0; break;
        case ParameterKind::A: d_A = 1.0; break;
        case ParameterKind::xi: {
          const double hx = 1e-6 * std::max(1.0, std::abs(values[0]));
          d_omega = (par.omega_of_xi(values[0] + hx) - par.omega_of_xi(values[0] - hx)) / (2 * hx);
          d_A = (par.A_of_xi(values[0] + hx) - par.A_of_xi(values[0] - hx)) / (2 * hx);
          break;
        }
      }
      const auto t = branch_tangent(w0, c.mode != Constraint::Mode::fixed_A, d_omega, d_A);
      guess = t ? w0.phi + dv * *t : w0.phi;
    } else if (i >= 2) {
      const double t = (v - values[i - 1]) / (values[i - 1] - values[i - 2]);
      guess = fam.members[i - 1].phi + t * (fam.members[i - 1].phi - fam.members[i - 2].phi);
    }
    try {
      fam.members.push_back(solve_newton(guess, omega, c, seed.symbol, seed.nonlinearity, opt));
    } catch (const Error& e) {
      return {std::move(fam), ContinuationError(v, e.what())};
    }
    fam.parameter.push_back(v);
  }
  return {std::move(fam), std::nullopt};
}

/// As continue_family_partial, but a failure throws ContinuationError.
inline WaveFamily continue_family(const TravelingWave& seed, const ContinuationParameter& par,
                                  const std::vector<double>& values, Constraint constraint,
                                  NewtonOptions opt = {}) {
  ContinuationResult r = continue_family_partial(seed, par, values, constraint, opt);
  if (r.error) throw *r.error;
  return std::move(r.family);
}

}  // namespace periwave
