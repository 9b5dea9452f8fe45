#pragma once

// Time evolution, conserved quantities, the Lyapunov function about a wave
// and the orbital distance to its translation orbit.
//
// Standard equation in Fourier space:    u_t = i xi (theta u - f(u))^
// Regularized equation in Fourier space: u_t = -i xi (u + f(u))^ / (1 + theta)
// with xi = 2 pi kappa / L and the Nyquist mode frozen.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "periwave/error.hpp"
#include "periwave/linop.hpp"
#include "periwave/parallel.hpp"
#include "periwave/spectral.hpp"
#include "periwave/stability.hpp"
#include "periwave/waves.hpp"

namespace periwave {

namespace detail {

/// Zero-padded copy of u on a grid with at least `min_points` nodes.
inline Eigen::VectorXd padded_samples(const Field& u, int min_points) {
  const int n = u.size();
  int np = std::max(n, min_points);
  np += np % 2;
  if (np == n) return u.values();
  const Eigen::VectorXcd c = u.spectrum();
  Eigen::VectorXcd cp = Eigen::VectorXcd::Zero(np);
  for (int i = 0; i < n / 2; ++i) cp[i] = c[i];
  for (int i = 1; i < n / 2; ++i) cp[np - i] = c[n - i];
  // Split the Nyquist coefficient between +-N/2 so the padded field stays real.
  cp[n / 2] = 0.5 * c[n / 2];
  cp[np - n / 2] = 0.5 * c[n / 2];
  return inverse(cp);
}

}  // namespace detail

/// int W(u) dx, exact for band-limited u (zero-padded quadrature).
inline double integral_W(const Field& u, const Nonlinearity& nl) {
  const int deg = nl.degree() + 1;
  const Eigen::VectorXd v = detail::padded_samples(u, (deg + 1) * u.size() / 2 + 2);
  double acc = 0.0;
  for (Eigen::Index j = 0; j < v.size(); ++j) acc += nl.W(v[j]);
  return acc * u.grid().length() / static_cast<double>(v.size());
}

/// P(u) = int (u M u / 2 - W(u)) dx
inline double conserved_P(const Field& u, const DispersionSymbol& s, const Nonlinearity& nl) {
  return 0.5 * inner(u, apply_multiplier(s, u)) - integral_W(u, nl);
}

inline double conserved_F(const Field& u, const DispersionSymbol& s, Variant variant) {
  return momentum_F(u, s, variant);
}

inline double conserved_M(const Field& u) { return mean(u); }

/// Coefficient of F in G: omega, or omega - 1 for the regularized equation.
inline double momentum_weight(Variant v, double omega) {
  return v == Variant::standard ? omega : omega - 1.0;
}

/// G(u) = P(u) + c_F F(u) + A M(u); its critical points are the waves.
inline double constrained_energy_G(const Field& u, double omega, double A, const DispersionSymbol& s,
                                   const Nonlinearity& nl, Variant variant = Variant::standard) {
  return conserved_P(u, s, nl) + momentum_weight(variant, omega) * conserved_F(u, s, variant) +
         A * conserved_M(u);
}

inline double constrained_energy_G(const Field& u, const TravelingWave& w) {
  return constrained_energy_G(u, w.omega, w.A, w.symbol, w.nonlinearity, w.variant);
}

/// Q(u) = mu M(u) + nu F(u)
inline double auxiliary_Q(const Field& u, double mu, double nu, const DispersionSymbol& s,
                          Variant variant = Variant::standard) {
  if (mu == 0.0 && nu == 0.0) throw DomainError("auxiliary quantity needs (mu, nu) != (0, 0)");
  return mu * conserved_M(u) + nu * conserved_F(u, s, variant);
}

struct LyapunovParams {
  double sigma;
  double mu;
  double nu;
};

/// V(v) = G(v) - G(phi) + sigma (Q(v) - Q(phi))^2
inline double lyapunov_V(const Field& v, const TravelingWave& w, const LyapunovParams& p) {
  if (!(p.sigma > 0.0)) throw DomainError("lyapunov sigma must be positive");
  const double q = auxiliary_Q(v, p.mu, p.nu, w.symbol, w.variant) -
                   auxiliary_Q(w.phi, p.mu, p.nu, w.symbol, w.variant);
  return constrained_energy_G(v, w) - constrained_energy_G(w.phi, w) + p.sigma * q * q;
}

/// Scale of G used to express V drift in relative terms: |P| + |c_F F| + |A M| at phi.
inline double energy_scale(const TravelingWave& w) {
  return std::abs(conserved_P(w.phi, w.symbol, w.nonlinearity)) +
         std::abs(momentum_weight(w.variant, w.omega) * conserved_F(w.phi, w.symbol, w.variant)) +
         std::abs(w.A * conserved_M(w.phi));
}

struct SigmaChoice {
  double sigma;
  /// Smallest eigenvalue of L + 2 sigma q q^T on the complement of phi'.
  double margin;
};

/// Picks sigma so the Hessian of V at phi, L + 2 sigma q q^T with q = mu + nu g,
/// is positive on the complement of phi'. Doubles sigma until positive, then
/// doubles once more for margin.
inline SigmaChoice lyapunov_sigma(const TravelingWave& w, const LinearizedOperator& lin, double mu,
                                  double nu) {
  const PeriodicGrid& g = w.grid();
  const Field q = Field::constant(g, mu) + nu * omega_derivative(w);
  const Field dphi = derivative(w.phi);
  const double h = g.spacing();
  const int n = g.size();
  Eigen::MatrixXd Z;
  if (dphi.values().norm() > 0.0) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(dphi.values());
    Z = Eigen::MatrixXd(qr.householderQ()).rightCols(n - 1);
  } else {
    Z = Eigen::MatrixXd::Identity(n, n);
  }
  const Eigen::MatrixXd LZ = Z.transpose() * lin.matrix() * Z;
  const Eigen::VectorXd qz = Z.transpose() * q.values();
  auto margin = [&](double sigma) {
    Eigen::MatrixXd H = LZ + 2.0 * sigma * h * qz * qz.transpose();
    H = 0.5 * (H + H.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
    return es.eigenvalues()[0];
  };
  double sigma = 1.0 / std::max(1e-300, h * qz.squaredNorm());
  for (int it = 0; it < 80; ++it) {
    if (margin(sigma) > 0.0) {
      sigma *= 2.0;
      return {sigma, margin(sigma)};
    }
    sigma *= 2.0;
  }
  throw NotApplicableError("no sigma makes the Lyapunov Hessian positive; Q' does not control L");
}

struct OrbitalDistance {
  double d;
  double r_star;
  /// |(v - phi(. + r*), phi'(. + r*))_s|
  double optimality;
};

/// inf over r of ||v - phi(. + r)||_s. The cross term is a trigonometric
/// polynomial in r: scanned at the N grid shifts by one FFT, then refined by
/// safeguarded Newton on its derivative.
inline OrbitalDistance orbital_distance(const Field& v, const Field& phi, double s) {
  detail::require_same_grid(v.grid(), phi.grid());
  const PeriodicGrid& g = v.grid();
  const int n = g.size();
  const double L = g.length();
  const Eigen::VectorXd wts = sobolev_weights(g, s);
  const Eigen::VectorXcd vh = v.spectrum();
  const Eigen::VectorXcd ph = phi.spectrum();
  Eigen::VectorXcd c(n);
  Eigen::VectorXd xi(n);
  for (int i = 0; i < n; ++i) {
    c[i] = wts[i] * std::conj(vh[i]) * ph[i];
    xi[i] = g.angular(g.wavenumber(i));
  }
  // C(r) = sum Re(c e^{i xi r}); h(r) = ||v||^2 + ||phi||^2 - 2 L C(r)
  auto C = [&](double r, int order) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const std::complex<double> e = c[i] * std::polar(1.0, xi[i] * r);
      if (i == n / 2) {
        // Nyquist term acts as c cos(xi r).
        const double cr = c[i].real();
        const double x = xi[i] * r;
        acc += order == 0 ? cr * std::cos(x) : order == 1 ? -cr * xi[i] * std::sin(x)
                                                          : -cr * xi[i] * xi[i] * std::cos(x);
        continue;
      }
      const std::complex<double> f = order == 0   ? e
                                     : order == 1 ? std::complex<double>(0.0, xi[i]) * e
                                                  : -xi[i] * xi[i] * e;
      acc += f.real();
    }
    return acc;
  };
  const Eigen::VectorXd scan = n * detail::inverse(c);  // C at r_j = jL/N
  Eigen::Index jbest = 0;
  scan.maxCoeff(&jbest);
  const double h = g.spacing();
  double lo = (jbest - 1) * h;
  double hi = (jbest + 1) * h;
  double r = jbest * h;
  for (int it = 0; it < 60; ++it) {
    const double d1 = C(r, 1);
    const double d2 = C(r, 2);
    double next = (d2 < 0.0) ? r - d1 / d2 : std::numeric_limits<double>::quiet_NaN();
    if (!(next > lo && next < hi)) {
      // Golden-section step on the bracket toward the larger C.
      const double phi_g = 0.5 * (std::sqrt(5.0) - 1.0);
      const double a = hi - phi_g * (hi - lo);
      const double b = lo + phi_g * (hi - lo);
      if (C(a, 0) > C(b, 0)) hi = b; else lo = a;
      next = 0.5 * (lo + hi);
    } else {
      (d1 > 0.0 ? lo : hi) = r;
    }
    const double step = std::abs(next - r);
    r = next;
    if (step < 1e-15 * L) break;
  }
  r = std::fmod(r, L);
  if (r < 0.0) r += L;
  // ||v||^2 + ||phi||^2 - 2 L C(r) cancels near the orbit; take the norm of the difference.
  const double d = sobolev_norm(v - phi.translated(r), s);
  return {d, r, 0.5 * std::abs(2.0 * L * C(r, 1))};
}

inline OrbitalDistance orbital_distance(const Field& v, const TravelingWave& w, double s) {
  return orbital_distance(v, w.phi, s);
}

/// Energy-space index m/2 of a symbol.
inline double energy_index(const DispersionSymbol& s) { return 0.5 * s.order(); }

// ---------------------------------------------------------------------------
// Integrators

enum class Integrator { etdrk4, implicit_midpoint };

inline std::string to_string(Integrator i) {
  return i == Integrator::etdrk4 ? "etdrk4" : "implicit_midpoint";
}

struct EvolutionConfig {
  double dt = 1e-3;
  double T = 1.0;
  Integrator integrator = Integrator::etdrk4;
  bool dealias = true;
  Variant variant = Variant::standard;
  /// Time between stored samples; 0 stores only the endpoints.
  double sample_interval = 0.0;
  /// Blowup when max |u| exceeds this multiple of max(1, max |u0|).
  double blowup_factor = 1e3;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Field> states;
  std::optional<double> blowup_time;
};

namespace detail {

class SpectralRhs {
 public:
  SpectralRhs(const PeriodicGrid& g, const DispersionSymbol& s, const Nonlinearity& nl, Variant v,
              bool dealias)
      : grid_(g), nl_(nl), dealias_(dealias), lin_(g.size()), nlc_(g.size()) {
    const int n = g.size();
    for (int i = 0; i < n; ++i) {
      const double xi = (i == n / 2) ? 0.0 : g.angular(g.wavenumber(i));
      const double th = s.value(std::abs(g.wavenumber(i)), g.length());
      if (v == Variant::standard) {
        lin_[i] = {0.0, xi * th};
        nlc_[i] = {0.0, -xi};
      } else {
        if (!(1.0 + th > 0.0)) throw DomainError("regularized evolution needs 1 + theta > 0");
        lin_[i] = {0.0, -xi / (1.0 + th)};
        nlc_[i] = {0.0, -xi / (1.0 + th)};
      }
    }
    padded_ = dealias ? (nl.degree() + 1) * n / 2 + 2 : n;
    padded_ += padded_ % 2;
  }

  const Eigen::VectorXcd& linear() const noexcept { return lin_; }

  /// Nonlinear term of the right side for spectrum u_hat.
  Eigen::VectorXcd nonlinear(const Eigen::VectorXcd& uh) const {
    const int n = grid_.size();
    Eigen::VectorXcd fh;
    if (!dealias_ || padded_ == n) {
      Eigen::VectorXd u = inverse(uh);
      for (Eigen::Index j = 0; j < u.size(); ++j) u[j] = nl_.f(u[j]);
      fh = forward(u);
    } else {
      const int np = padded_;
      Eigen::VectorXcd cp = Eigen::VectorXcd::Zero(np);
      for (int i = 0; i < n / 2; ++i) cp[i] = uh[i];
      for (int i = 1; i < n / 2; ++i) cp[np - i] = uh[n - i];
      cp[n / 2] = 0.5 * uh[n / 2];
      cp[np - n / 2] = 0.5 * uh[n / 2];
      Eigen::VectorXd u = inverse(cp);
      for (Eigen::Index j = 0; j < u.size(); ++j) u[j] = nl_.f(u[j]);
      const Eigen::VectorXcd big = forward(u);
      fh.resize(n);
      for (int i = 0; i < n / 2; ++i) fh[i] = big[i];
      for (int i = 1; i < n / 2; ++i) fh[n - i] = big[np - i];
      fh[n / 2] = 0.0;
    }
    return nlc_.cwiseProduct(fh);
  }

 private:
  PeriodicGrid grid_;
  Nonlinearity nl_;
  bool dealias_;
  int padded_;
  Eigen::VectorXcd lin_;
  Eigen::VectorXcd nlc_;
};

/// ETDRK4 coefficients by contour averaging (radius 1, 32 points).
struct EtdCoefficients {
  Eigen::VectorXcd E, E2, Q, f1, f2, f3;

  EtdCoefficients(const Eigen::VectorXcd& lin, double dt) {
    const Eigen::Index n = lin.size();
    E.resize(n); E2.resize(n); Q.resize(n); f1.resize(n); f2.resize(n); f3.resize(n);
    constexpr int kPoints = 32;
    for (Eigen::Index i = 0; i < n; ++i) {
      const std::complex<double> c = lin[i] * dt;
      E[i] = std::exp(c);
      E2[i] = std::exp(0.5 * c);
      std::complex<double> q = 0.0, a = 0.0, b = 0.0, d = 0.0;
      for (int k = 0; k < kPoints; ++k) {
        const std::complex<double> z =
            c + std::polar(1.0, std::numbers::pi * (k + 0.5) / (0.5 * kPoints));
        const std::complex<double> ez = std::exp(z);
        const std::complex<double> z3 = z * z * z;
        q += (std::exp(0.5 * z) - 1.0) / z;
        a += (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3;
        b += (2.0 + z + ez * (z - 2.0)) / z3;
        d += (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3;
      }
      Q[i] = dt * q / double(kPoints);
      f1[i] = dt * a / double(kPoints);
      f2[i] = dt * b / double(kPoints);
      f3[i] = dt * d / double(kPoints);
    }
  }
};

}  // namespace detail

/// Integrates from u0 over [0, T]. Stops early and records the time on blowup.
inline Trajectory integrate(const Field& u0, const EvolutionConfig& cfg, const DispersionSymbol& s,
                            const Nonlinearity& nl) {
  if (!(cfg.dt > 0.0) || !(cfg.T > 0.0) || !(cfg.dt <= cfg.T)) {
    throw DomainError("evolution needs 0 < dt <= T");
  }
  const PeriodicGrid& g = u0.grid();
  const detail::SpectralRhs rhs(g, s, nl, cfg.variant, cfg.dealias);
  const long steps = static_cast<long>(std::ceil(cfg.T / cfg.dt - 1e-9));
  const double dt = cfg.T / static_cast<double>(steps);
  const long every = cfg.sample_interval > 0.0
                         ? std::max(1L, std::lround(cfg.sample_interval / dt))
                         : steps;
  const double limit = cfg.blowup_factor * std::max(1.0, u0.max_abs());

  Trajectory tr;
  tr.times.push_back(0.0);
  tr.states.push_back(u0);
  Eigen::VectorXcd v = u0.spectrum();

  std::optional<detail::EtdCoefficients> etd;
  Eigen::VectorXcd im_plus, im_minus_inv;
  if (cfg.integrator == Integrator::etdrk4) {
    etd.emplace(rhs.linear(), dt);
  } else {
    const Eigen::VectorXcd half = 0.5 * dt * rhs.linear();
    im_plus = (Eigen::VectorXcd::Ones(half.size()) + half);
    im_minus_inv = (Eigen::VectorXcd::Ones(half.size()) - half).cwiseInverse();
  }

  for (long k = 1; k <= steps; ++k) {
    if (etd) {
      const auto& c = *etd;
      const Eigen::VectorXcd Nv = rhs.nonlinear(v);
      const Eigen::VectorXcd a = c.E2.cwiseProduct(v) + c.Q.cwiseProduct(Nv);
      const Eigen::VectorXcd Na = rhs.nonlinear(a);
      const Eigen::VectorXcd b = c.E2.cwiseProduct(v) + c.Q.cwiseProduct(Na);
      const Eigen::VectorXcd Nb = rhs.nonlinear(b);
      const Eigen::VectorXcd cc = c.E2.cwiseProduct(a) + c.Q.cwiseProduct(2.0 * Nb - Nv);
      const Eigen::VectorXcd Nc = rhs.nonlinear(cc);
      v = c.E.cwiseProduct(v) + c.f1.cwiseProduct(Nv) + 2.0 * c.f2.cwiseProduct(Na + Nb) +
          c.f3.cwiseProduct(Nc);
    } else {
      // (1 - dt/2 Lin) v+ = (1 + dt/2 Lin) v + dt N((v + v+)/2), fixed point.
      const Eigen::VectorXcd base = im_plus.cwiseProduct(v);
      Eigen::VectorXcd next = v;
      for (int it = 0; it < 100; ++it) {
        const Eigen::VectorXcd trial =
            im_minus_inv.cwiseProduct(base + dt * rhs.nonlinear(0.5 * (v + next)));
        const double change = (trial - next).cwiseAbs().maxCoeff();
        next = trial;
        if (change <= 1e-15 * std::max(1.0, next.cwiseAbs().maxCoeff())) break;
      }
      v = next;
    }
    const bool sample = (k % every == 0) || k == steps;
    const bool finite = v.allFinite();
    if (sample || !finite) {
      Field u = Field::from_spectrum(g, v);
      if (!finite || !u.values().allFinite() || u.max_abs() > limit) {
        tr.blowup_time = k * dt;
        return tr;
      }
      if (sample) {
        tr.times.push_back(k * dt);
        tr.states.push_back(std::move(u));
      }
    }
  }
  return tr;
}

// ---------------------------------------------------------------------------
// Perturbation experiments

/// Smooth mean-free random field with ||p||_s = 1; modes 1..modes with
/// amplitudes decaying like 1/kappa^2.
inline Field random_perturbation(const PeriodicGrid& g, std::uint64_t seed, double s, int modes = 8) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int n = g.size();
  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(n);
  for (int k = 1; k <= std::min(modes, n / 2 - 1); ++k) {
    const double scale = 1.0 / (double(k) * k);
    c[k] = scale * std::complex<double>(normal(rng), normal(rng));
    c[n - k] = std::conj(c[k]);
  }
  Field p = Field::from_spectrum(g, c);
  return p * (1.0 / sobolev_norm(p, s));
}

struct TraceRow {
  double t;
  double d_orbit;
  double r_star;
  double P;
  double F;
  double M;
  double V;
};

struct EvolutionTrace {
  double amplitude = 0.0;
  std::uint64_t seed = 0;
  double initial_distance = 0.0;  ///< ||u0 - phi||_{m/2}
  std::vector<TraceRow> rows;
  std::optional<double> blowup_time;
  double sup_distance = 0.0;
  /// sup_t d(u(t)) / ||u0 - phi||; absent for a = 0.
  std::optional<double> sup_ratio;
  double drift_P = 0.0;
  double drift_F = 0.0;
  double drift_M = 0.0;
  double drift_V = 0.0;
};

struct ExperimentConfig {
  EvolutionConfig evolution;
  std::uint64_t seed = 1;
  /// Lyapunov parameters; from the verdict when known.
  LyapunovParams lyapunov{1.0, 0.0, 1.0};
};

inline double max_drift(const std::vector<TraceRow>& rows, double TraceRow::*field, double scale) {
  double d = 0.0;
  for (const auto& r : rows) d = std::max(d, std::abs(r.*field - rows.front().*field));
  return scale > 0.0 ? d / scale : d;
}

/// Evolves phi + a p for a fixed mean-free random p and records the orbit
/// distance and conserved quantities. A finite horizon can only falsify
/// orbital stability, never prove it.
inline EvolutionTrace run_trace(const TravelingWave& w, double amplitude, const ExperimentConfig& cfg) {
  const double s_idx = energy_index(w.symbol);
  const PeriodicGrid& g = w.grid();
  EvolutionConfig ec = cfg.evolution;
  ec.variant = w.variant;
  const Field p = random_perturbation(g, cfg.seed, s_idx);
  const Field u0 = w.phi + amplitude * p;
  const Trajectory tr = integrate(u0, ec, w.symbol, w.nonlinearity);

  EvolutionTrace out;
  out.amplitude = amplitude;
  out.seed = cfg.seed;
  out.initial_distance = sobolev_norm(u0 - w.phi, s_idx);
  out.blowup_time = tr.blowup_time;
  double abs_mass = 0.0;
  for (std::size_t i = 0; i < tr.states.size(); ++i) {
    const Field& u = tr.states[i];
    const auto od = orbital_distance(u, w.phi, s_idx);
    TraceRow row{tr.times[i], od.d, od.r_star, conserved_P(u, w.symbol, w.nonlinearity),
                 conserved_F(u, w.symbol, w.variant), conserved_M(u),
                 lyapunov_V(u, w, cfg.lyapunov)};
    out.rows.push_back(row);
    out.sup_distance = std::max(out.sup_distance, od.d);
    abs_mass = std::max(abs_mass, g.spacing() * u.values().cwiseAbs().sum());
  }
  if (amplitude > 0.0 && out.initial_distance > 0.0) out.sup_ratio = out.sup_distance / out.initial_distance;
  const auto& r0 = out.rows.front();
  out.drift_P = max_drift(out.rows, &TraceRow::P, std::abs(r0.P));
  out.drift_F = max_drift(out.rows, &TraceRow::F, std::abs(r0.F));
  out.drift_M = max_drift(out.rows, &TraceRow::M, abs_mass);
  out.drift_V = max_drift(out.rows, &TraceRow::V, energy_scale(w));
  return out;
}

/// One trace per amplitude, run concurrently.
inline std::vector<EvolutionTrace> stability_experiment(const TravelingWave& w,
                                                        const std::vector<double>& amplitudes,
                                                        const ExperimentConfig& cfg) {
  for (double a : amplitudes)
    if (!(a >= 0.0)) throw DomainError("perturbation amplitudes must be non-negative");
  std::vector<EvolutionTrace> out(amplitudes.size());
  parallel_for(amplitudes.size(), [&](std::size_t i) { out[i] = run_trace(w, amplitudes[i], cfg); });
  return out;
}

}  // namespace periwave
