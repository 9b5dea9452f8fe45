#pragma once

// Stability criteria over the (omega, A) surface of traveling waves.
//
// With eta = d phi / d omega and beta = d phi / d A,
//   M_omega = int eta,  M_A = int beta,  F_omega = int g eta,  F_A = int g beta,
// where g = phi (standard) or M phi + phi (regularized). The quadratic form
//   Delta(x, y) = x^2 M_A + x y (M_omega + F_A) + y^2 F_omega
// equals -(L^{-1} Q', Q') for Q' = x + y g, and any point with Delta > 0
// certifies orbital stability once the spectral hypotheses hold.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "periwave/error.hpp"
#include "periwave/linop.hpp"
#include "periwave/spectral.hpp"
#include "periwave/waves.hpp"

namespace periwave {

struct SurfaceDerivatives {
  double M_omega = 0.0;
  double M_A = 0.0;
  double F_omega = 0.0;
  double F_A = 0.0;

  /// M_omega^2 - F_omega M_A
  double det_condition() const noexcept { return M_omega * M_omega - F_omega * M_A; }
};

/// Momentum-like functional: 1/2 int u^2, or 1/2 int (u M u + u^2) when regularized.
inline double momentum_F(const Field& u, const DispersionSymbol& s, Variant variant) {
  if (variant == Variant::standard) return 0.5 * inner(u, u);
  return 0.5 * (inner(u, apply_multiplier(s, u)) + inner(u, u));
}

inline SurfaceDerivatives surface_derivatives(const TravelingWave& w, const Field& eta,
                                              const Field& beta) {
  const Field g = omega_derivative(w);
  return {mean(eta), mean(beta), inner(g, eta), inner(g, beta)};
}

inline SurfaceDerivatives surface_derivatives(const TravelingWave& w, const ParamDerivatives& d) {
  return surface_derivatives(w, d.eta, d.beta);
}

/// The same four numbers as resolvent inner products, e.g. M_A = -(L^{-1} 1, 1).
inline SurfaceDerivatives resolvent_forms(const TravelingWave& w, const LinearizedOperator& lin,
                                          std::optional<double> zero_tol = std::nullopt) {
  const Field g = omega_derivative(w);
  const Field one = Field::constant(w.grid(), 1.0);
  const Field Lg = solve_on_complement(lin, g, zero_tol);
  const Field L1 = solve_on_complement(lin, one, zero_tol);
  return {-inner(Lg, one), -inner(L1, one), -inner(Lg, g), -inner(L1, g)};
}

struct FiniteDifferenceOptions {
  double rel_step = 2e-4;
  double tol = 1e-11;
  int max_iter = 40;
};

/// Surface derivatives from re-solved neighbours: omega +- h at fixed A and
/// A +- h at fixed omega, differencing int phi and F(phi). Central differences
/// at h and h/2 are combined by Richardson extrapolation.
inline SurfaceDerivatives finite_difference_derivatives(const TravelingWave& w,
                                                        const FiniteDifferenceOptions& o = {}) {
  const double amp = w.phi.max_abs();
  double fprime_scale = 0.0;
  for (int j = 0; j < w.grid().size(); ++j)
    fprime_scale = std::max(fprime_scale, std::abs(w.nonlinearity.df(w.phi[j])));
  const double h_w = o.rel_step * std::max({std::abs(w.omega), fprime_scale, 1e-8});
  const double h_A = o.rel_step * std::max({std::abs(w.A), std::abs(w.omega) * amp, 1e-8});
  NewtonOptions nopt{std::max(o.tol, 2.0 * w.residual_norm), o.max_iter, w.variant};

  auto moments = [&](double omega, double A) {
    try {
      const auto v = solve_newton(w.phi, omega, Constraint::fixed_A(A), w.symbol, w.nonlinearity, nopt);
      return std::pair{mean(v.phi), momentum_F(v.phi, v.symbol, v.variant)};
    } catch (const Error& e) {
      throw ConvergenceError(std::string("finite-difference neighbour solve failed: ") + e.what());
    }
  };
  auto central = [&](double dw, double dA) {
    const auto [Mp, Fp] = moments(w.omega + dw, w.A + dA);
    const auto [Mm, Fm] = moments(w.omega - dw, w.A - dA);
    const double h = 2.0 * (dw + dA);
    return std::pair{(Mp - Mm) / h, (Fp - Fm) / h};
  };
  auto richardson = [](std::pair<double, double> coarse, std::pair<double, double> fine) {
    return std::pair{(4.0 * fine.first - coarse.first) / 3.0, (4.0 * fine.second - coarse.second) / 3.0};
  };
  const auto dw = richardson(central(h_w, 0.0), central(0.5 * h_w, 0.0));
  const auto dA = richardson(central(0.0, h_A), central(0.0, 0.5 * h_A));
  return {dw.first, dA.first, dw.second, dA.second};
}

struct ResolventReport {
  SurfaceDerivatives resolvent;
  /// Largest relative deviation |x - y| / max(|x|, |y|, floor) over the four entries.
  double max_rel_deviation = 0.0;
  double fa_minus_momega = 0.0;
};

inline double relative_gap(double x, double y, double floor = 1e-300) {
  return std::abs(x - y) / std::max({std::abs(x), std::abs(y), floor});
}

/// Entry-wise relative gap; entries below 1e-6 of the largest magnitude (zero
/// by symmetry, e.g. M_omega for odd f at zero mean) are measured against that scale.
inline double max_relative_gap(const SurfaceDerivatives& a, const SurfaceDerivatives& b) {
  const double scale = std::max({std::abs(a.M_omega), std::abs(a.M_A), std::abs(a.F_omega),
                                 std::abs(a.F_A), std::abs(b.M_omega), std::abs(b.M_A),
                                 std::abs(b.F_omega), std::abs(b.F_A)});
  const double floor = std::max(1e-6 * scale, 1e-300);
  return std::max({relative_gap(a.M_omega, b.M_omega, floor), relative_gap(a.M_A, b.M_A, floor),
                   relative_gap(a.F_omega, b.F_omega, floor), relative_gap(a.F_A, b.F_A, floor)});
}

/// Compares `sd` with the resolvent inner products.
inline ResolventReport resolvent_consistency(const TravelingWave& w, const LinearizedOperator& lin,
                                             const SurfaceDerivatives& sd,
                                             std::optional<double> zero_tol = std::nullopt) {
  ResolventReport r;
  r.resolvent = resolvent_forms(w, lin, zero_tol);
  r.max_rel_deviation = max_relative_gap(r.resolvent, sd);
  r.fa_minus_momega = sd.F_A - sd.M_omega;
  return r;
}

inline double delta_form(const SurfaceDerivatives& sd, double x, double y) {
  return x * x * sd.M_A + x * y * (sd.M_omega + sd.F_A) + y * y * sd.F_omega;
}

struct DeltaWitness {
  double a;
  double b;
  double value;  ///< Delta(a, b) for the unit vector (a, b)
};

/// Leading eigenvector of the symmetric 2x2 matrix of Delta when its largest
/// eigenvalue is positive.
inline std::optional<DeltaWitness> find_delta_witness(const SurfaceDerivatives& sd) {
  Eigen::Matrix2d S;
  const double off = 0.5 * (sd.M_omega + sd.F_A);
  S << sd.M_A, off, off, sd.F_omega;
  const double scale = S.cwiseAbs().maxCoeff();
  if (!(scale > 0.0) || !std::isfinite(scale)) return std::nullopt;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(S);
  const double top = es.eigenvalues()[1];
  if (!(top > 1e-14 * scale)) return std::nullopt;
  Eigen::Vector2d v = es.eigenvectors().col(1);
  if (v[0] < 0.0 || (v[0] == 0.0 && v[1] < 0.0)) v = -v;
  return DeltaWitness{v[0], v[1], delta_form(sd, v[0], v[1])};
}

enum class Conclusion { orbitally_stable, spectrally_unstable, inconclusive };
enum class FiredCriterion { none, M_A, F_omega, det_condition, delta_witness, krein_index };

inline std::string to_string(Conclusion c) {
  switch (c) {
    case Conclusion::orbitally_stable: return "orbitally_stable";
    case Conclusion::spectrally_unstable: return "spectrally_unstable";
    case Conclusion::inconclusive: return "inconclusive";
  }
  return "unknown";
}

inline std::string to_string(FiredCriterion c) {
  switch (c) {
    case FiredCriterion::none: return "none";
    case FiredCriterion::M_A: return "M_A";
    case FiredCriterion::F_omega: return "F_omega";
    case FiredCriterion::det_condition: return "det_condition";
    case FiredCriterion::delta_witness: return "delta_witness";
    case FiredCriterion::krein_index: return "krein_index";
  }
  return "unknown";
}

struct Prerequisites {
  bool h0_pass = false;
  bool h1_pass = false;
  /// Number of negative eigenvalues of L.
  int n_L = 0;
  /// (L^{-1} 1, 1) when computed from the operator; otherwise -M_A is used.
  std::optional<double> linv_one_one;
  /// D from the resolvent determinant, as a cross-check.
  std::optional<double> D_resolvent;
};

struct StabilityVerdict {
  SurfaceDerivatives sd;
  bool criterion_i = false;
  bool criterion_ii = false;
  bool criterion_iii = false;
  std::optional<DeltaWitness> delta_witness;
  std::optional<double> D;
  std::optional<int> K_Ham;
  Conclusion conclusion = Conclusion::inconclusive;
  FiredCriterion fired = FiredCriterion::none;
  /// Q'(phi) = mu + nu g for the fired criterion.
  double mu = 0.0;
  double nu = 0.0;
  Prerequisites prerequisites;
  std::string reason;
};

/// Sign count: 1 for a negative argument, 0 for a positive one.
inline int negative_count(double s) { return s < 0.0 ? 1 : 0; }

/// Decision from surface derivatives and prerequisite flags alone.
///
/// Precedence: M_A > 0, F_omega > 0, M_omega^2 - F_omega M_A > 0, then any
/// Delta witness. Failing those, the index
///   K_Ham = n(L) - n((L^{-1}1, 1)) - n(D),  D = (M_omega^2 - F_omega M_A) / M_A
/// is evaluated only when M_A < 0, F_omega < 0, M_omega^2 - F_omega M_A < 0
/// and n(L) = 1; K_Ham = 1 reports spectral instability.
inline StabilityVerdict verdict(const SurfaceDerivatives& sd, const Prerequisites& pre) {
  StabilityVerdict v;
  v.sd = sd;
  v.prerequisites = pre;
  const double det = sd.det_condition();
  v.criterion_i = sd.M_A > 0.0;
  v.criterion_ii = sd.F_omega > 0.0;
  v.criterion_iii = det > 0.0;
  v.delta_witness = find_delta_witness(sd);

  if (!pre.h0_pass || !pre.h1_pass) {
    v.reason = !pre.h0_pass ? "spectral hypothesis on L (one negative eigenvalue, simple kernel phi') failed"
                            : "Garding-type lower bound on L failed";
    return v;
  }
  if (v.criterion_i) {
    v.fired = FiredCriterion::M_A;
    v.mu = 1.0;
    v.nu = 0.0;
  } else if (v.criterion_ii) {
    v.fired = FiredCriterion::F_omega;
    v.mu = 0.0;
    v.nu = 1.0;
  } else if (v.criterion_iii && v.delta_witness) {
    v.fired = FiredCriterion::det_condition;
  } else if (v.delta_witness) {
    v.fired = FiredCriterion::delta_witness;
  }
  if (v.fired != FiredCriterion::none) {
    if (v.fired == FiredCriterion::det_condition || v.fired == FiredCriterion::delta_witness) {
      v.mu = v.delta_witness->a;
      v.nu = v.delta_witness->b;
    }
    v.conclusion = Conclusion::orbitally_stable;
    v.reason = "Delta(mu, nu) > 0";
    return v;
  }

  const bool premises = sd.M_A < 0.0 && sd.F_omega < 0.0 && det < 0.0 && pre.n_L == 1;
  if (!premises) {
    v.reason = "no criterion fired and the index premises do not hold";
    return v;
  }
  const double linv = pre.linv_one_one.value_or(-sd.M_A);
  v.D = det / sd.M_A;
  if (linv == 0.0 || *v.D == 0.0) {
    v.reason = "(L^{-1}1, 1) or D vanishes; index undefined";
    return v;
  }
  v.K_Ham = pre.n_L - negative_count(linv) - negative_count(*v.D);
  if (*v.K_Ham == 1) {
    v.conclusion = Conclusion::spectrally_unstable;
    v.fired = FiredCriterion::krein_index;
    v.reason = "K_Ham = 1 forces a real unstable eigenvalue";
  } else {
    v.reason = "K_Ham = " + std::to_string(*v.K_Ham);
  }
  return v;
}

/// Full pipeline verdict for a wave: prerequisites from the spectral report and
/// the Garding constants, (L^{-1}1, 1) and D from the resolvent.
inline StabilityVerdict verdict(const TravelingWave& w, const LinearizedOperator& lin,
                                const SurfaceDerivatives& sd, const SpectralReport& h0,
                                const H1Constants& h1) {
  Prerequisites pre;
  pre.h0_pass = h0.h0_pass;
  pre.h1_pass = h1.pass;
  pre.n_L = h0.n_neg;
  try {
    const auto r = resolvent_forms(w, lin, h0.zero_tol);
    pre.linv_one_one = -r.M_A;
    if (r.M_A != 0.0) pre.D_resolvent = r.det_condition() / r.M_A;
  } catch (const Error&) {
    // Kernel-incompatible right-hand side: leave the cross-checks empty.
  }
  return verdict(sd, pre);
}

struct MeanCriterion {
  double value;  ///< M(phi) - omega L
  bool fires;
  double mu;
  double nu;
};

/// For f(v) = v^2 / 2: orbital stability when int phi > omega L, using
/// Q' = omega - phi.
inline MeanCriterion mean_criterion(const TravelingWave& w) {
  if (!w.nonlinearity.is_kdv() || w.variant != Variant::standard) {
    throw NotApplicableError("mean criterion needs f(v) = v^2/2 in the standard equation");
  }
  const double value = mean(w.phi) - w.omega * w.grid().length();
  return {value, value > 0.0, w.omega, -1.0};
}

struct CurvePoint {
  double xi;
  double value;  ///< (L Phi, Phi) = -A' M' - omega' F'
  double mu;     ///< dA/dxi
  double nu;     ///< d omega/dxi
};

struct CurveCriterion {
  std::vector<CurvePoint> points;
  double max_value = 0.0;
  bool all_negative = false;
};

/// Central differences of omega, A, M(phi), F(phi) along a family at its
/// interior parameter values (non-uniform three-point stencil).
inline CurveCriterion curve_criterion(const WaveFamily& fam) {
  const std::size_t n = fam.size();
  if (n < 3) throw UsageError("curve criterion needs at least three family members");
  std::vector<double> om(n), A(n), M(n), F(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& w = fam.members[i];
    om[i] = w.omega;
    A[i] = w.A;
    M[i] = mean(w.phi);
    F[i] = momentum_F(w.phi, w.symbol, w.variant);
  }
  const auto& x = fam.parameter;
  CurveCriterion out;
  out.max_value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = x[i] - x[i - 1];
    const double h1 = x[i + 1] - x[i];
    auto d = [&](const std::vector<double>& y) {
      return (-h1 / (h0 * (h0 + h1))) * y[i - 1] + ((h1 - h0) / (h0 * h1)) * y[i] +
             (h0 / (h1 * (h0 + h1))) * y[i + 1];
    };
    const double dA = d(A);
    const double dw = d(om);
    const double val = -dA * d(M) - dw * d(F);
    out.points.push_back({x[i], val, dA, dw});
    out.max_value = std::max(out.max_value, val);
  }
  out.all_negative = out.max_value < 0.0;
  return out;
}

struct HamiltonianSpectrum {
  std::vector<std::complex<double>> eigenvalues;
  int k_r = 0;
  double re_tol = 0.0;
  double im_tol = 0.0;
  /// max over lambda of the distance from -lambda, conj(lambda), -conj(lambda)
  /// to the nearest eigenvalue, relative to the largest |lambda|.
  double quadruple_defect = 0.0;
  double max_abs_real = 0.0;
};

/// Eigenvalues of d/dx L and the count of real eigenvalues in the right half plane.
inline HamiltonianSpectrum hamiltonian_spectrum(const LinearizedOperator& lin,
                                                std::optional<double> re_tol = std::nullopt,
                                                std::optional<double> im_tol = std::nullopt) {
  if (lin.variant() != Variant::standard) {
    throw NotApplicableError("hamiltonian spectrum is defined for the standard equation");
  }
  const Eigen::MatrixXd A = derivative_matrix(lin.grid()) * lin.matrix();
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  if (es.info() != Eigen::Success) throw ConvergenceError("nonsymmetric eigensolver failed");
  HamiltonianSpectrum h;
  const double norm_L = lin.spectral_radius();
  h.re_tol = re_tol.value_or(1e-6 * norm_L);
  h.im_tol = im_tol.value_or(1e-6 * norm_L);
  const Eigen::VectorXcd ev = es.eigenvalues();
  h.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  double biggest = 0.0;
  for (const auto& l : h.eigenvalues) {
    biggest = std::max(biggest, std::abs(l));
    h.max_abs_real = std::max(h.max_abs_real, std::abs(l.real()));
    if (l.real() > h.re_tol && std::abs(l.imag()) < h.im_tol) ++h.k_r;
  }
  auto nearest = [&](std::complex<double> z) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& l : h.eigenvalues) best = std::min(best, std::abs(l - z));
    return best;
  };
  double defect = 0.0;
  for (const auto& l : h.eigenvalues) {
    defect = std::max({defect, nearest(-l), nearest(std::conj(l)), nearest(-std::conj(l))});
  }
  h.quadruple_defect = biggest > 0.0 ? defect / biggest : 0.0;
  return h;
}

}  // namespace periwave
