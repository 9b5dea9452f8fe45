#pragma once

// The linearized operator L = a_M M + a_0 - f'(phi) about a traveling wave,
// its spectrum, the spectral hypotheses checked on it, and solves restricted
// to the complement of its kernel.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "periwave/error.hpp"
#include "periwave/spectral.hpp"
#include "periwave/waves.hpp"

namespace periwave {

class LinearizedOperator {
 public:
  static LinearizedOperator assemble(const TravelingWave& w) { return assemble(w, w.variant); }

  static LinearizedOperator assemble(const TravelingWave& w, Variant variant) {
    const PeriodicGrid& g = w.grid();
    const auto [aM, a0] = coefficients(variant, w.omega);
    Eigen::VectorXd potential = Eigen::VectorXd::Constant(g.size(), a0) - w.nonlinearity.df(w.phi).values();
    Eigen::MatrixXd m = aM * multiplier_matrix(w.symbol, g);
    m.diagonal() += potential;
    m = 0.5 * (m + m.transpose()).eval();
    return LinearizedOperator(g, variant, aM, symbol_table(w.symbol, g), std::move(potential),
                              std::move(m));
  }

  const PeriodicGrid& grid() const noexcept { return grid_; }
  Variant variant() const noexcept { return variant_; }
  const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }
  /// Ascending.
  const Eigen::VectorXd& eigenvalues() const noexcept { return eigenvalues_; }
  /// Orthonormal columns (Euclidean), matching `eigenvalues`.
  const Eigen::MatrixXd& eigenvectors() const noexcept { return eigenvectors_; }
  double spectral_radius() const noexcept { return eigenvalues_.cwiseAbs().maxCoeff(); }
  /// Default kernel band: 1e-8 max |lambda|.
  double default_zero_tol() const noexcept { return 1e-8 * spectral_radius(); }
  /// Coefficient of M in L.
  double multiplier_coefficient() const noexcept { return a_M_; }

  /// Matrix-free action through the FFT.
  Field apply(const Field& v) const {
    detail::require_same_grid(grid_, v.grid());
    Field out = a_M_ * apply_diagonal(table_, v);
    return out + Field(grid_, potential_.cwiseProduct(v.values()));
  }

  Field eigenfunction(int i) const { return Field(grid_, eigenvectors_.col(i)); }

 private:
  LinearizedOperator(PeriodicGrid g, Variant variant, double aM, Eigen::VectorXd table,
                     Eigen::VectorXd potential, Eigen::MatrixXd m)
      : grid_(g), variant_(variant), a_M_(aM), table_(std::move(table)),
        potential_(std::move(potential)), matrix_(std::move(m)) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(matrix_);
    if (es.info() != Eigen::Success) throw ConvergenceError("symmetric eigensolver failed");
    eigenvalues_ = es.eigenvalues();
    eigenvectors_ = es.eigenvectors();
  }

  PeriodicGrid grid_;
  Variant variant_;
  double a_M_;
  Eigen::VectorXd table_;
  Eigen::VectorXd potential_;
  Eigen::MatrixXd matrix_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenvectors_;
};

inline LinearizedOperator assemble(const TravelingWave& w) { return LinearizedOperator::assemble(w); }
inline LinearizedOperator assemble(const TravelingWave& w, Variant v) {
  return LinearizedOperator::assemble(w, v);
}

struct SpectralReport {
  int n_neg = 0;
  int zero_dim = 0;
  int n_pos = 0;
  double kernel_alignment = 0.0;
  bool h0_pass = false;
  double zero_tol = 0.0;
  /// Some eigenvalue lies within 10 zero_tol of zero but outside the band.
  bool ambiguous = false;
  std::vector<double> lowest;  ///< up to five smallest eigenvalues
};

inline double resolve_zero_tol(const LinearizedOperator& lin, std::optional<double> zero_tol) {
  const double t = zero_tol.value_or(lin.default_zero_tol());
  if (!(t > 0.0)) throw DomainError("zero_tol must be positive");
  return t;
}

/// Counts negative and zero eigenvalues and compares the zero mode with phi'.
inline SpectralReport check_H0(const LinearizedOperator& lin, const TravelingWave& w,
                               std::optional<double> zero_tol = std::nullopt) {
  SpectralReport r;
  r.zero_tol = resolve_zero_tol(lin, zero_tol);
  const Eigen::VectorXd& ev = lin.eigenvalues();
  int zero_index = -1;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    const double l = ev[i];
    if (l < -r.zero_tol) {
      ++r.n_neg;
    } else if (l <= r.zero_tol) {
      ++r.zero_dim;
      if (zero_index < 0 || std::abs(l) < std::abs(ev[zero_index])) zero_index = static_cast<int>(i);
    } else {
      ++r.n_pos;
    }
    if (std::abs(l) > r.zero_tol && std::abs(l) <= 10.0 * r.zero_tol) r.ambiguous = true;
  }
  for (Eigen::Index i = 0; i < std::min<Eigen::Index>(5, ev.size()); ++i) r.lowest.push_back(ev[i]);
  if (zero_index >= 0) {
    const Eigen::VectorXd dphi = derivative(w.phi).values();
    const double nd = dphi.norm();
    const Eigen::VectorXd v0 = lin.eigenvectors().col(zero_index);
    r.kernel_alignment = nd > 0.0 ? std::abs(v0.dot(dphi)) / (v0.norm() * nd) : 0.0;
  }
  r.h0_pass = r.n_neg == 1 && r.zero_dim == 1 && r.kernel_alignment > 1.0 - 1e-6;
  return r;
}

struct H1Constants {
  double c1 = 0.0;
  double c2 = 0.0;
  bool pass = false;
};

/// Garding-type bound (Lv, v) >= c1 ||v||^2_{m/2} - c2 ||v||^2 with c1 fixed at
/// half the symbol's lower growth constant (scaled by the coefficient of M).
inline H1Constants h1_constants(const LinearizedOperator& lin, const DispersionSymbol& s) {
  H1Constants h;
  h.c1 = 0.5 * lin.multiplier_coefficient() * s.bounds().lower;
  if (!(h.c1 > 0.0)) return h;
  const Eigen::MatrixXd weight = multiplier_matrix(sobolev_weights(lin.grid(), 0.5 * s.order()), lin.grid());
  Eigen::MatrixXd shifted = lin.matrix() - h.c1 * weight;
  shifted = 0.5 * (shifted + shifted.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(shifted, Eigen::EigenvaluesOnly);
  h.c2 = std::max(0.0, -es.eigenvalues()[0]);
  h.pass = std::isfinite(h.c2);
  return h;
}

struct RayleighMinimum {
  double value;
  Field argmin;
};

/// min (Lv, v) / (v, v) over v orthogonal to every constraint field.
inline RayleighMinimum constrained_min_rayleigh(const LinearizedOperator& lin,
                                                const std::vector<Field>& constraints) {
  const int n = lin.grid().size();
  const int k = static_cast<int>(constraints.size());
  if (k == 0) return {lin.eigenvalues()[0], lin.eigenfunction(0)};
  if (k >= n) throw UsageError("too many constraints for the grid");
  Eigen::MatrixXd C(n, k);
  for (int i = 0; i < k; ++i) {
    detail::require_same_grid(lin.grid(), constraints[static_cast<std::size_t>(i)].grid());
    C.col(i) = constraints[static_cast<std::size_t>(i)].values();
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(C);
  qr.setThreshold(1e-10);
  if (qr.rank() < k) throw UsageError("constraint fields are linearly dependent");
  const Eigen::MatrixXd Q = qr.householderQ();
  const Eigen::MatrixXd Z = Q.rightCols(n - k);
  Eigen::MatrixXd P = Z.transpose() * lin.matrix() * Z;
  P = 0.5 * (P + P.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P);
  return {es.eigenvalues()[0], Field(lin.grid(), Z * es.eigenvectors().col(0))};
}

/// Solves L x = b with x orthogonal to the numerical kernel.
///
/// A right-hand side lying in the kernel (to 1e-6 relative) returns zero; one
/// with a kernel component above 1e-8 ||b|| otherwise is rejected.
inline Field solve_on_complement(const LinearizedOperator& lin, const Field& b,
                                 std::optional<double> zero_tol = std::nullopt) {
  detail::require_same_grid(lin.grid(), b.grid());
  const double tol = resolve_zero_tol(lin, zero_tol);
  const Eigen::VectorXd& ev = lin.eigenvalues();
  const Eigen::MatrixXd& V = lin.eigenvectors();
  const Eigen::VectorXd coeff = V.transpose() * b.values();
  const double bn = b.values().norm();
  if (bn == 0.0) return Field::zeros(lin.grid());

  double kernel2 = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (std::abs(ev[i]) <= tol) kernel2 += coeff[i] * coeff[i];
  const double kernel = std::sqrt(kernel2);
  const double rest = std::sqrt(std::max(0.0, bn * bn - kernel2));
  if (kernel > 1e-8 * bn) {
    if (rest <= 1e-6 * bn) return Field::zeros(lin.grid());
    throw IncompatibilityError("right-hand side has a kernel component of relative size " +
                               std::to_string(kernel / bn));
  }
  Eigen::VectorXd y = Eigen::VectorXd::Zero(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (std::abs(ev[i]) > tol) y[i] = coeff[i] / ev[i];
  return Field(lin.grid(), V * y);
}

struct ParamDerivatives {
  Field eta;   ///< d phi / d omega
  Field beta;  ///< d phi / d A
};

/// Solves L eta = -d_omega(residual) and L beta = -1 on the kernel complement.
inline ParamDerivatives param_derivatives(const TravelingWave& w, const LinearizedOperator& lin,
                                          std::optional<double> zero_tol = std::nullopt) {
  const double tol = resolve_zero_tol(lin, zero_tol);
  const Eigen::VectorXd& ev = lin.eigenvalues();
  int kernel = 0;
  double smallest = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (std::abs(ev[i]) <= tol) {
      ++kernel;
    } else {
      smallest = std::min(smallest, std::abs(ev[i]));
    }
  }
  if (kernel > 1) throw NearSingularError("kernel of L is not simple");
  if (smallest <= 10.0 * tol) {
    throw NearSingularError("eigenvalue " + std::to_string(smallest) + " too close to the kernel band");
  }
  Field eta = solve_on_complement(lin, -omega_derivative(w), tol);
  Field beta = solve_on_complement(lin, Field::constant(w.grid(), -1.0), tol);
  return {std::move(eta), std::move(beta)};
}

}  // namespace periwave
