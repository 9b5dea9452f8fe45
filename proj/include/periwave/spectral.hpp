#pragma once

// Periodic grids, real fields sampled on them, Fourier multipliers and
// Sobolev norms.
//
// Fourier convention: u_hat(kappa) = (1/N) sum_j u_j exp(-2 pi i kappa j / N),
// stored in FFT order (index i <-> kappa = i for i < N/2, i - N otherwise;
// index N/2 is the Nyquist mode kappa = -N/2). With this scaling
// int_0^L |u|^2 dx = L sum_kappa |u_hat(kappa)|^2.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <string>
#include <utility>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "periwave/error.hpp"

namespace periwave {

class PeriodicGrid {
 public:
  PeriodicGrid(double length, int points) : length_(length), points_(points) {
    if (!(length > 0.0) || !std::isfinite(length)) {
      throw DomainError("grid period must be positive and finite");
    }
    if (points < 16 || points % 2 != 0) {
      throw DomainError("grid size must be even and >= 16, got " + std::to_string(points));
    }
  }

  double length() const noexcept { return length_; }
  int size() const noexcept { return points_; }
  double spacing() const noexcept { return length_ / points_; }
  double node(int j) const noexcept { return j * length_ / points_; }

  Eigen::VectorXd nodes() const {
    Eigen::VectorXd x(points_);
    for (int j = 0; j < points_; ++j) x[j] = node(j);
    return x;
  }

  /// Integer wavenumber stored at FFT index i.
  int wavenumber(int index) const noexcept {
    return index <= points_ / 2 ? index : index - points_;
  }

  /// 2 pi kappa / L
  double angular(int kappa) const noexcept {
    return 2.0 * std::numbers::pi * kappa / length_;
  }

  friend bool operator==(const PeriodicGrid&, const PeriodicGrid&) = default;

 private:
  double length_;
  int points_;
};

namespace detail {

inline Eigen::FFT<double>& fft_engine() {
  thread_local Eigen::FFT<double> engine;
  return engine;
}

/// Normalized forward transform of real samples.
inline Eigen::VectorXcd forward(const Eigen::VectorXd& values) {
  Eigen::VectorXcd out;
  fft_engine().fwd(out, values);
  out /= static_cast<double>(values.size());
  return out;
}

/// Inverse of `forward`; the input must be Hermitian.
inline Eigen::VectorXd inverse(const Eigen::VectorXcd& coeffs) {
  Eigen::VectorXcd scaled = coeffs * static_cast<double>(coeffs.size());
  Eigen::VectorXd out;
  fft_engine().inv(out, scaled);
  return out;
}

inline void require_same_grid(const PeriodicGrid& a, const PeriodicGrid& b) {
  if (!(a == b)) throw UsageError("fields live on different grids");
}

}  // namespace detail

/// Real samples on a periodic grid.
class Field {
 public:
  Field(PeriodicGrid grid, Eigen::VectorXd values)
      : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
      throw UsageError("field sample count does not match grid size");
    }
  }

  static Field zeros(const PeriodicGrid& grid) {
    return Field(grid, Eigen::VectorXd::Zero(grid.size()));
  }
  static Field constant(const PeriodicGrid& grid, double c) {
    return Field(grid, Eigen::VectorXd::Constant(grid.size(), c));
  }
  template <class Fn>
  static Field from_function(const PeriodicGrid& grid, Fn&& fn) {
    Eigen::VectorXd v(grid.size());
    for (int j = 0; j < grid.size(); ++j) v[j] = fn(grid.node(j));
    return Field(grid, std::move(v));
  }
  static Field from_spectrum(const PeriodicGrid& grid, const Eigen::VectorXcd& coeffs) {
    if (coeffs.size() != grid.size()) throw UsageError("spectrum size does not match grid");
    return Field(grid, detail::inverse(coeffs));
  }

  const PeriodicGrid& grid() const noexcept { return grid_; }
  const Eigen::VectorXd& values() const noexcept { return values_; }
  int size() const noexcept { return grid_.size(); }
  double operator[](int j) const { return values_[j]; }

  Eigen::VectorXcd spectrum() const { return detail::forward(values_); }

  /// Samples advanced by whole grid points: result_j = u_{j+g}.
  Field shifted(int g) const {
    const int n = size();
    Eigen::VectorXd v(n);
    for (int j = 0; j < n; ++j) v[j] = values_[((j + g) % n + n) % n];
    return Field(grid_, std::move(v));
  }

  /// Band-limited translate x -> u(x + r).
  Field translated(double r) const {
    Eigen::VectorXcd c = spectrum();
    const int n = size();
    for (int i = 0; i < n; ++i) {
      const int kappa = grid_.wavenumber(i);
      if (i == n / 2) {
        c[i] *= std::cos(grid_.angular(kappa) * r);
      } else {
        c[i] *= std::polar(1.0, grid_.angular(kappa) * r);
      }
    }
    return from_spectrum(grid_, c);
  }

  /// x -> u(-x)
  Field reflected() const {
    const int n = size();
    Eigen::VectorXd v(n);
    for (int j = 0; j < n; ++j) v[j] = values_[(n - j) % n];
    return Field(grid_, std::move(v));
  }

  double max_abs() const { return values_.cwiseAbs().maxCoeff(); }

  Field& operator+=(const Field& o) {
    detail::require_same_grid(grid_, o.grid_);
    values_ += o.values_;
    return *this;
  }
  Field& operator-=(const Field& o) {
    detail::require_same_grid(grid_, o.grid_);
    values_ -= o.values_;
    return *this;
  }
  Field& operator*=(double s) {
    values_ *= s;
    return *this;
  }
  Field& operator+=(double c) {
    values_.array() += c;
    return *this;
  }

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(Field a, double s) { return a *= s; }
  friend Field operator*(double s, Field a) { return a *= s; }
  friend Field operator+(Field a, double c) { return a += c; }
  friend Field operator-(Field a) { return a *= -1.0; }

  /// Pointwise product.
  friend Field pointwise(const Field& a, const Field& b) {
    detail::require_same_grid(a.grid_, b.grid_);
    return Field(a.grid_, a.values_.cwiseProduct(b.values_));
  }

  template <class Fn>
  Field map(Fn&& fn) const {
    Eigen::VectorXd v = values_.unaryExpr(std::forward<Fn>(fn));
    return Field(grid_, std::move(v));
  }

 private:
  PeriodicGrid grid_;
  Eigen::VectorXd values_;
};

enum class SymbolKind { second_derivative, hilbert_derivative, ilw, power, custom };

inline std::string to_string(SymbolKind k) {
  switch (k) {
    case SymbolKind::second_derivative: return "second_derivative";
    case SymbolKind::hilbert_derivative: return "hilbert_derivative";
    case SymbolKind::ilw: return "ilw";
    case SymbolKind::power: return "power";
    case SymbolKind::custom: return "custom";
  }
  return "unknown";
}

/// Growth constants: v1 |kappa|^m <= theta(kappa) <= v2 |kappa|^m for |kappa| >= kappa0.
struct SymbolBounds {
  double order = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  int kappa0 = 1;
};

/// Fourier multiplier theta(kappa) of the dispersive operator M.
///
/// Bounds are computed for the period passed to the factory. Symbols other
/// than the four built-in kinds go through `custom`, which takes theta as a
/// function of the angular wavenumber 2 pi kappa / L; it must be even.
class DispersionSymbol {
 public:
  using AngularFn = std::function<double(double)>;

  /// M = -d^2/dx^2
  static DispersionSymbol second_derivative(double period) {
    const double w = 2.0 * std::numbers::pi / period;
    return DispersionSymbol(SymbolKind::second_derivative, 0.0, {2.0, w * w, w * w, 1});
  }

  /// M = H d/dx (Benjamin-Ono)
  static DispersionSymbol hilbert_derivative(double period) {
    const double w = 2.0 * std::numbers::pi / period;
    return DispersionSymbol(SymbolKind::hilbert_derivative, 0.0, {1.0, w, w, 1});
  }

  /// M = T_delta d/dx - 1/delta (intermediate long wave).
  static DispersionSymbol ilw(double delta, double period) {
    if (!(delta > 0.0)) throw DomainError("ilw depth delta must be positive");
    const double w = 2.0 * std::numbers::pi / period;
    // delta > L / (kappa0 pi) makes 2 pi / L - 2 / (kappa0 delta) positive.
    const int kappa0 = static_cast<int>(std::ceil(period / (std::numbers::pi * delta))) + 1;
    const double margin = w - 2.0 / (kappa0 * delta);
    return DispersionSymbol(SymbolKind::ilw, delta, {1.0, 0.99 * margin, w, kappa0});
  }

  /// theta = |2 pi kappa / L|^m
  static DispersionSymbol power(double m, double period) {
    if (!(m > 0.0)) throw DomainError("power symbol order must be positive");
    const double w = std::pow(2.0 * std::numbers::pi / period, m);
    return DispersionSymbol(SymbolKind::power, m, {m, w, w, 1});
  }

  static DispersionSymbol custom(std::string name, AngularFn theta, SymbolBounds bounds) {
    DispersionSymbol s(SymbolKind::custom, 0.0, bounds);
    s.name_ = std::move(name);
    s.custom_ = std::move(theta);
    return s;
  }

  SymbolKind kind() const noexcept { return kind_; }
  /// delta for ilw, m for power, 0 otherwise.
  double parameter() const noexcept { return parameter_; }
  const SymbolBounds& bounds() const noexcept { return bounds_; }
  double order() const noexcept { return bounds_.order; }
  std::string name() const { return kind_ == SymbolKind::custom ? name_ : to_string(kind_); }

  double value(int kappa, double period) const {
    const double xi = 2.0 * std::numbers::pi * kappa / period;
    switch (kind_) {
      case SymbolKind::second_derivative: return xi * xi;
      case SymbolKind::hilbert_derivative: return std::abs(xi);
      case SymbolKind::power: return std::pow(std::abs(xi), parameter_);
      case SymbolKind::ilw: return ilw_value(std::abs(xi), parameter_);
      case SymbolKind::custom: return custom_(xi);
    }
    return 0.0;
  }

 private:
  DispersionSymbol(SymbolKind kind, double parameter, SymbolBounds bounds)
      : kind_(kind), parameter_(parameter), bounds_(bounds) {}

  // xi coth(xi delta) - 1/delta for xi >= 0; theta(0) = 0 by continuity.
  static double ilw_value(double xi, double delta) {
    if (xi == 0.0) return 0.0;
    const double x = xi * delta;
    if (x < 1e-2) {
      // x coth x - 1 = x^2/3 - x^4/45 + 2 x^6/945 - x^8/4725 + ...
      const double x2 = x * x;
      return x2 * (1.0 / 3.0 - x2 * (1.0 / 45.0 - x2 * (2.0 / 945.0 - x2 / 4725.0))) / delta;
    }
    // coth x = 1 + 2 / (e^{2x} - 1)
    return xi * (1.0 + 2.0 / std::expm1(2.0 * x)) - 1.0 / delta;
  }

  SymbolKind kind_;
  double parameter_;
  SymbolBounds bounds_;
  std::string name_;
  AngularFn custom_;
};

inline double symbol_value(const DispersionSymbol& s, int kappa, double period) {
  return s.value(kappa, period);
}

/// theta sampled in FFT order. The Nyquist slot holds theta(N/2).
inline Eigen::VectorXd symbol_table(const DispersionSymbol& s, const PeriodicGrid& grid) {
  const int n = grid.size();
  Eigen::VectorXd t(n);
  for (int i = 0; i < n; ++i) t[i] = s.value(std::abs(grid.wavenumber(i)), grid.length());
  return t;
}

/// Applies a diagonal Fourier multiplier given in FFT order.
inline Field apply_diagonal(const Eigen::VectorXd& table, const Field& u) {
  if (table.size() != u.size()) throw UsageError("multiplier table does not match grid");
  Eigen::VectorXcd c = u.spectrum();
  c.array() *= table.array();
  return Field::from_spectrum(u.grid(), c);
}

/// (Mu)^ = theta u^. The even cosine Nyquist mode keeps theta(N/2).
inline Field apply_multiplier(const DispersionSymbol& s, const Field& u) {
  return apply_diagonal(symbol_table(s, u.grid()), u);
}

/// Spectral d/dx; the Nyquist mode is dropped.
inline Field derivative(const Field& u) {
  const auto& g = u.grid();
  Eigen::VectorXcd c = u.spectrum();
  const int n = g.size();
  for (int i = 0; i < n; ++i) {
    c[i] = (i == n / 2) ? std::complex<double>(0.0)
                        : std::complex<double>(0.0, g.angular(g.wavenumber(i))) * c[i];
  }
  return Field::from_spectrum(g, c);
}

/// int_0^L u dx (trapezoid, exact for band-limited fields).
inline double mean(const Field& u) { return u.grid().spacing() * u.values().sum(); }

/// int_0^L u v dx
inline double inner(const Field& u, const Field& v) {
  detail::require_same_grid(u.grid(), v.grid());
  return u.grid().spacing() * u.values().dot(v.values());
}

/// (1 + (2 pi kappa / L)^2)^s in FFT order.
inline Eigen::VectorXd sobolev_weights(const PeriodicGrid& g, double s) {
  const int n = g.size();
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) {
    const double xi = g.angular(g.wavenumber(i));
    w[i] = std::pow(1.0 + xi * xi, s);
  }
  return w;
}

/// (u, v)_s in H^s_per, scaled so that s = 0 is the L^2 inner product.
inline double sobolev_inner(const Field& u, const Field& v, double s) {
  detail::require_same_grid(u.grid(), v.grid());
  const Eigen::VectorXd w = sobolev_weights(u.grid(), s);
  const Eigen::VectorXcd a = u.spectrum();
  const Eigen::VectorXcd b = v.spectrum();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) acc += w[i] * std::real(a[i] * std::conj(b[i]));
  return u.grid().length() * acc;
}

inline double sobolev_norm(const Field& u, double s) {
  if (!(s >= 0.0)) throw DomainError("sobolev_norm requires s >= 0");
  return std::sqrt(std::max(0.0, sobolev_inner(u, u, s)));
}

/// Dense N x N collocation matrix of a diagonal multiplier (circulant, symmetric
/// when the table is even).
inline Eigen::MatrixXd multiplier_matrix(const Eigen::VectorXd& table, const PeriodicGrid& g) {
  const int n = g.size();
  Eigen::VectorXcd c = table.cast<std::complex<double>>();
  // kernel_d = (1/N) sum_kappa theta(kappa) exp(2 pi i kappa d / N)
  const Eigen::VectorXd kernel = detail::inverse(c) / static_cast<double>(n);
  Eigen::MatrixXd m(n, n);
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < n; ++l) m(j, l) = kernel[((j - l) % n + n) % n];
  return m;
}

inline Eigen::MatrixXd multiplier_matrix(const DispersionSymbol& s, const PeriodicGrid& g) {
  return multiplier_matrix(symbol_table(s, g), g);
}

/// Dense spectral differentiation matrix (Nyquist dropped); skew-symmetric.
inline Eigen::MatrixXd derivative_matrix(const PeriodicGrid& g) {
  const int n = g.size();
  Eigen::MatrixXd d(n, n);
  for (int l = 0; l < n; ++l) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e[l] = 1.0;
    d.col(l) = derivative(Field(g, e)).values();
  }
  return d;
}

/// Largest |u_hat| over the last octave of modes relative to the largest |u_hat|.
inline double spectral_tail(const Field& u) {
  const Eigen::VectorXcd c = u.spectrum();
  const auto& g = u.grid();
  double peak = 0.0;
  double tail = 0.0;
  for (int i = 0; i < g.size(); ++i) {
    const double a = std::abs(c[i]);
    peak = std::max(peak, a);
    if (std::abs(g.wavenumber(i)) >= g.size() / 4) tail = std::max(tail, a);
  }
  return peak > 0.0 ? tail / peak : 0.0;
}

struct SymbolBoundsReport {
  double order = 0.0;
  int kappa0 = 0;
  int kappa_max = 0;
  /// min / max of theta(kappa) / |kappa|^m over kappa0 <= |kappa| <= N/2
  double tight_lower = 0.0;
  double tight_upper = 0.0;
  bool even = true;
  bool pass = false;
};

/// Enumerates kappa0 <= |kappa| <= N/2 and checks the stored growth bounds.
inline SymbolBoundsReport verify_symbol_bounds(const DispersionSymbol& s, const PeriodicGrid& g) {
  const auto& b = s.bounds();
  SymbolBoundsReport r;
  r.order = b.order;
  r.kappa0 = std::max(b.kappa0, 1);
  r.kappa_max = g.size() / 2;
  r.tight_lower = std::numeric_limits<double>::infinity();
  r.tight_upper = -std::numeric_limits<double>::infinity();
  for (int k = 1; k <= r.kappa_max; ++k) {
    const double tp = s.value(k, g.length());
    const double tm = s.value(-k, g.length());
    if (std::abs(tp - tm) > 1e-14 * std::max(1.0, std::abs(tp))) r.even = false;
    if (k < r.kappa0) continue;
    const double ratio = tp / std::pow(static_cast<double>(k), b.order);
    r.tight_lower = std::min(r.tight_lower, ratio);
    r.tight_upper = std::max(r.tight_upper, ratio);
  }
  if (r.kappa0 > r.kappa_max) {
    r.pass = false;
    return r;
  }
  constexpr double rel = 1e-12;
  r.pass = r.even && b.lower > 0.0 && b.upper > 0.0 &&
           b.lower <= r.tight_lower * (1.0 + rel) && b.upper >= r.tight_upper * (1.0 - rel);
  return r;
}

}  // namespace periwave
