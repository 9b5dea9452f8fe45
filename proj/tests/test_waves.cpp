#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include <boost/math/special_functions/ellint_1.hpp>
#include <boost/math/special_functions/ellint_2.hpp>
#include <boost/math/special_functions/jacobi_elliptic.hpp>

#include "periwave/waves.hpp"
#include "support.hpp"

using namespace periwave;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using testsupport::two_pi;

namespace {

// Cnoidal profile from Boost's elliptic functions; shares no code with the library.
Field boost_cnoidal(const PeriodicGrid& g, double k) {
  const double K = boost::math::ellint_1(k);
  const double E = boost::math::ellint_2(k);
  const double lam = 2 * K / g.length();
  return Field::from_function(g, [&](double x) {
    // Boost's jacobi_dn loses about four digits at u = K; sn is accurate there.
    const double sn = boost::math::jacobi_sn(k, lam * x);
    return 12 * lam * lam * (1 - k * k * sn * sn - E / K);
  });
}

}  // namespace

TEST_CASE("constant states have zero residual", "[waves]") {
  const PeriodicGrid g(two_pi, 32);
  for (const auto& s : {DispersionSymbol::second_derivative(two_pi), DispersionSymbol::ilw(1.0, two_pi)}) {
    const auto w = constant_state(g, 0.7, 1.3, s, Nonlinearity::power(2));
    CHECK(w.residual_norm < 1e-14);
    const auto r = constant_state(g, 0.7, 1.3, s, Nonlinearity::power(1), Variant::regularized);
    CHECK(r.residual_norm < 1e-14);
  }
}

TEST_CASE("cnoidal closed form", "[waves]") {
  const double L = two_pi;
  for (double k : {0.3, 0.6, 0.9}) {
    const auto w = cnoidal_wave(L, elliptic::EllipticModulus(k), 256);
    CHECK(w.residual_norm < 1e-9);
    CHECK(std::abs(mean(w.phi)) < 1e-12);
    CHECK((w.phi - boost_cnoidal(w.grid(), k)).max_abs() < 1e-11 * w.phi.max_abs());
    // A = (1/2L) int phi^2 on the zero-mean branch.
    CHECK_THAT(w.A, WithinRel(inner(w.phi, w.phi) / (2 * L), 1e-12));
  }
  CHECK(cnoidal_wave(L, elliptic::EllipticModulus(1e-4), 64).phi.max_abs() < 1e-7);
  CHECK(cnoidal_wave(L, elliptic::EllipticModulus(1e-2), 64).phi.max_abs() <
        cnoidal_wave(L, elliptic::EllipticModulus(1e-1), 64).phi.max_abs());
}

TEST_CASE("cnoidal speed inversion round trips", "[waves]") {
  const double L = 10.0;
  for (double k : {0.2, 0.7, 0.95}) {
    const double omega = cnoidal_parameters(L, elliptic::EllipticModulus(k)).omega;
    CHECK_THAT(cnoidal_modulus_for_speed(L, omega).k(), WithinAbs(k, 1e-10));
  }
  CHECK_THROWS_AS(cnoidal_modulus_for_speed(L, -1.0), DomainError);
}

TEST_CASE("residual responds linearly to small perturbations", "[waves]") {
  const auto w = cnoidal_wave(two_pi, elliptic::EllipticModulus(0.6), 128);
  const Field c = Field::from_function(w.grid(), [](double x) { return std::cos(x); });
  auto change = [&](double eps) {
    return (residual(w.phi + eps * c, w.omega, w.A, w.symbol, w.nonlinearity, w.variant) - residual(w)).max_abs();
  };
  const double r1 = change(1e-4);
  const double r2 = change(2e-4);
  CHECK(r1 > 0.0);
  CHECK_THAT(r2 / r1, WithinAbs(2.0, 1e-3));
}

TEST_CASE("newton recovers the cnoidal wave from a noisy guess", "[waves]") {
  const auto exact = cnoidal_wave(two_pi, elliptic::EllipticModulus(0.9), 256);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 1e-3);
  Eigen::VectorXd noise(256);
  for (auto& v : noise) v = n(rng);
  Field pert(exact.grid(), noise);
  const Field guess = exact.phi + 0.5 * (pert + pert.reflected());
  const auto w = solve_newton(guess, exact.omega, Constraint::zero_mean(), exact.symbol, exact.nonlinearity);
  CHECK((w.phi - exact.phi).max_abs() < 1e-8);
  CHECK(std::abs(mean(w.phi)) < 1e-12);
  CHECK_THAT(w.A, WithinRel(exact.A, 1e-9));
  CHECK(w.residual_norm <= 1e-10);
  CHECK(w.history.size() >= 2);
}

TEST_CASE("newton near the bifurcation speed follows the first harmonic", "[waves]") {
  const double L = two_pi;
  const PeriodicGrid g(L, 64);
  const auto s = DispersionSymbol::second_derivative(L);
  const auto nl = Nonlinearity::power(1);
  const double wb = bifurcation_speed(g, 0.0, s, nl);
  CHECK_THAT(wb, WithinAbs(-1.0, 1e-15));
  const double omega = wb + 0.01;
  const Field guess = stokes_guess(g, s, nl, 0.0, omega);
  const auto w = solve_newton(guess, omega, Constraint::zero_mean(), s, nl);
  const Eigen::VectorXcd c = w.phi.spectrum();
  // Stokes oracle to first order: amplitude of cos x is 2 |c_1| ~ a, others O(a^2).
  const double a1 = 2 * std::abs(c[1]);
  const double a_pred = (guess.values().maxCoeff() - guess.values().minCoeff()) / 2;
  CHECK_THAT(a1, WithinRel(a_pred, 0.05));
  for (int k = 2; k < 32; ++k) CHECK(std::abs(c[k]) < 0.1 * std::abs(c[1]));
  CHECK_THROWS_AS(solve_newton(Field::constant(g, 0.1), omega, Constraint::zero_mean(), s, nl), UsageError);
  CHECK_THROWS_AS(stokes_guess(g, s, nl, 0.0, wb - 0.01), DomainError);
}

TEST_CASE("newton below the bifurcation speed collapses to the constant state", "[waves]") {
  const PeriodicGrid g(two_pi, 64);
  const auto s = DispersionSymbol::second_derivative(two_pi);
  const Field guess = Field::from_function(g, [](double x) { return 0.05 * std::cos(x); });
  CHECK_THROWS_AS(solve_newton(guess, -1.2, Constraint::zero_mean(), s, Nonlinearity::power(1)),
                  DegenerateBranchError);
}

TEST_CASE("ilw closed form", "[waves]") {
  const double L = two_pi;
  for (double delta : {0.5, 1.0, 2.0}) {
    const auto w = ilw_wave(L, delta, elliptic::EllipticModulus(0.5), 128);
    CHECK(w.residual_norm < 1e-8);
    CHECK((w.phi - w.phi.reflected()).max_abs() < 1e-12);
    CHECK(std::abs(mean(w.phi)) < 1e-12);
    double imag = 0.0;
    const Eigen::VectorXcd c = w.phi.spectrum();
    for (int i = 0; i < c.size(); ++i) imag = std::max(imag, std::abs(c[i].imag()));
    CHECK(imag < 1e-14 * w.phi.max_abs());
  }
  CHECK_THROWS_AS(ilw_wave(L, 50.0, elliptic::EllipticModulus(0.5), 128), DomainError);
}

TEST_CASE("continuation along speed on the zero-mean cnoidal branch", "[waves]") {
  const double L = two_pi;
  const auto seed = cnoidal_wave(L, elliptic::EllipticModulus(0.6), 128);
  std::vector<double> speeds;
  for (int i = 0; i < 10; ++i) speeds.push_back(seed.omega + 0.05 * i);
  const auto fam = continue_family(seed, ContinuationParameter::omega(), speeds, Constraint::zero_mean());
  REQUIRE(fam.size() == 10);
  double prev_amp = 0.0;
  for (std::size_t i = 0; i < fam.size(); ++i) {
    const auto& w = fam.members[i];
    CHECK(residual(w).max_abs() < 1e-8);
    // Oracle: the closed form at the modulus with the same speed.
    const auto ref = cnoidal_wave(L, cnoidal_modulus_for_speed(L, speeds[i]), 128);
    CHECK((w.phi - ref.phi).max_abs() < 1e-7 * ref.phi.max_abs());
    const double amp = w.phi.values().maxCoeff() - w.phi.values().minCoeff();
    CHECK(amp > prev_amp);
    prev_amp = amp;
  }

  const auto single = continue_family(seed, ContinuationParameter::omega(), {seed.omega}, Constraint::zero_mean());
  REQUIRE(single.size() == 1);
  CHECK((single.members[0].phi - seed.phi).max_abs() < 1e-9);
}

TEST_CASE("continuation in A at fixed speed and along a xi map", "[waves]") {
  const auto seed = cnoidal_wave(two_pi, elliptic::EllipticModulus(0.6), 64);
  const auto famA = continue_family(seed, ContinuationParameter::A(), {seed.A, seed.A * 1.01, seed.A * 1.02},
                                    Constraint::fixed_A(seed.A));
  REQUIRE(famA.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(famA.members[i].omega == seed.omega);
    CHECK_THAT(famA.members[i].A, WithinRel(famA.parameter[i], 1e-15));
    CHECK(residual(famA.members[i]).max_abs() < 1e-9);
  }
  const double w0 = seed.omega;
  const double A0 = seed.A;
  const auto famX = continue_family(
      seed, ContinuationParameter::xi([=](double x) { return w0 + 0.1 * x; }, [=](double x) { return A0 + 0.05 * x; }),
      {0.0, 0.5, 1.0}, Constraint::fixed_A(A0));
  REQUIRE(famX.size() == 3);
  CHECK_THAT(famX.members[2].omega, WithinRel(w0 + 0.1, 1e-15));

  const auto partial = continue_family_partial(seed, ContinuationParameter::omega(), {seed.omega, -1.5},
                                               Constraint::zero_mean());
  CHECK(partial.family.size() == 1);
  REQUIRE(partial.error.has_value());
  CHECK(partial.error->parameter() == -1.5);
  CHECK_THROWS_AS(continue_family(seed, ContinuationParameter::omega(), {seed.omega, -1.5}, Constraint::zero_mean()),
                  ContinuationError);
}

TEST_CASE("stokes seed solves at fixed mean for gKdV and BO", "[waves]") {
  const double L = two_pi;
  const PeriodicGrid g(L, 64);
  {
    const auto s = DispersionSymbol::second_derivative(L);
    const auto nl = Nonlinearity::power(3);
    const double c = 1.5;
    const double omega = bifurcation_speed(g, c, s, nl) + 0.05;
    const auto w = solve_newton(stokes_guess(g, s, nl, c, omega), omega, Constraint::fixed_mean(c * L), s, nl);
    CHECK_THAT(mean(w.phi), WithinRel(c * L, 1e-12));
    CHECK(w.residual_norm <= 1e-10);
  }
  {
    const auto s = DispersionSymbol::hilbert_derivative(L);
    const auto nl = Nonlinearity::power(1);
    const auto w = solve_newton(stokes_guess(g, s, nl, 0.0, -0.8), -0.8, Constraint::zero_mean(), s, nl);
    CHECK(w.residual_norm <= 1e-10);
  }
  {
    // BBM-like regularized equation: small waves exist for omega above 1/2.
    const auto s = DispersionSymbol::second_derivative(L);
    const auto nl = Nonlinearity::power(1);
    CHECK_THAT(bifurcation_speed(g, 0.0, s, nl, Variant::regularized), WithinAbs(0.5, 1e-15));
    NewtonOptions opt;
    opt.variant = Variant::regularized;
    const auto w = solve_newton(stokes_guess(g, s, nl, 0.0, 0.6, Variant::regularized), 0.6,
                                Constraint::zero_mean(), s, nl, opt);
    CHECK(w.residual_norm <= 1e-10);
    CHECK(w.variant == Variant::regularized);
  }
}

TEST_CASE("nonlinearity derivatives are consistent", "[waves]") {
  for (int p : {1, 2, 3}) {
    const auto nl = Nonlinearity::power(p, 1.5);
    const double u = 0.8;
    const double h = 1e-5;
    CHECK_THAT(nl.df(u), WithinRel((nl.f(u + h) - nl.f(u - h)) / (2 * h), 1e-8));
    CHECK_THAT(nl.f(u), WithinRel((nl.W(u + h) - nl.W(u - h)) / (2 * h), 1e-8));
  }
  CHECK_THROWS_AS(Nonlinearity::power(0), DomainError);
}
