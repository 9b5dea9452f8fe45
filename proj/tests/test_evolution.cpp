#include <catch_amalgamated.hpp>

#include <cmath>

#include "periwave/evolution.hpp"
#include "support.hpp"

using namespace periwave;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using testsupport::random_field;
using testsupport::two_pi;

namespace {

const TravelingWave& cnoidal09() {
  static const TravelingWave w = cnoidal_wave(two_pi, elliptic::EllipticModulus(0.9), 128);
  return w;
}

// Lyapunov parameters from the certified verdict of `w`.
LyapunovParams certified_params(const TravelingWave& w) {
  const auto lin = assemble(w);
  const auto sd = surface_derivatives(w, param_derivatives(w, lin));
  const auto v = verdict(w, lin, sd, check_H0(lin, w), h1_constants(lin, w.symbol));
  REQUIRE(v.conclusion == Conclusion::orbitally_stable);
  const auto sg = lyapunov_sigma(w, lin, v.mu, v.nu);
  return {sg.sigma, v.mu, v.nu};
}

double error_at_one(const TravelingWave& w, double dt, Integrator integ) {
  EvolutionConfig c;
  c.dt = dt;
  c.T = 1.0;
  c.integrator = integ;
  c.variant = w.variant;
  const auto tr = integrate(w.phi, c, w.symbol, w.nonlinearity);
  return (tr.states.back() - w.phi.translated(-w.omega)).max_abs();
}

}  // namespace

TEST_CASE("conserved quantities on simple fields", "[evolution]") {
  const double L = two_pi;
  const PeriodicGrid g(L, 32);
  const auto s = DispersionSymbol::second_derivative(L);
  const auto nl = Nonlinearity::power(1);
  const Field zero = Field::zeros(g);
  CHECK(conserved_P(zero, s, nl) == 0.0);
  CHECK(conserved_F(zero, s, Variant::standard) == 0.0);
  CHECK(conserved_M(zero) == 0.0);
  // u = 1: the dispersive term vanishes and W(1) = 1/6.
  CHECK_THAT(conserved_P(Field::constant(g, 1.0), s, nl), WithinRel(-L / 6, 1e-14));
  const Field u = random_field(g, 4);
  CHECK_THAT(conserved_F(u, s, Variant::standard), WithinRel(0.5 * std::pow(sobolev_norm(u, 0.0), 2), 1e-12));
  // The padded quadrature of W is exact for band-limited fields.
  const Field c = Field::from_function(g, [](double x) { return std::cos(x); });
  CHECK_THAT(integral_W(c, Nonlinearity::power(2)), WithinRel(3 * std::numbers::pi / 4 / 12, 1e-13));
}

TEST_CASE("a solved wave is a critical point of G", "[evolution]") {
  const auto& w = cnoidal09();
  const double eps = 1e-4;
  for (unsigned seed : {1u, 2u, 3u}) {
    const Field v = random_field(w.grid(), seed);
    const double dG = (constrained_energy_G(w.phi + eps * v, w) - constrained_energy_G(w.phi - eps * v, w)) / (2 * eps);
    CHECK(std::abs(dG) < 1e-7);
  }
  const Field u = random_field(w.grid(), 9);
  const double G = constrained_energy_G(u, w);
  CHECK_THAT(constrained_energy_G(u.shifted(5), w), WithinRel(G, 1e-14));
  CHECK(auxiliary_Q(w.phi, 0.0, 1.0, w.symbol) == conserved_F(w.phi, w.symbol, Variant::standard));
  CHECK_THROWS_AS(auxiliary_Q(w.phi, 0.0, 0.0, w.symbol), DomainError);
}

TEST_CASE("Lyapunov function vanishes on the orbit and is coercive near it", "[evolution]") {
  const auto& w = cnoidal09();
  const auto p = certified_params(w);
  const double s = energy_index(w.symbol);
  CHECK(lyapunov_V(w.phi, w, p) == 0.0);
  for (int i = 0; i < 16; ++i) CHECK(std::abs(lyapunov_V(w.phi.translated(i * 0.37), w, p)) < 1e-10);

  const Field dphi = derivative(w.phi);
  double c_fit = std::numeric_limits<double>::infinity();
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Field d = random_perturbation(w.grid(), seed, s);
    d -= (sobolev_inner(d, dphi, s) / sobolev_inner(dphi, dphi, s)) * dphi;
    const Field v = w.phi + 1e-3 * d;
    const double dist = orbital_distance(v, w, s).d;
    c_fit = std::min(c_fit, lyapunov_V(v, w, p) / (dist * dist));
  }
  CHECK(c_fit > 0.0);
}

TEST_CASE("orbital distance", "[evolution]") {
  const auto& w = cnoidal09();
  const double L = w.grid().length();
  for (double s : {0.0, 0.5, 1.0}) {
    const auto od = orbital_distance(w.phi.translated(0.3 * L), w, s);
    CHECK(od.d < 1e-10 * sobolev_norm(w.phi, s));
    CHECK_THAT(od.r_star, WithinAbs(0.3 * L, 1e-10));
  }
  const Field v = w.phi + 1e-2 * random_field(w.grid(), 6, 10, true);
  const auto od = orbital_distance(v, w, 1.0);
  CHECK(od.d <= sobolev_norm(v - w.phi, 1.0));
  const Field shifted = w.phi.translated(od.r_star);
  const double opt = std::abs(sobolev_inner(v - shifted, derivative(shifted), 1.0));
  CHECK(opt < 1e-8 * sobolev_norm(v, 1.0) * sobolev_norm(derivative(w.phi), 1.0));
}

TEST_CASE("integrators reproduce traveling waves and linear dispersion", "[evolution]") {
  const auto& w = cnoidal09();
  CHECK(error_at_one(w, 2e-3, Integrator::etdrk4) < 1e-6);

  const double e1 = error_at_one(w, 0.02, Integrator::etdrk4);
  const double e2 = error_at_one(w, 0.01, Integrator::etdrk4);
  CHECK(std::log2(e1 / e2) > 3.8);
  const double m1 = error_at_one(w, 0.01, Integrator::implicit_midpoint);
  const double m2 = error_at_one(w, 0.005, Integrator::implicit_midpoint);
  CHECK_THAT(std::log2(m1 / m2), WithinAbs(2.0, 0.2));

  // Linear limit: u = eps cos(kappa x) evolves to eps cos(xi (x + theta t)).
  const double L = 5.0;
  const PeriodicGrid g(L, 32);
  const auto s = DispersionSymbol::ilw(0.7, L);
  const double eps = 1e-9;
  const int kappa = 3;
  const double xi = two_pi * kappa / L;
  const Field u0 = Field::from_function(g, [&](double x) { return eps * std::cos(xi * x); });
  EvolutionConfig c;
  c.dt = 0.01;
  c.T = 1.0;
  const auto tr = integrate(u0, c, s, Nonlinearity::power(1));
  const double th = s.value(kappa, L);
  const Field exact = Field::from_function(g, [&](double x) { return eps * std::cos(xi * (x + th * 1.0)); });
  CHECK((tr.states.back() - exact).max_abs() < 1e-8 * eps);
}

TEST_CASE("evolution rejects invalid settings and reports blowup", "[evolution]") {
  const auto& w = cnoidal09();
  EvolutionConfig c;
  c.dt = -1.0;
  CHECK_THROWS_AS(integrate(w.phi, c, w.symbol, w.nonlinearity), DomainError);
  // A step far beyond the stability limit of the explicit nonlinear stages diverges.
  EvolutionConfig big;
  big.dt = 0.5;
  big.T = 200.0;
  big.dealias = false;
  const auto tall = cnoidal_wave(two_pi, elliptic::EllipticModulus(0.999), 128);
  const auto tr = integrate(tall.phi, big, tall.symbol, tall.nonlinearity);
  REQUIRE(tr.blowup_time.has_value());
  CHECK(*tr.blowup_time > 0.0);
}

TEST_CASE("perturbation experiment on a stable wave", "[evolution]") {
  const auto& w = cnoidal09();
  ExperimentConfig cfg;
  cfg.evolution.dt = 2e-3;
  cfg.evolution.T = 5.0;
  cfg.evolution.sample_interval = 0.25;
  cfg.lyapunov = certified_params(w);
  const auto traces = stability_experiment(w, {0.0, 1e-3}, cfg);
  REQUIRE(traces.size() == 2);
  CHECK(traces[0].sup_distance < 1e-6);
  CHECK_FALSE(traces[0].sup_ratio.has_value());
  CHECK(traces[0].drift_M < 1e-13);
  REQUIRE(traces[1].sup_ratio.has_value());
  CHECK(*traces[1].sup_ratio < 20.0);
  CHECK(traces[1].drift_P < 1e-7);
  CHECK(traces[1].drift_F < 1e-7);
  CHECK(traces[1].drift_V < 1e-8);
  CHECK(traces[1].rows.size() == 21);
  CHECK_THROWS_AS(stability_experiment(w, {-1.0}, cfg), DomainError);
}

TEST_CASE("regularized evolution conserves its momentum", "[evolution]") {
  const double L = two_pi;
  const PeriodicGrid g(L, 64);
  const auto s = DispersionSymbol::second_derivative(L);
  const auto nl = Nonlinearity::power(1);
  NewtonOptions opt;
  opt.variant = Variant::regularized;
  const auto w = solve_newton(stokes_guess(g, s, nl, 0.0, 0.6, Variant::regularized), 0.6, Constraint::zero_mean(),
                              s, nl, opt);
  CHECK(error_at_one(w, 5e-3, Integrator::etdrk4) < 1e-8);
  ExperimentConfig cfg;
  cfg.evolution.dt = 5e-3;
  cfg.evolution.T = 5.0;
  cfg.evolution.sample_interval = 0.5;
  const auto t = run_trace(w, 1e-3, cfg);
  CHECK(t.drift_F < 1e-7);
  CHECK(t.drift_P < 1e-7);
  CHECK(t.drift_M < 1e-13);
}
