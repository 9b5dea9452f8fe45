#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "periwave/stability.hpp"
#include "support.hpp"

using namespace periwave;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using testsupport::two_pi;

namespace {

struct Pipeline {
  LinearizedOperator lin;
  SpectralReport h0;
  SurfaceDerivatives sd;
  StabilityVerdict v;
};

Pipeline run(const TravelingWave& w) {
  auto lin = assemble(w);
  auto h0 = check_H0(lin, w);
  const auto sd = surface_derivatives(w, param_derivatives(w, lin));
  auto v = verdict(w, lin, sd, h0, h1_constants(lin, w.symbol));
  return {std::move(lin), h0, sd, v};
}

Prerequisites passing(int n_L = 1) {
  Prerequisites p;
  p.h0_pass = true;
  p.h1_pass = true;
  p.n_L = n_L;
  return p;
}

TravelingWave bbm_wave(double omega) {
  const double L = two_pi;
  const PeriodicGrid g(L, 64);
  const auto s = DispersionSymbol::second_derivative(L);
  const auto nl = Nonlinearity::power(1);
  NewtonOptions opt;
  opt.variant = Variant::regularized;
  return solve_newton(stokes_guess(g, s, nl, 0.0, omega, Variant::regularized), omega, Constraint::zero_mean(), s,
                      nl, opt);
}

}  // namespace

TEST_CASE("surface derivatives of a constant state", "[stability]") {
  const double L = 3.0;
  const PeriodicGrid g(L, 32);
  const auto nl = Nonlinearity::power(2);
  const double c = 0.5, omega = 1.2;
  const auto w = constant_state(g, c, omega, DispersionSymbol::ilw(0.5, L), nl);
  const auto lin = assemble(w);
  const auto sd = surface_derivatives(w, param_derivatives(w, lin));
  const double den = omega - nl.df(c);
  CHECK_THAT(sd.M_A, WithinRel(-L / den, 1e-12));
  CHECK_THAT(sd.M_omega, WithinRel(-c * L / den, 1e-12));
  CHECK_THAT(sd.F_A, WithinRel(-c * L / den, 1e-12));
  CHECK_THAT(sd.F_omega, WithinRel(-c * c * L / den, 1e-12));
  const auto r = resolvent_consistency(w, lin, sd);
  CHECK(r.max_rel_deviation < 1e-12);
}

TEST_CASE("symmetry F_A = M_omega and resolvent agreement on solved waves", "[stability]") {
  std::vector<TravelingWave> waves{cnoidal_wave(two_pi, elliptic::EllipticModulus(0.6), 128),
                                   ilw_wave(two_pi, 1.0, elliptic::EllipticModulus(0.5), 128), bbm_wave(0.6)};
  for (const auto& w : waves) {
    const auto p = run(w);
    CHECK(std::abs(p.sd.F_A - p.sd.M_omega) < 1e-6 * (1 + std::abs(p.sd.M_omega)));
    CHECK(resolvent_consistency(w, p.lin, p.sd).max_rel_deviation < 1e-8);
  }
}

TEST_CASE("finite-difference surface derivatives agree with the linear solves", "[stability]") {
  const auto w = cnoidal_wave(two_pi, elliptic::EllipticModulus(0.9), 128);
  const auto p = run(w);
  const auto fd = finite_difference_derivatives(w);
  CHECK(max_relative_gap(fd, p.sd) < 1e-4);
}

TEST_CASE("delta form and its witness", "[stability]") {
  const SurfaceDerivatives sd{0.3, -2.0, -1.5, 0.3};
  CHECK(delta_form(sd, 1, 0) == sd.M_A);
  CHECK(delta_form(sd, 0, 1) == sd.F_omega);
  for (double x : {-1.0, 0.4, 2.0}) {
    for (double y : {-0.7, 0.0, 1.3}) {
      const double sym = x * x * sd.M_A + 2 * x * y * sd.M_omega + y * y * sd.F_omega;
      CHECK_THAT(delta_form(sd, x, y), WithinAbs(sym, 1e-14));
    }
  }
  const auto pos = find_delta_witness({0.0, 0.5, -1.0, 0.0});
  REQUIRE(pos.has_value());
  CHECK(pos->value > 0.0);
  const auto indef = find_delta_witness({2.0, -1.0, -1.0, 2.0});
  REQUIRE(indef.has_value());
  CHECK(delta_form({2.0, -1.0, -1.0, 2.0}, indef->a, indef->b) > 0.0);
  CHECK_FALSE(find_delta_witness({0.0, -1.0, -1.0, 0.0}).has_value());
}

TEST_CASE("verdict precedence on synthetic derivatives", "[stability]") {
  {
    const auto v = verdict(SurfaceDerivatives{0.0, 1.0, 1.0, 0.0}, passing());
    CHECK(v.fired == FiredCriterion::M_A);
    CHECK(v.mu == 1.0);
    CHECK(v.nu == 0.0);
  }
  {
    const auto v = verdict(SurfaceDerivatives{0.0, -1.0, 1.0, 0.0}, passing());
    CHECK(v.fired == FiredCriterion::F_omega);
    CHECK(v.conclusion == Conclusion::orbitally_stable);
  }
  {
    const auto v = verdict(SurfaceDerivatives{2.0, -1.0, -1.0, 2.0}, passing());
    CHECK(v.fired == FiredCriterion::det_condition);
    CHECK(delta_form(v.sd, v.mu, v.nu) > 0.0);
  }
  {
    // Failed prerequisites override any criterion.
    Prerequisites p = passing();
    p.h0_pass = false;
    const auto v = verdict(SurfaceDerivatives{0.0, 1.0, 1.0, 0.0}, p);
    CHECK(v.conclusion == Conclusion::inconclusive);
    CHECK(v.criterion_i);
    CHECK(v.fired == FiredCriterion::none);
  }
}

TEST_CASE("Krein-Hamiltonian index under the determinant premises", "[stability]") {
  // M_A = -1, F_omega = -1, M_omega = 0: (L^{-1}1,1) = 1 > 0 and D = 1 > 0, so K_Ham = 1.
  const auto v = verdict(SurfaceDerivatives{0.0, -1.0, -1.0, 0.0}, passing(1));
  REQUIRE(v.K_Ham.has_value());
  CHECK(*v.K_Ham == 1);
  REQUIRE(v.D.has_value());
  CHECK(*v.D == 1.0);
  CHECK(v.conclusion == Conclusion::spectrally_unstable);
  CHECK(v.fired == FiredCriterion::krein_index);
  // Premises fail with two negative eigenvalues.
  const auto v2 = verdict(SurfaceDerivatives{0.0, -1.0, -1.0, 0.0}, passing(2));
  CHECK(v2.conclusion == Conclusion::inconclusive);
  CHECK_FALSE(v2.K_Ham.has_value());
  CHECK(negative_count(-0.5) == 1);
  CHECK(negative_count(0.5) == 0);
}

TEST_CASE("cnoidal and ilw waves are certified stable", "[stability]") {
  for (double k : {0.3, 0.6, 0.9}) {
    const auto w = cnoidal_wave(two_pi, elliptic::EllipticModulus(k), 128);
    const auto p = run(w);
    CHECK(p.v.conclusion == Conclusion::orbitally_stable);
    CHECK(p.v.fired == FiredCriterion::det_condition);
    // d/domega of F along the zero-mean branch: -(M_w^2 - F_w M_A)/M_A > 0.
    CHECK(-p.sd.det_condition() / p.sd.M_A > 0.0);
    // Coercivity on the constraint set {phi', Q'(phi)}.
    const Field q = Field::constant(w.grid(), p.v.mu) + p.v.nu * omega_derivative(w);
    CHECK(constrained_min_rayleigh(p.lin, {derivative(w.phi), q}).value > 0.0);
  }
  const auto ilw = ilw_wave(two_pi, 1.0, elliptic::EllipticModulus(0.5), 128);
  CHECK(run(ilw).v.conclusion == Conclusion::orbitally_stable);
}

TEST_CASE("branch derivative of F matches differences along a continued family", "[stability]") {
  const auto seed = cnoidal_wave(two_pi, elliptic::EllipticModulus(0.6), 128);
  const double h = 1e-3;
  const auto fam = continue_family(seed, ContinuationParameter::omega(), {seed.omega - h, seed.omega, seed.omega + h},
                                   Constraint::zero_mean());
  const double dF = (momentum_F(fam.members[2].phi, seed.symbol, seed.variant) -
                     momentum_F(fam.members[0].phi, seed.symbol, seed.variant)) /
                    (2 * h);
  const auto p = run(fam.members[1]);
  CHECK_THAT(-p.sd.det_condition() / p.sd.M_A, WithinRel(dF, 1e-5));
}

TEST_CASE("mean criterion", "[stability]") {
  const auto w = cnoidal_wave(two_pi, cnoidal_modulus_for_speed(two_pi, 0.5), 64);
  const auto m = mean_criterion(w);
  CHECK_FALSE(m.fires);
  const PeriodicGrid unit(1.0, 16);
  const auto c = constant_state(unit, 1.0, 0.5, DispersionSymbol::second_derivative(1.0), Nonlinearity::power(1));
  CHECK(mean_criterion(c).fires);
  const auto cubic = constant_state(unit, 1.0, 0.5, DispersionSymbol::second_derivative(1.0), Nonlinearity::power(2));
  CHECK_THROWS_AS(mean_criterion(cubic), NotApplicableError);
}

TEST_CASE("curve criterion along families", "[stability]") {
  const auto seed = cnoidal_wave(two_pi, elliptic::EllipticModulus(0.6), 128);
  std::vector<double> speeds;
  for (int i = 0; i < 6; ++i) speeds.push_back(seed.omega + 0.1 * i);
  const auto fam = continue_family(seed, ContinuationParameter::omega(), speeds, Constraint::zero_mean());
  const auto cc = curve_criterion(fam);
  CHECK(cc.points.size() == 4);
  CHECK(cc.all_negative);

  const auto ilw = ilw_wave(two_pi, 1.0, elliptic::EllipticModulus(0.5), 128);
  const auto ifam = continue_family(ilw, ContinuationParameter::omega(),
                                    {ilw.omega, ilw.omega + 0.02, ilw.omega + 0.04, ilw.omega + 0.06},
                                    Constraint::zero_mean());
  CHECK(curve_criterion(ifam).all_negative);

  // A held at zero: the value collapses to -dF/domega.
  const double w0 = seed.omega, A0 = seed.A;
  const double shift = -w0 + std::sqrt(w0 * w0 + 2 * A0);
  const Field guess = seed.phi + shift;
  const double om = w0 + shift;
  const auto s0 = solve_newton(guess, om, Constraint::fixed_A(0.0), seed.symbol, seed.nonlinearity);
  const auto afam = continue_family(s0, ContinuationParameter::omega(), {om, om + 0.05, om + 0.1},
                                    Constraint::fixed_A(0.0));
  const auto ac = curve_criterion(afam);
  REQUIRE(ac.points.size() == 1);
  const double dF = (momentum_F(afam.members[2].phi, seed.symbol, seed.variant) -
                     momentum_F(afam.members[0].phi, seed.symbol, seed.variant)) /
                    0.1;
  CHECK(ac.points[0].mu == 0.0);
  CHECK_THAT(ac.points[0].value, WithinRel(-dF, 1e-9));
  CHECK_THROWS_AS(curve_criterion(WaveFamily{}), UsageError);
}

TEST_CASE("hamiltonian spectrum", "[stability]") {
  const double L = 4.0;
  const PeriodicGrid g(L, 32);
  const auto s = DispersionSymbol::hilbert_derivative(L);
  const auto nl = Nonlinearity::power(1);
  const double c = 0.2, omega = 0.7;
  const auto cs = constant_state(g, c, omega, s, nl);
  const auto h = hamiltonian_spectrum(assemble(cs));
  std::vector<double> im, ref;
  for (const auto& l : h.eigenvalues) {
    CHECK(std::abs(l.real()) < 1e-10);
    im.push_back(l.imag());
  }
  for (int k = -15; k <= 15; ++k) ref.push_back(two_pi * k / L * (s.value(k, L) + omega - nl.df(c)));
  ref.push_back(0.0);  // Nyquist mode, annihilated by the spectral derivative
  std::sort(im.begin(), im.end());
  std::sort(ref.begin(), ref.end());
  for (std::size_t i = 0; i < ref.size(); ++i) CHECK_THAT(im[i], WithinAbs(ref[i], 1e-10));
  CHECK(h.k_r == 0);

  const auto w = cnoidal_wave(two_pi, elliptic::EllipticModulus(0.9), 128);
  const auto hw = hamiltonian_spectrum(assemble(w));
  CHECK(hw.k_r == 0);
  CHECK(hw.quadruple_defect < 1e-6);
  CHECK_THROWS_AS(hamiltonian_spectrum(assemble(bbm_wave(0.6))), NotApplicableError);
}

TEST_CASE("regularized waves run through the verdict pipeline", "[stability]") {
  const auto w = bbm_wave(0.6);
  const auto lin = assemble(w);
  CHECK_THAT(lin.multiplier_coefficient(), WithinAbs(0.6, 1e-15));
  const auto d = param_derivatives(w, lin);
  // g = M phi + phi for the regularized equation.
  CHECK((lin.apply(d.eta) + apply_multiplier(w.symbol, w.phi) + w.phi).max_abs() < 1e-9);
  const auto p = run(w);
  CHECK(p.h0.h0_pass);
  CHECK(p.v.conclusion != Conclusion::spectrally_unstable);
}
