#pragma once

// Batch commands behind the periwave executable: configuration loading,
// solve / certify / sweep / evolve, and their report files.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "periwave/elliptic.hpp"
#include "periwave/error.hpp"
#include "periwave/evolution.hpp"
#include "periwave/io.hpp"
#include "periwave/linop.hpp"
#include "periwave/parallel.hpp"
#include "periwave/stability.hpp"
#include "periwave/waves.hpp"

namespace periwave::cli {

using json = nlohmann::json;
namespace fs = std::filesystem;

enum ExitCode : int {
  kSuccess = 0,
  kConfigError = 1,
  kSolveError = 2,
  kPrerequisitesFailed = 3,
  kSweepPartial = 4,
  kBlowup = 5,
};

/// Values every configuration starts from.
inline json default_config() {
  return json::parse(R"({
    "equation": {"symbol": {"kind": "second_derivative"},
                 "nonlinearity": {"kind": "power", "p": 1, "c": 1.0},
                 "variant": "standard"},
    "grid": {"L": 6.283185307179586, "N": 256},
    "solve": {"constraint": {"mode": "zero_mean", "value": 0.0},
              "tol": 1e-10, "max_iter": 50,
              "guess": {"kind": "stokes"}},
    "certify": {"fd_check": true},
    "evolve": {"dt": 2e-3, "T": 50.0, "integrator": "etdrk4", "dealias": true,
               "amplitudes": [1e-3], "seed": 1, "sample_interval": 0.5,
               "convergence_check": false},
    "output": {"directory": "out", "formats": ["csv", "json"]}
  })");
}

inline fs::path preset_directory() {
  if (const char* env = std::getenv("PERIWAVE_PRESETS")) return env;
#ifdef PERIWAVE_PRESET_DIR
  return PERIWAVE_PRESET_DIR;
#else
  return "presets";
#endif
}

inline json read_json_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot open config file " + p.string());
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw ConfigError("config file " + p.string() + " is not valid JSON: " + e.what());
  }
}

/// key=value with a dotted key; the value is parsed as JSON when possible.
inline void apply_override(json& cfg, const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key=value: " + kv);
  std::string key = kv.substr(0, eq);
  const std::string raw = kv.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::exception&) {
    value = raw;
  }
  std::replace(key.begin(), key.end(), '.', '/');
  cfg[json::json_pointer("/" + key)] = value;
}

/// default <- preset <- config file <- overrides
inline json load_config(const std::optional<std::string>& preset,
                        const std::optional<std::string>& config_file,
                        const std::vector<std::string>& overrides) {
  json cfg = default_config();
  if (preset) {
    const fs::path p = preset_directory() / (*preset + ".json");
    if (!fs::exists(p)) throw ConfigError("unknown preset '" + *preset + "' (looked in " + p.string() + ")");
    cfg.merge_patch(read_json_file(p));
  }
  if (config_file) cfg.merge_patch(read_json_file(*config_file));
  for (const auto& o : overrides) apply_override(cfg, o);
  return cfg;
}

struct SweepSpec {
  ParameterKind kind = ParameterKind::omega;
  double from = 0.0;
  double to = 0.0;
  int count = 1;
  /// omega(xi) = omega_map[0] + omega_map[1] xi, likewise A(xi).
  std::vector<double> omega_map;
  std::vector<double> A_map;

  std::vector<double> values() const {
    std::vector<double> v;
    for (int i = 0; i < count; ++i)
      v.push_back(count == 1 ? from : from + (to - from) * i / (count - 1.0));
    return v;
  }
};

struct EvolveSpec {
  EvolutionConfig evolution;
  std::vector<double> amplitudes;
  std::uint64_t seed = 1;
  bool convergence_check = false;
};

/// Validated configuration.
struct RunConfig {
  json raw;
  std::string hash;
  PeriodicGrid grid;
  DispersionSymbol symbol;
  Nonlinearity nonlinearity;
  Variant variant;
  Constraint constraint;
  std::optional<double> omega;
  double tol;
  int max_iter;
  json guess;
  std::optional<double> zero_tol;
  bool fd_check;
  std::optional<SweepSpec> sweep;
  EvolveSpec evolve;
  fs::path out_dir;
};

namespace detail {

template <class T>
T get(const json& j, const char* section, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(section) + "." + key + " is missing or has the wrong type");
  }
}

inline double positive(double v, const std::string& name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(name + " must be positive, got " + io::format_double(v));
  return v;
}

}  // namespace detail

inline RunConfig parse_config(const json& cfg) {
  using detail::get;
  if (!cfg.is_object()) throw ConfigError("config root must be an object");
  for (const char* s : {"equation", "grid", "solve", "certify", "evolve", "output"}) {
    if (!cfg.contains(s) || !cfg[s].is_object()) throw ConfigError(std::string("config section '") + s + "' must be an object");
  }
  const json& grid = cfg["grid"];
  const double L = detail::positive(get<double>(grid, "grid", "L"), "grid.L");
  const json& Nj = grid.contains("N") ? grid["N"] : json();
  if (!Nj.is_number_integer()) throw ConfigError("grid.N must be an integer");
  const int N = Nj.get<int>();
  if (N < 16 || N % 2 != 0) throw ConfigError("grid.N must be an even integer >= 16, got " + std::to_string(N));

  const json& eq = cfg["equation"];
  std::optional<DispersionSymbol> symbol;
  std::optional<Nonlinearity> nl;
  Variant variant = Variant::standard;
  try {
    symbol = io::symbol_from_json(eq.at("symbol"), L);
    nl = io::nonlinearity_from_json(eq.at("nonlinearity"));
    variant = io::variant_from_string(eq.value("variant", "standard"));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("equation section is incomplete: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(std::string("equation parameters invalid: ") + e.what());
  }

  const json& solve = cfg["solve"];
  Constraint constraint;
  try {
    constraint = io::constraint_from_json(solve.at("constraint"));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("solve.constraint invalid: ") + e.what());
  }
  std::optional<double> omega;
  if (solve.contains("omega") && !solve["omega"].is_null()) omega = get<double>(solve, "solve", "omega");
  const double tol = detail::positive(get<double>(solve, "solve", "tol"), "solve.tol");
  const int max_iter = get<int>(solve, "solve", "max_iter");
  if (max_iter < 1) throw ConfigError("solve.max_iter must be >= 1");
  const json guess = solve.value("guess", json::object());
  if (!guess.is_object() || !guess.contains("kind")) throw ConfigError("solve.guess.kind is required");

  const json& cert = cfg["certify"];
  std::optional<double> zero_tol;
  if (cert.contains("zero_tol") && !cert["zero_tol"].is_null())
    zero_tol = detail::positive(get<double>(cert, "certify", "zero_tol"), "certify.zero_tol");
  const bool fd_check = cert.value("fd_check", true);

  std::optional<SweepSpec> sweep;
  if (cfg.contains("sweep") && cfg["sweep"].is_object()) {
    const json& sw = cfg["sweep"];
    SweepSpec sp;
    const std::string par = get<std::string>(sw, "sweep", "parameter");
    if (par == "omega") sp.kind = ParameterKind::omega;
    else if (par == "A") sp.kind = ParameterKind::A;
    else if (par == "xi") sp.kind = ParameterKind::xi;
    else throw ConfigError("sweep.parameter must be omega, A or xi");
    sp.from = get<double>(sw, "sweep", "from");
    sp.to = get<double>(sw, "sweep", "to");
    sp.count = get<int>(sw, "sweep", "count");
    if (sp.count < 1) throw ConfigError("sweep.count must be >= 1");
    if (sp.kind == ParameterKind::xi) {
      sp.omega_map = get<std::vector<double>>(sw, "sweep", "omega_map");
      sp.A_map = get<std::vector<double>>(sw, "sweep", "A_map");
      if (sp.omega_map.size() != 2 || sp.A_map.size() != 2)
        throw ConfigError("sweep.omega_map and sweep.A_map must be [intercept, slope]");
    }
    sweep = sp;
  }

  const json& ev = cfg["evolve"];
  EvolveSpec es;
  es.evolution.dt = detail::positive(get<double>(ev, "evolve", "dt"), "evolve.dt");
  es.evolution.T = detail::positive(get<double>(ev, "evolve", "T"), "evolve.T");
  if (es.evolution.dt > es.evolution.T) throw ConfigError("evolve.dt must not exceed evolve.T");
  const std::string integ = get<std::string>(ev, "evolve", "integrator");
  if (integ == "etdrk4") es.evolution.integrator = Integrator::etdrk4;
  else if (integ == "implicit_midpoint") es.evolution.integrator = Integrator::implicit_midpoint;
  else throw ConfigError("evolve.integrator must be etdrk4 or implicit_midpoint");
  es.evolution.dealias = ev.value("dealias", true);
  es.evolution.sample_interval = ev.value("sample_interval", 0.5);
  es.evolution.variant = variant;
  es.amplitudes = get<std::vector<double>>(ev, "evolve", "amplitudes");
  for (double a : es.amplitudes)
    if (!(a >= 0.0)) throw ConfigError("evolve.amplitudes must be non-negative");
  es.seed = ev.value("seed", std::uint64_t{1});
  es.convergence_check = ev.value("convergence_check", false);

  const fs::path out_dir = cfg["output"].value("directory", std::string("out"));

  return RunConfig{cfg,        io::fnv1a_hex(cfg.dump()), PeriodicGrid(L, N), *symbol, *nl, variant,
                   constraint, omega, tol, max_iter, guess, zero_tol, fd_check, sweep, es, out_dir};
}

/// Fields every report carries.
inline json provenance(const RunConfig& rc) {
  return json{{"config_hash", rc.hash}, {"tool_version", io::kToolVersion}};
}

/// Builds the wave requested by `solve.guess`.
inline TravelingWave make_wave(const RunConfig& rc) {
  const std::string kind = rc.guess.value("kind", "stokes");
  const double L = rc.grid.length();
  const int N = rc.grid.size();
  NewtonOptions opt{rc.tol, rc.max_iter, rc.variant};
  if (kind == "cnoidal") {
    if (rc.symbol.kind() != SymbolKind::second_derivative || !rc.nonlinearity.is_kdv() ||
        rc.variant != Variant::standard) {
      throw ConfigError("cnoidal guess needs M = -d^2/dx^2, f = u^2/2 and the standard equation");
    }
    const elliptic::EllipticModulus k = rc.omega ? cnoidal_modulus_for_speed(L, *rc.omega)
                                                 : elliptic::EllipticModulus(rc.guess.at("k").get<double>());
    TravelingWave w = cnoidal_wave(L, k, N);
    if (w.residual_norm > rc.tol) w = solve_newton(w.phi, w.omega, Constraint::zero_mean(), w.symbol, w.nonlinearity, opt);
    return w;
  }
  if (kind == "ilw") {
    if (rc.symbol.kind() != SymbolKind::ilw) throw ConfigError("ilw guess needs the ilw symbol");
    return ilw_wave(L, rc.symbol.parameter(), elliptic::EllipticModulus(rc.guess.at("k").get<double>()), N);
  }
  if (!rc.omega) throw ConfigError("solve.omega is required for guess kind '" + kind + "'");
  const double level = rc.guess.value("level", rc.constraint.mean_target() / L);
  if (kind == "constant") return constant_state(rc.grid, level, *rc.omega, rc.symbol, rc.nonlinearity, rc.variant);
  if (kind == "stokes") {
    const Field guess = stokes_guess(rc.grid, rc.symbol, rc.nonlinearity, level, *rc.omega, rc.variant);
    return solve_newton(guess, *rc.omega, rc.constraint, rc.symbol, rc.nonlinearity, opt);
  }
  throw ConfigError("unknown guess kind '" + kind + "'");
}

inline bool is_constant(const TravelingWave& w) {
  return w.phi.values().maxCoeff() - w.phi.values().minCoeff() <= 1e-14 * std::max(1.0, w.phi.max_abs());
}

struct Certification {
  json report;
  StabilityVerdict verdict;
  bool prerequisites_pass = false;
};

/// assemble -> H0 -> H1 -> eta, beta -> surface derivatives -> verdict, plus
/// the cross-checks that make the verdict auditable.
inline Certification certify_wave(const TravelingWave& w, const RunConfig& rc) {
  const LinearizedOperator lin = assemble(w);
  const SpectralReport h0 = check_H0(lin, w, rc.zero_tol);
  const H1Constants h1 = h1_constants(lin, w.symbol);
  Certification c;
  json rep;
  rep["wave"] = io::wave_json(w);
  json pre{{"h0_pass", h0.h0_pass}, {"n_neg", h0.n_neg}, {"zero_dim", h0.zero_dim},
           {"kernel_alignment", h0.kernel_alignment}, {"zero_tol", h0.zero_tol},
           {"ambiguous_spectrum", h0.ambiguous}, {"lowest_eigenvalues", h0.lowest},
           {"h1_pass", h1.pass}, {"c1", h1.c1}, {"c2", h1.c2}};

  SurfaceDerivatives sd;
  std::optional<std::string> derivative_error;
  try {
    sd = surface_derivatives(w, param_derivatives(w, lin, h0.zero_tol));
  } catch (const Error& e) {
    derivative_error = e.what();
  }
  if (derivative_error) {
    Prerequisites p;
    p.h0_pass = h0.h0_pass;
    p.h1_pass = h1.pass;
    p.n_L = h0.n_neg;
    c.verdict.prerequisites = p;
    c.verdict.reason = "parameter derivatives unavailable: " + *derivative_error;
    pre["derivatives_error"] = *derivative_error;
  } else {
    c.verdict = verdict(w, lin, sd, h0, h1);
  }
  const auto& v = c.verdict;
  c.prerequisites_pass = h0.h0_pass && h1.pass;

  json criteria{{"M_A", sd.M_A}, {"F_omega", sd.F_omega}, {"M_omega", sd.M_omega}, {"F_A", sd.F_A},
                {"det_condition", sd.det_condition()},
                {"criterion_i", v.criterion_i}, {"criterion_ii", v.criterion_ii},
                {"criterion_iii", v.criterion_iii}};
  if (sd.M_A != 0.0) criteria["F_omega_along_fixed_mean"] = -sd.det_condition() / sd.M_A;
  rep["criteria"] = criteria;
  rep["delta_witness"] = v.delta_witness ? json{{"a", v.delta_witness->a}, {"b", v.delta_witness->b},
                                                {"value", v.delta_witness->value}}
                                         : json(nullptr);
  rep["D"] = v.D ? json(*v.D) : json(nullptr);
  rep["D_resolvent"] = v.prerequisites.D_resolvent ? json(*v.prerequisites.D_resolvent) : json(nullptr);
  rep["K_Ham"] = v.K_Ham ? json(*v.K_Ham) : json(nullptr);
  rep["conclusion"] = to_string(v.conclusion);
  rep["fired_criterion"] = to_string(v.fired);
  rep["reason"] = v.reason;
  rep["mu"] = v.mu;
  rep["nu"] = v.nu;
  rep["prerequisites"] = pre;

  if (w.variant == Variant::standard) {
    const auto hs = hamiltonian_spectrum(lin);
    rep["k_r"] = hs.k_r;
    rep["hamiltonian"] = json{{"quadruple_defect", hs.quadruple_defect}, {"max_abs_real", hs.max_abs_real},
                              {"re_tol", hs.re_tol}, {"im_tol", hs.im_tol}};
  } else {
    rep["k_r"] = nullptr;
  }

  if (!derivative_error) {
    try {
      const auto r = resolvent_consistency(w, lin, sd, h0.zero_tol);
      rep["resolvent"] = json{{"max_rel_deviation", r.max_rel_deviation},
                              {"F_A_minus_M_omega", r.fa_minus_momega}};
    } catch (const Error& e) {
      rep["resolvent"] = json{{"error", e.what()}};
    }
    if (rc.fd_check && !is_constant(w)) {
      try {
        const auto fd = finite_difference_derivatives(w);
        rep["finite_difference"] = json{{"M_omega", fd.M_omega}, {"M_A", fd.M_A}, {"F_omega", fd.F_omega},
                                        {"F_A", fd.F_A}, {"max_rel_deviation", max_relative_gap(fd, sd)}};
      } catch (const Error& e) {
        rep["finite_difference"] = json{{"error", e.what()}};
      }
    }
  }
  if (v.mu != 0.0 || v.nu != 0.0) {
    std::vector<Field> cons;
    const Field dphi = derivative(w.phi);
    if (dphi.values().norm() > 0.0) cons.push_back(dphi);
    cons.push_back(Field::constant(w.grid(), v.mu) + v.nu * omega_derivative(w));
    try {
      rep["c3"] = constrained_min_rayleigh(lin, cons).value;
    } catch (const Error& e) {
      rep["c3"] = nullptr;
    }
  }
  if (w.nonlinearity.is_kdv() && w.variant == Variant::standard) {
    const auto mc = mean_criterion(w);
    rep["mean_criterion"] = json{{"value", mc.value}, {"fires", mc.fires}};
  }
  c.report = rep;
  return c;
}

inline void emit_report(const RunConfig& rc, const std::string& name, json body) {
  body.update(provenance(rc));
  io::write_json_file(rc.out_dir / name, body);
}

inline int cmd_solve(const RunConfig& rc, std::ostream& log) {
  TravelingWave w = make_wave(rc);
  io::write_wave(rc.out_dir, "wave", w, provenance(rc));
  io::write_atomic(rc.out_dir / "wave_spectrum.csv", io::spectrum_csv(w.phi));
  log << "solve: residual_norm = " << io::format_double(w.residual_norm) << "\n";
  log << "solve: omega = " << io::format_double(w.omega) << ", A = " << io::format_double(w.A) << "\n";
  return kSuccess;
}

inline int cmd_certify(const RunConfig& rc, const TravelingWave& w, std::ostream& log) {
  const Certification c = certify_wave(w, rc);
  emit_report(rc, "verdict.json", c.report);
  io::write_atomic(rc.out_dir / "spectrum.csv", io::eigenvalue_csv(assemble(w)));
  log << "certify: conclusion = " << to_string(c.verdict.conclusion)
      << ", fired_criterion = " << to_string(c.verdict.fired) << "\n";
  if (!c.prerequisites_pass) {
    log << "certify: prerequisites failed (" << c.verdict.reason << ")\n";
    return kPrerequisitesFailed;
  }
  return kSuccess;
}

inline int cmd_sweep(const RunConfig& rc, const TravelingWave& seed, std::ostream& log) {
  if (!rc.sweep) throw ConfigError("sweep section is required for the sweep command");
  const SweepSpec& sp = *rc.sweep;
  ContinuationParameter par = ContinuationParameter::omega();
  if (sp.kind == ParameterKind::A) par = ContinuationParameter::A();
  if (sp.kind == ParameterKind::xi) {
    const auto wm = sp.omega_map;
    const auto am = sp.A_map;
    par = ContinuationParameter::xi([wm](double x) { return wm[0] + wm[1] * x; },
                                    [am](double x) { return am[0] + am[1] * x; });
  }
  NewtonOptions opt{rc.tol, rc.max_iter, rc.variant};
  const ContinuationResult res = continue_family_partial(seed, par, sp.values(), rc.constraint, opt);
  const WaveFamily& fam = res.family;

  RunConfig member_rc = rc;
  member_rc.fd_check = false;
  std::vector<Certification> certs(fam.size());
  parallel_for(fam.size(), [&](std::size_t i) { certs[i] = certify_wave(fam.members[i], member_rc); });

  std::ostringstream csv;
  csv << "xi,omega,A,M,F,conclusion\n";
  json members = json::array();
  bool all_pre = true;
  for (std::size_t i = 0; i < fam.size(); ++i) {
    const auto& w = fam.members[i];
    const double M = conserved_M(w.phi);
    const double F = conserved_F(w.phi, w.symbol, w.variant);
    csv << io::format_double(fam.parameter[i]) << "," << io::format_double(w.omega) << ","
        << io::format_double(w.A) << "," << io::format_double(M) << "," << io::format_double(F) << ","
        << to_string(certs[i].verdict.conclusion) << "\n";
    json m = certs[i].report;
    m["xi"] = fam.parameter[i];
    members.push_back(m);
    all_pre = all_pre && certs[i].prerequisites_pass;
  }
  json body{{"parameter", sp.kind == ParameterKind::omega ? "omega" : sp.kind == ParameterKind::A ? "A" : "xi"},
            {"members", members}};
  if (fam.size() >= 3) {
    const auto cc = curve_criterion(fam);
    json pts = json::array();
    for (const auto& p : cc.points)
      pts.push_back(json{{"xi", p.xi}, {"value", p.value}, {"mu", p.mu}, {"nu", p.nu}});
    body["curve_criterion"] = json{{"points", pts}, {"max_value", cc.max_value}, {"all_negative", cc.all_negative}};
  } else {
    body["curve_criterion"] = nullptr;
  }
  if (res.error) body["failure"] = json{{"parameter", res.error->parameter()}, {"message", res.error->what()}};
  io::write_atomic(rc.out_dir / "family.csv", csv.str());
  emit_report(rc, "sweep.json", body);
  log << "sweep: " << fam.size() << " of " << sp.count << " members solved\n";
  if (res.error) {
    log << "sweep: " << res.error->what() << "\n";
    return kSweepPartial;
  }
  return all_pre ? kSuccess : kPrerequisitesFailed;
}

inline int cmd_evolve(const RunConfig& rc, const TravelingWave& w, std::ostream& log) {
  ExperimentConfig ec;
  ec.evolution = rc.evolve.evolution;
  ec.seed = rc.evolve.seed;
  json lyap{{"sigma", nullptr}, {"mu", 0.0}, {"nu", 1.0}};
  bool have_v = false;
  try {
    const LinearizedOperator lin = assemble(w);
    const auto sd = surface_derivatives(w, param_derivatives(w, lin));
    const auto v = verdict(w, lin, sd, check_H0(lin, w, rc.zero_tol), h1_constants(lin, w.symbol));
    const double mu = (v.mu != 0.0 || v.nu != 0.0) ? v.mu : 0.0;
    const double nu = (v.mu != 0.0 || v.nu != 0.0) ? v.nu : 1.0;
    const auto sg = lyapunov_sigma(w, lin, mu, nu);
    ec.lyapunov = {sg.sigma, mu, nu};
    lyap = json{{"sigma", sg.sigma}, {"mu", mu}, {"nu", nu}, {"hessian_margin", sg.margin},
                {"conclusion", to_string(v.conclusion)}};
    have_v = true;
  } catch (const Error& e) {
    lyap["error"] = e.what();
  }
  const auto traces = stability_experiment(w, rc.evolve.amplitudes, ec);
  json summary = json::array();
  bool blowup = false;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const auto& t = traces[i];
    std::vector<std::vector<double>> rows;
    for (const auto& r : t.rows)
      rows.push_back({r.t, r.d_orbit, r.r_star, r.P, r.F, r.M, have_v ? r.V : std::nan("")});
    io::write_atomic(rc.out_dir / ("trace_" + std::to_string(i) + ".csv"),
                     io::csv({"t", "d_orbit", "r_star", "P", "F", "M", "V"}, rows));
    json s{{"amplitude", t.amplitude}, {"seed", t.seed}, {"initial_distance", t.initial_distance},
           {"sup_distance", t.sup_distance}, {"sup_ratio", t.sup_ratio ? json(*t.sup_ratio) : json(nullptr)},
           {"drift_P", t.drift_P}, {"drift_F", t.drift_F}, {"drift_M", t.drift_M},
           {"drift_V", have_v ? json(t.drift_V) : json(nullptr)},
           {"blowup_time", t.blowup_time ? json(*t.blowup_time) : json(nullptr)},
           {"trace_csv", "trace_" + std::to_string(i) + ".csv"}};
    summary.push_back(s);
    blowup = blowup || t.blowup_time.has_value();
    log << "evolve: a = " << io::format_double(t.amplitude) << ", sup_ratio = "
        << (t.sup_ratio ? io::format_double(*t.sup_ratio) : std::string("n/a"))
        << ", drift_P = " << io::format_double(t.drift_P) << "\n";
  }
  json body{{"note", "finite-horizon run: can falsify orbital stability, cannot prove it"},
            {"evolution", json{{"dt", ec.evolution.dt}, {"T", ec.evolution.T},
                               {"integrator", to_string(ec.evolution.integrator)},
                               {"dealias", ec.evolution.dealias}}},
            {"lyapunov", lyap},
            {"traces", summary}};
  if (rc.evolve.convergence_check) {
    json conv = json::array();
    double prev = 0.0;
    for (int level = 0; level < 3; ++level) {
      EvolutionConfig c = ec.evolution;
      c.dt = ec.evolution.dt * std::pow(0.5, level);
      c.T = 1.0;
      c.sample_interval = 0.0;
      c.variant = w.variant;
      const auto tr = integrate(w.phi, c, w.symbol, w.nonlinearity);
      const double err = (tr.states.back() - w.phi.translated(-w.omega)).max_abs();
      conv.push_back(json{{"dt", c.dt}, {"error", err}, {"ratio", level ? json(prev / err) : json(nullptr)}});
      if (level) log << "evolve: dt halving error ratio = " << io::format_double(prev / err) << "\n";
      prev = err;
    }
    body["convergence"] = conv;
  }
  emit_report(rc, "evolve.json", body);
  return blowup ? kBlowup : kSuccess;
}

}  // namespace periwave::cli
