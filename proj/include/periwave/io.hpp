#pragma once

// CSV/JSON output with 17 significant digits, atomic file replacement and
// wave files (profile CSV plus JSON sidecar).

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "periwave/error.hpp"
#include "periwave/linop.hpp"
#include "periwave/spectral.hpp"
#include "periwave/waves.hpp"

namespace periwave::io {

using json = nlohmann::json;

inline constexpr const char* kToolVersion = "0.1.0";

inline std::string format_double(double x) {
  if (!std::isfinite(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

inline void write_json(std::ostringstream& os, const json& j, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close_pad(static_cast<std::size_t>(indent * depth), ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ",\n";
        first = false;
        os << pad << json(it.key()).dump() << ": ";
        write_json(os, it.value(), indent, depth + 1);
      }
      os << "\n" << close_pad << "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      os << "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) os << ",\n";
        os << pad;
        write_json(os, j[i], indent, depth + 1);
      }
      os << "\n" << close_pad << "]";
      return;
    }
    case json::value_t::number_float: {
      const double x = j.get<double>();
      os << (std::isfinite(x) ? format_double(x) : "null");
      return;
    }
    default:
      os << j.dump();
  }
}

}  // namespace detail

/// Pretty JSON with every float printed by %.17g.
inline std::string dump(const json& j) {
  std::ostringstream os;
  detail::write_json(os, j, 2, 0);
  os << "\n";
  return os.str();
}

/// 64-bit FNV-1a, hex encoded.
inline std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Writes through a temporary file in the same directory, then renames.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  write_atomic(path, dump(j));
}

/// Rows of doubles under a header line.
inline std::string csv(const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& rows) {
  std::ostringstream os;
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << format_double(r[i]);
    os << "\n";
  }
  return os.str();
}

/// x, u(x)
inline std::string field_csv(const Field& u, const std::string& name = "u") {
  std::vector<std::vector<double>> rows;
  for (int j = 0; j < u.size(); ++j) rows.push_back({u.grid().node(j), u[j]});
  return csv({"x", name}, rows);
}

/// kappa, Re u_hat, Im u_hat in ascending kappa.
inline std::string spectrum_csv(const Field& u) {
  const Eigen::VectorXcd c = u.spectrum();
  const auto& g = u.grid();
  std::vector<std::vector<double>> rows;
  for (int kappa = -g.size() / 2; kappa < g.size() / 2; ++kappa) {
    const int i = kappa < 0 ? kappa + g.size() : kappa;
    rows.push_back({double(kappa), c[i].real(), c[i].imag()});
  }
  return csv({"kappa", "re", "im"}, rows);
}

inline std::string eigenvalue_csv(const LinearizedOperator& lin) {
  std::vector<std::vector<double>> rows;
  for (Eigen::Index i = 0; i < lin.eigenvalues().size(); ++i)
    rows.push_back({double(i), lin.eigenvalues()[i]});
  return csv({"index", "eigenvalue"}, rows);
}

inline json symbol_json(const DispersionSymbol& s) {
  json j{{"kind", s.name()},
         {"order", s.order()},
         {"upsilon1", s.bounds().lower},
         {"upsilon2", s.bounds().upper},
         {"kappa0", s.bounds().kappa0}};
  if (s.kind() == SymbolKind::ilw) j["delta"] = s.parameter();
  if (s.kind() == SymbolKind::power) j["m"] = s.parameter();
  return j;
}

inline json nonlinearity_json(const Nonlinearity& nl) {
  if (nl.name() == "quadratic_ilw") return json{{"kind", "quadratic_ilw"}};
  return json{{"kind", "power"}, {"p", nl.p()}, {"c", nl.c()}};
}

inline json constraint_json(const Constraint& c) {
  return json{{"mode", to_string(c.mode)}, {"value", c.value}};
}

/// Sidecar metadata of a wave.
inline json wave_json(const TravelingWave& w) {
  json hist = json::array();
  for (const auto& h : w.history) hist.push_back(json{{"residual", h.residual}, {"step", h.step}});
  return json{{"L", w.grid().length()},
              {"N", w.grid().size()},
              {"omega", w.omega},
              {"A", w.A},
              {"symbol", symbol_json(w.symbol)},
              {"nonlinearity", nonlinearity_json(w.nonlinearity)},
              {"variant", to_string(w.variant)},
              {"constraint", constraint_json(w.constraint)},
              {"residual_norm", w.residual_norm},
              {"spectral_tail", spectral_tail(w.phi)},
              {"newton_history", hist}};
}

inline DispersionSymbol symbol_from_json(const json& j, double L) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "second_derivative") return DispersionSymbol::second_derivative(L);
  if (kind == "hilbert_derivative") return DispersionSymbol::hilbert_derivative(L);
  if (kind == "ilw") return DispersionSymbol::ilw(j.at("delta").get<double>(), L);
  if (kind == "power") return DispersionSymbol::power(j.at("m").get<double>(), L);
  throw ConfigError("unknown symbol kind '" + kind + "'");
}

inline Nonlinearity nonlinearity_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "quadratic_ilw") return Nonlinearity::quadratic_ilw();
  if (kind == "power") return Nonlinearity::power(j.at("p").get<int>(), j.value("c", 1.0));
  throw ConfigError("unknown nonlinearity kind '" + kind + "'");
}

inline Constraint constraint_from_json(const json& j) {
  const std::string mode = j.at("mode").get<std::string>();
  const double value = j.value("value", 0.0);
  if (mode == "zero_mean") return Constraint::zero_mean();
  if (mode == "fixed_A") return Constraint::fixed_A(value);
  if (mode == "fixed_mean") return Constraint::fixed_mean(value);
  throw ConfigError("unknown constraint mode '" + mode + "'");
}

inline Variant variant_from_string(const std::string& v) {
  if (v == "standard") return Variant::standard;
  if (v == "regularized") return Variant::regularized;
  throw ConfigError("unknown variant '" + v + "'");
}

/// Writes <stem>.csv and <stem>.json; `extra` is merged into the sidecar.
inline void write_wave(const std::filesystem::path& dir, const std::string& stem,
                       const TravelingWave& w, const json& extra = json::object()) {
  json side = wave_json(w);
  side["profile_csv"] = stem + ".csv";
  side.update(extra);
  write_atomic(dir / (stem + ".csv"), field_csv(w.phi, "phi"));
  write_json_file(dir / (stem + ".json"), side);
}

/// Loads a wave written by `write_wave` and recomputes its residual.
inline TravelingWave read_wave(const std::filesystem::path& sidecar) {
  std::ifstream in(sidecar);
  if (!in) throw ConfigError("cannot open wave file " + sidecar.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("wave sidecar is not valid JSON: " + std::string(e.what()));
  }
  try {
    const double L = j.at("L").get<double>();
    const int N = j.at("N").get<int>();
    const PeriodicGrid g(L, N);
    const auto csv_path = sidecar.parent_path() / j.at("profile_csv").get<std::string>();
    std::ifstream cs(csv_path);
    if (!cs) throw ConfigError("cannot open wave profile " + csv_path.string());
    std::string line;
    std::getline(cs, line);
    Eigen::VectorXd v(N);
    int count = 0;
    while (std::getline(cs, line) && count < N) {
      const auto comma = line.find(',');
      if (comma == std::string::npos) throw ConfigError("malformed wave profile line: " + line);
      v[count++] = std::stod(line.substr(comma + 1));
    }
    if (count != N) throw ConfigError("wave profile has " + std::to_string(count) + " rows, expected " + std::to_string(N));
    TravelingWave w{Field(g, v),
                    j.at("omega").get<double>(),
                    j.at("A").get<double>(),
                    symbol_from_json(j.at("symbol"), L),
                    nonlinearity_from_json(j.at("nonlinearity")),
                    variant_from_string(j.value("variant", "standard")),
                    constraint_from_json(j.at("constraint")),
                    0.0,
                    {}};
    w.residual_norm = residual(w).max_abs();
    return w;
  } catch (const json::exception& e) {
    throw ConfigError("wave sidecar is missing fields: " + std::string(e.what()));
  } catch (const DomainError& e) {
    throw ConfigError(std::string("wave sidecar is invalid: ") + e.what());
  }
}

}  // namespace periwave::io
