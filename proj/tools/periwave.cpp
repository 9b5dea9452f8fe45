#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "periwave/cli.hpp"

namespace {

using namespace periwave;

struct Options {
  std::optional<std::string> config;
  std::optional<std::string> preset;
  std::optional<std::string> out;
  std::optional<std::string> wave;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Options& o, bool takes_wave) {
  cmd->add_option("-c,--config", o.config, "JSON config file");
  cmd->add_option("-p,--preset", o.preset, "named preset (see presets/)");
  cmd->add_option("-o,--out", o.out, "output directory (overrides output.directory)");
  cmd->add_option("-s,--set,--override", o.overrides, "dotted key=value override, repeatable");
  if (takes_wave) cmd->add_option("-w,--wave", o.wave, "wave sidecar JSON written by 'solve'");
}

int run(const std::string& command, const Options& o) {
  std::optional<cli::RunConfig> parsed;
  try {
    nlohmann::json cfg = cli::load_config(o.preset, o.config, o.overrides);
    if (o.out) cfg["output"]["directory"] = *o.out;
    parsed = cli::parse_config(cfg);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return cli::kConfigError;
  }

  const cli::RunConfig& rc = *parsed;
  std::optional<TravelingWave> wave;
  try {
    if (o.wave) {
      wave = io::read_wave(*o.wave);
      std::cerr << command << ": loaded wave, residual_norm = " << io::format_double(wave->residual_norm) << "\n";
    } else if (command != "solve") {
      wave = cli::make_wave(rc);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return cli::kConfigError;
  } catch (const Error& e) {
    std::cerr << "solve failed: " << e.what() << "\n";
    return cli::kSolveError;
  }

  try {
    if (command == "solve") return cli::cmd_solve(rc, std::cerr);
    if (command == "certify") return cli::cmd_certify(rc, *wave, std::cerr);
    if (command == "sweep") return cli::cmd_sweep(rc, *wave, std::cerr);
    if (command == "evolve") return cli::cmd_evolve(rc, *wave, std::cerr);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return cli::kConfigError;
  } catch (const Error& e) {
    std::cerr << command << " failed: " << e.what() << "\n";
    return cli::kSolveError;
  }
  return cli::kConfigError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"periwave: periodic traveling waves of nonlocal dispersive equations and their orbital stability"};
  app.set_version_flag("--version", std::string(io::kToolVersion));
  app.require_subcommand(1);
  Options o;
  for (const auto& [name, help, takes_wave] :
       {std::tuple{"solve", "compute a traveling wave", false},
        std::tuple{"certify", "stability verdict for a wave", true},
        std::tuple{"sweep", "continue a family and certify each member", true},
        std::tuple{"evolve", "perturbed time evolution of a wave", true}}) {
    add_common(app.add_subcommand(name, help), o, takes_wave);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kConfigError;
  }
  return run(app.get_subcommands().front()->get_name(), o);
}
