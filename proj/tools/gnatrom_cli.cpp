// Copyright (c) 2026 The gnatrom Authors.
// SPDX-License-Identifier: Apache-2.0

// gnatrom command line: offline training, online GNAT runs, method
// comparison and error-bound diagnostics.

#include "gnatrom/error.hpp"
#include "gnatrom/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kSolver = 3, kIo = 4 };

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"GNAT model reduction for parameterized 1D Burgers"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  auto* offline = app.add_subcommand("offline", "Train: tier-I/II solves, bases, sample mesh, operators");
  offline->add_option("--config", config_path, "JSON configuration")->required();
  offline->add_option("--out", out_dir, "Output directory")->required();

  std::string manifest_path;
  std::string mu_text;
  auto* online = app.add_subcommand("online", "Run the GNAT reduced model at one input");
  online->add_option("--manifest", manifest_path, "manifest.json from the offline stage")->required();
  online->add_option("--mu", mu_text, "Input as a=<v>,b=<v>")->required();

  std::string methods_text = "gnat";
  std::string reference_path;
  std::string compare_out;
  auto* compare = app.add_subcommand("compare", "Compare reduced models with a tier-I reference");
  compare->add_option("--manifest", manifest_path, "manifest.json from the offline stage")->required();
  compare->add_option("--methods", methods_text,
                      "Comma list of gnat, tier2-pg, collocation-galerkin, collocation-ls, deim-like, all");
  compare->add_option("--reference", reference_path,
                      "Tier-I trajectory file; computed and written if missing")->required();
  compare->add_option("--mu", mu_text, "Input as a=<v>,b=<v> (default: manifest online input)");
  compare->add_option("--out", compare_out, "Report directory (default: <manifest dir>/compare)");

  auto* bounds = app.add_subcommand("bounds", "Error-bound diagnostics for the GNAT solution");
  bounds->add_option("--manifest", manifest_path, "manifest.json from the offline stage")->required();
  bounds->add_option("--mu", mu_text, "Input as a=<v>,b=<v> (default: manifest online input)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  if (offline->parsed()) {
    const auto config = gnatrom::load_offline_config(config_path);
    const auto manifest = gnatrom::run_offline(config, out_dir, &std::cerr);
    for (const auto& w : manifest.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << (manifest.directory / "manifest.json").string() << '\n';
    return kOk;
  }

  const auto manifest = gnatrom::load_manifest(manifest_path);
  std::optional<gnatrom::ParameterPoint> mu;
  if (!mu_text.empty()) mu = gnatrom::parse_parameter_point(mu_text);

  if (online->parsed()) {
    const auto result = gnatrom::run_online(manifest, *mu);
    nlohmann::json out = {
        {"ok", result.rom.status.ok},
        {"message", result.rom.status.message},
        {"steps", result.rom.num_states() - 1},
        {"wall_seconds", result.wall_seconds},
        {"total_iterations", result.rom.counters.total_iterations},
        {"max_residual_rows", result.rom.counters.max_residual_rows},
        {"max_state_entries", result.rom.counters.max_state_entries},
        {"trajectory", result.trajectory_path.string()},
    };
    std::cout << out.dump(2) << '\n';
    return result.rom.status.ok ? kOk : kSolver;
  }

  if (compare->parsed()) {
    const std::filesystem::path dir =
        compare_out.empty() ? manifest.directory / "compare" : std::filesystem::path(compare_out);
    const auto report =
        gnatrom::run_compare(manifest, split_list(methods_text), reference_path, dir, mu);
    std::cout << report.to_json().dump(2) << '\n';
    return kOk;
  }

  const auto report = gnatrom::run_bounds(manifest, mu);
  std::cout << "lipschitz_a (sampled) " << report.lipschitz.value << '\n'
            << "bounds written to " << report.csv_path.string() << '\n';
  const auto last = gnatrom::global_bounds(report.trace, report.trace.steps());
  std::cout << "final global bounds b/c/d: " << last[0] << ' ' << last[1] << ' ' << last[2] << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const gnatrom::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const gnatrom::DimensionError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const gnatrom::SolverError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kSolver;
  } catch (const gnatrom::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  }
}
