// Copyright (c) 2026 scattersim developers.
// SPDX-License-Identifier: Apache-2.0
#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scattersim/cli.hpp"

// Exit codes: 0 success, 2 invalid configuration or input file, 3 numerical
// failure (aborted-trajectory threshold, norm drift), 4 empty-result or fit
// domain error, 1 anything else.

namespace {

struct Overrides {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool has_seed = false;
  int workers = -1;
  bool dry_run = false;
  bool halve_dt = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "Run manifest (sectioned key = value text)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "Output directory (overrides manifest)");
  cmd->add_option("--seed", o.seed, "Base seed (overrides manifest)")
      ->each([&o](const std::string&) { o.has_seed = true; });
  cmd->add_option("--workers", o.workers, "Worker threads (0: all cores)");
  cmd->add_flag("--dry-run", o.dry_run,
                "Validate and print resolved atomic-unit parameters, then stop");
  cmd->add_flag("--halve-dt", o.halve_dt, "Halve the time step for a convergence audit");
}

scattersim::io::Manifest build_manifest(const Overrides& o) {
  scattersim::io::Manifest man;
  if (!o.config.empty()) man = scattersim::io::load_manifest(o.config);
  if (o.has_seed) man.seed = o.seed;
  if (!o.out.empty()) man.out_dir = o.out;
  if (o.workers >= 0) man.workers = o.workers;
  return man;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace scattersim;

  CLI::App app{"Atom-surface scattering: classical Wigner ensembles and quantum "
               "wavepackets over a corrugated Morse wall with a dissipative bath"};
  app.set_version_flag("--version", io::version_string());
  app.require_subcommand(1);

  Overrides classical_opts, quantum_opts, bath_opts;
  auto* classical =
      app.add_subcommand("classical", "Trajectory ensembles over the (E_i, T) sweep");
  add_common(classical, classical_opts);
  auto* quantum =
      app.add_subcommand("quantum", "Bath-decoupled wavepacket run per incidence energy");
  add_common(quantum, quantum_opts);
  auto* bath = app.add_subcommand("bath-spectrum",
                                  "Print the discretized bath modes and couplings");
  bath->add_option("--config", bath_opts.config, "Run manifest")
      ->check(CLI::ExistingFile);

  std::string fit_csv;
  std::vector<double> fit_window{40.0, 60.0};
  auto* fit = app.add_subcommand("fit-rate", "Refit c*exp(-m t) on an emitted series");
  fit->add_option("csv", fit_csv, "Trapping-series CSV (t_ps,P_trap[,stderr])")
      ->required()
      ->check(CLI::ExistingFile);
  fit->add_option("--window", fit_window, "Fit window in ps")->expected(2);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*classical) {
      const auto man = build_manifest(classical_opts);
      return cli::cmd_classical(
          man, std::cout, {classical_opts.dry_run, classical_opts.halve_dt});
    }
    if (*quantum) {
      const auto man = build_manifest(quantum_opts);
      return cli::cmd_quantum(man, std::cout,
                              {quantum_opts.dry_run, quantum_opts.halve_dt});
    }
    if (*bath) {
      const auto man = build_manifest(bath_opts);
      return cli::cmd_bath_spectrum(man, std::cout);
    }
    if (*fit) {
      cli::cmd_fit_rate(fit_csv, fit_window[0], fit_window[1], std::cout);
      return 0;
    }
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const GridError& e) {
    std::cerr << "grid error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const EmptyResultError& e) {
    std::cerr << "empty result: " << e.what() << "\n";
    return 4;
  } catch (const FitDomainError& e) {
    std::cerr << "fit domain error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
