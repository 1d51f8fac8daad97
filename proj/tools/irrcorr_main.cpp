// Copyright 2026 The irrcorr authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// irrcorr: decompose the total correlation of an n-qubit state into degrees
// of irreducible m-party correlations.

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "irrcorr/cli.hpp"
#include "irrcorr/version.hpp"

namespace {

void add_shared_options(CLI::App* cmd, irrcorr::CommandConfig& config,
                        std::string& format) {
  cmd->add_option("--state", config.state_spec,
                  "state spec: ghz:<n> | w:<n> | dicke:<n>:<k> | smolin | "
                  "random:<n>:seed=<u64> | file:<path>, optionally with "
                  "@p0=<float>")
      ->required();
  cmd->add_option("--steps", config.steps, "sweep grid size N (p0 = 1 - k/N)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--tol", config.tolerance,
                  "moment-residual convergence tolerance");
  cmd->add_option("--levels", config.levels,
                  "levels to report: all | comma list from 2..n");
  cmd->add_option("--out", config.out_path, "output path (default stdout)");
  cmd->add_option("--format", format, "output format: csv | structured")
      ->check(CLI::IsMember({"csv", "structured"}));
  cmd->add_option("--extrapolate", config.extrapolate,
                  "append p0->0 limit estimates (sweep only)");
  cmd->add_option("--theta-cap", config.theta_cap,
                  "boundary-divergence threshold on ||theta||_inf");
  cmd->add_option("--max-iter", config.max_iterations,
                  "iteration budget per projection solve");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"degrees of irreducible multiparty correlations in n-qubit "
               "states (maximum-entropy information projections)"};
  app.set_version_flag("--version", std::string("irrcorr ") + irrcorr::kVersion);
  app.require_subcommand(1);

  irrcorr::CommandConfig config;
  std::string format = "csv";

  CLI::App* compute = app.add_subcommand(
      "compute", "single-point decomposition of a full-rank state");
  CLI::App* sweep = app.add_subcommand(
      "sweep", "depolarizing continuation p0 = 1..0 with warm starts");
  CLI::App* verify = app.add_subcommand(
      "verify", "run certificates, sum rules, and oracle cross-checks");
  add_shared_options(compute, config, format);
  add_shared_options(sweep, config, format);
  add_shared_options(verify, config, format);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : irrcorr::kExitInvalid;
  }

  if (compute->parsed()) {
    config.command = irrcorr::CommandConfig::Command::Compute;
  } else if (sweep->parsed()) {
    config.command = irrcorr::CommandConfig::Command::Sweep;
  } else {
    config.command = irrcorr::CommandConfig::Command::Verify;
  }
  config.format = format == "csv" ? irrcorr::CommandConfig::Format::Csv
                                  : irrcorr::CommandConfig::Format::Structured;

  try {
    if (!config.out_path.empty()) {
      std::ofstream out(config.out_path);
      if (!out) {
        std::cerr << "irrcorr: cannot open \"" << config.out_path
                  << "\" for writing\n";
        return irrcorr::kExitInvalid;
      }
      return irrcorr::run_command(config, out, std::cerr);
    }
    return irrcorr::run_command(config, std::cout, std::cerr);
  } catch (const irrcorr::Error& e) {
    std::cerr << "irrcorr: " << e.what() << '\n';
    return irrcorr::kExitInvalid;
  }
}
