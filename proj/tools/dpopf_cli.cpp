// Copyright 2026 The dpopf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "dpopf/harness.hpp"

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kSolver = 3 };

struct Flags {
  dpopf::ExperimentConfig cfg;
  std::string algo = "admm";
  std::string sensitivity = "local-max";
  bool absolute_alpha = false;
};

void add_experiment_flags(CLI::App* cmd, Flags& f) {
  auto& c = f.cfg;
  cmd->add_option("--case", c.case_path, "case file (.json or MATPOWER .m)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--zones", c.zones_path, "zone partition JSON")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--algo", f.algo, "admm | sp-admm | dp-admm")
      ->check(CLI::IsMember({"admm", "sp-admm", "dp-admm"}))
      ->capture_default_str();
  cmd->add_option("--rho", c.admm.rho, "ADMM penalty")->capture_default_str();
  cmd->add_option("--max-iters", c.admm.max_iters, "iteration limit")->capture_default_str();
  cmd->add_option("--tol", c.admm.tol, "residual tolerance")->capture_default_str();
  cmd->add_option("--angle-scale", c.admm.angle_scale,
                  "unit of rho and tol angles in rad (0 = base MVA)")
      ->capture_default_str();
  cmd->add_option("--epsilon", c.privacy.epsilon, "privacy loss")->capture_default_str();
  cmd->add_option("--alpha", c.privacy.alpha_frac,
                  "adjacency as a fraction of the load (e.g. 0.05)")
      ->capture_default_str();
  cmd->add_flag("--absolute-alpha", f.absolute_alpha, "read --alpha as p.u. instead");
  cmd->add_option("--budget", c.privacy.attack_budget,
                  "iterations T the noise must cover under --scale-composition")
      ->capture_default_str();
  cmd->add_flag("--scale-composition", c.privacy.scale_composition,
                "scale dynamic noise by the budget T");
  cmd->add_option("--sensitivity", f.sensitivity, "static noise bound: global | local-max")
      ->check(CLI::IsMember({"global", "local-max"}))
      ->capture_default_str();
  cmd->add_option("--runs", c.runs, "Monte-Carlo runs")->capture_default_str();
  cmd->add_option("--seed", c.privacy.seed, "seed of run 0; run r uses seed + r")
      ->capture_default_str();
  cmd->add_option("--out", c.out_dir, "output directory")->capture_default_str();
}

void finish_flags(Flags& f) {
  f.cfg.algorithm = dpopf::parse_algorithm(f.algo);
  f.cfg.privacy.absolute_alpha = f.absolute_alpha;
  f.cfg.privacy.mode = f.sensitivity == "global" ? dpopf::SensitivityMode::GlobalBound
                                                 : dpopf::SensitivityMode::LocalMaxOverRun;
}

void report_run(const dpopf::RunBatch& b) {
  double loss = 0.0, iters = 0.0;
  int converged = 0;
  for (const auto& m : b.metrics) {
    loss += m.optimality_loss_pct;
    iters += m.iterations;
    converged += m.converged ? 1 : 0;
  }
  const double n = static_cast<double>(b.metrics.size());
  std::printf("runs %zu  converged %d  mean iterations %.2f  mean optimality loss %.4f%%\n",
              b.metrics.size(), converged, iters / n, loss / n);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed DC optimal power flow with differentially private consensus ADMM"};
  app.require_subcommand(1);

  Flags run_flags, atk_flags, sens_flags;
  auto* run = app.add_subcommand("run", "run an algorithm and write traces and metrics");
  add_experiment_flags(run, run_flags);

  auto* attack = app.add_subcommand("attack", "load inference sweep over alphas and budgets");
  add_experiment_flags(attack, atk_flags);
  dpopf::AttackCommand atk;
  attack->add_option("--target", atk.target_bus, "bus whose load is inferred")->required();
  attack->add_option("--budgets", atk.budgets, "observed iterations T (list)")
      ->delimiter(',')
      ->capture_default_str();
  attack->add_option("--alphas", atk.alphas, "adjacency fractions (list)")
      ->delimiter(',')
      ->capture_default_str();
  attack->add_option("--upsilon", atk.upsilon, "attack penalty weight")->capture_default_str();

  auto* sens = app.add_subcommand("sensitivity", "per-iteration local sensitivities");
  add_experiment_flags(sens, sens_flags);

  std::string convert_in, convert_out;
  auto* convert = app.add_subcommand("convert", "MATPOWER case to JSON");
  convert->add_option("--case", convert_in, "MATPOWER .m file")
      ->required()
      ->check(CLI::ExistingFile);
  convert->add_option("--out", convert_out, "JSON output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run) {
      finish_flags(run_flags);
      report_run(dpopf::cmd_run(run_flags.cfg));
    } else if (*attack) {
      finish_flags(atk_flags);
      const dpopf::ErrorMatrix m = dpopf::cmd_attack(atk_flags.cfg, atk);
      dpopf::write_error_matrix_csv(std::cout, m);
    } else if (*sens) {
      finish_flags(sens_flags);
      for (const auto& s : dpopf::cmd_sensitivity(sens_flags.cfg)) {
        std::printf("run %d zone %d max local %.6g global bound %.6g\n", s.run, s.zone,
                    s.max_local, s.global_bound);
      }
    } else if (*convert) {
      const dpopf::NetworkCase c = dpopf::cmd_convert(convert_in, convert_out);
      std::printf("%zu buses, %zu lines, %zu generators\n", c.num_buses(), c.lines.size(),
                  c.gens.size());
    }
  } catch (const dpopf::SolverError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolver;
  } catch (const dpopf::CaseError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kOk;
}
