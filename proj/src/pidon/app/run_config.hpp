#pragma once

// Run configuration shared by every CLI subcommand (JSON file).

#include <cstdint>
#include <string>
#include <vector>

#include "pidon/design/design.hpp"
#include "pidon/eval/eval.hpp"
#include "pidon/op/operator.hpp"
#include "pidon/solver/solver.hpp"
#include "pidon/train/trainer.hpp"

namespace pidon::app {

struct RunConfig {
  std::string properties_path;  ///< empty selects the built-in defaults
  bool heat_generation = true;  ///< false zeroes the resin heat of reaction

  std::string space = "small";
  double narrow = 1.0;  ///< keep this fraction of every range, centred on its midpoint
  int n_train = 40;
  int n_test = 4;
  std::uint64_t train_design_seed = 1;
  std::uint64_t test_design_seed = 2;
  bool lhs = false;

  std::uint64_t seed = 0;  ///< network init and collocation draws
  op::OperatorConfig op;
  train::TrainPlan plan;
  eval::EvalConfig eval;

  solver::Grid1D sim_grid;
  solver::SolverOptions sim_options{2, 60, 1.0, false};  ///< one stored row per simulated minute at dt = 1 s
  design::DesignPoint design;  ///< single design for simulate / predict / export-plot-data

  std::vector<int> ablation_subdomains = {1, 5, 7};
  std::vector<std::uint64_t> ablation_seeds = {0};

  void validate() const;
};

/// Unknown keys are errors. Relative paths resolve against `base_dir`.
RunConfig parse_run_config(const std::string& text, const std::string& base_dir = "");
RunConfig load_run_config(const std::string& path);
/// Fully resolved configuration; parse_run_config(format_run_config(c)) == c.
std::string format_run_config(const RunConfig& c);

}  // namespace pidon::app
