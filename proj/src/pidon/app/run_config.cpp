#include "pidon/app/run_config.hpp"

#include <cmath>
#include <filesystem>
#include <set>

#include <json.hpp>

#include "pidon/error.hpp"
#include "pidon/io/properties.hpp"

namespace pidon::app {

using nlohmann::json;

namespace {

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  require(j.is_object(), ErrorCode::kInvalidInput, "config: '" + where + "' must be an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items())
    require(allowed.count(k) > 0, ErrorCode::kInvalidInput, "config: unknown key '" + where + "." + k + "'");
}

template <class T>
void get(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void read_grid(const json& j, const std::string& where, solver::Grid1D& g, solver::SolverOptions& o) {
  only_keys(j, where, {"n_tool", "n_part", "dt", "t_end", "kinetics_substeps", "store_every", "cooldown"});
  get(j, "n_tool", g.n_tool);
  get(j, "n_part", g.n_part);
  get(j, "dt", g.dt);
  get(j, "t_end", g.t_end);
  get(j, "kinetics_substeps", o.kinetics_substeps);
  get(j, "store_every", o.store_every);
  get(j, "cooldown", o.cooldown);
}

json grid_json(const solver::Grid1D& g, const solver::SolverOptions& o) {
  return {{"n_tool", g.n_tool}, {"n_part", g.n_part}, {"dt", g.dt}, {"t_end", g.t_end},
          {"kinetics_substeps", o.kinetics_substeps}, {"store_every", o.store_every}, {"cooldown", o.cooldown}};
}

}  // namespace

void RunConfig::validate() const {
  require(narrow > 0 && narrow <= 1, ErrorCode::kInvalidInput, "config: design_space.narrow must lie in (0, 1]");
  require(n_train >= 1 && n_test >= 1, ErrorCode::kInvalidInput, "config: need at least one training and one test design");
  op.validate();
  plan.validate();
  require(eval.grid.n_part % 2 == 1, ErrorCode::kInvalidInput, "config: evaluation.grid.n_part must be odd");
  require(eval.exotherm_window > 0, ErrorCode::kInvalidInput, "config: evaluation.exotherm_window must be positive");
  require(!ablation_subdomains.empty() && !ablation_seeds.empty(), ErrorCode::kInvalidInput,
          "config: ablation lists must not be empty");
  for (int n : ablation_subdomains) require(n >= 1, ErrorCode::kInvalidInput, "config: subdomain counts must be >= 1");
  for (int i = 0; i < design::kNumVariables; ++i)
    require(std::isfinite(design[i]) && design[i] > 0, ErrorCode::kDomain,
            std::string("config: design.") + design::kVariableNames[i] + " must be positive");
}

RunConfig parse_run_config(const std::string& text, const std::string& base_dir) {
  RunConfig c;
  try {
    const json j = json::parse(text);
    only_keys(j, "", {"properties", "heat_generation", "design_space", "designs", "seed", "operator", "training",
                      "evaluation", "simulation", "design", "ablation"});
    if (j.contains("properties")) {
      std::filesystem::path p = j.at("properties").get<std::string>();
      if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
      c.properties_path = p.lexically_normal().string();
    }
    get(j, "heat_generation", c.heat_generation);
    get(j, "seed", c.seed);
    if (j.contains("design_space")) {
      const json& s = j.at("design_space");
      only_keys(s, "design_space", {"name", "narrow"});
      get(s, "name", c.space);
      get(s, "narrow", c.narrow);
    }
    if (j.contains("designs")) {
      const json& d = j.at("designs");
      only_keys(d, "designs", {"n_train", "n_test", "train_seed", "test_seed", "lhs"});
      get(d, "n_train", c.n_train);
      get(d, "n_test", c.n_test);
      get(d, "train_seed", c.train_design_seed);
      get(d, "test_seed", c.test_design_seed);
      get(d, "lhs", c.lhs);
    }
    if (j.contains("operator")) {
      const json& o = j.at("operator");
      only_keys(o, "operator", {"q", "hidden_layers", "width", "boundaries", "n_subdomains", "linear_decoder"});
      require(!(o.contains("boundaries") && o.contains("n_subdomains")), ErrorCode::kInvalidInput,
              "config: give either operator.boundaries or operator.n_subdomains");
      get(o, "q", c.op.q);
      get(o, "hidden_layers", c.op.hidden_layers);
      get(o, "width", c.op.width);
      get(o, "linear_decoder", c.op.linear_decoder);
      if (o.contains("boundaries")) c.op.boundaries = o.at("boundaries").get<std::vector<double>>();
      if (o.contains("n_subdomains")) c.op.boundaries = op::uniform_boundaries(o.at("n_subdomains").get<int>());
    }
    if (j.contains("training")) {
      const json& t = j.at("training");
      only_keys(t, "training", {"lr0", "decay_rate", "decay_steps", "epochs", "steps_per_epoch", "block_epochs",
                                "curriculum", "divergence_factor", "checkpoint_every", "collocation", "weights"});
      train::TrainPlan& p = c.plan;
      get(t, "lr0", p.lr0);
      get(t, "decay_rate", p.decay_rate);
      get(t, "decay_steps", p.decay_steps);
      get(t, "epochs", p.epochs);
      get(t, "steps_per_epoch", p.steps_per_epoch);
      get(t, "block_epochs", p.block_epochs);
      get(t, "curriculum", p.curriculum);
      get(t, "divergence_factor", p.divergence_factor);
      get(t, "checkpoint_every", p.checkpoint_every);
      if (t.contains("collocation")) {
        const json& q = t.at("collocation");
        only_keys(q, "training.collocation",
                  {"designs_per_draw", "interior", "ic", "bc", "interface_temporal", "continuity"});
        get(q, "designs_per_draw", p.counts.designs_per_draw);
        get(q, "interior", p.counts.interior);
        get(q, "ic", p.counts.ic);
        get(q, "bc", p.counts.bc);
        get(q, "interface_temporal", p.counts.interface_temporal);
        get(q, "continuity", p.counts.continuity);
      }
      if (t.contains("weights")) {
        const json& w = t.at("weights");
        require(w.is_object(), ErrorCode::kInvalidInput, "config: training.weights must be an object");
        for (const auto& [k, v] : w.items()) {
          int idx = -1;
          for (int i = 0; i < loss::LossBreakdown::kCount; ++i)
            if (k == loss::LossBreakdown::name(i)) idx = i;
          require(idx >= 0, ErrorCode::kInvalidInput, "config: unknown loss weight '" + k + "'");
          p.weights.w[idx] = v.get<double>();
        }
      }
    }
    if (j.contains("evaluation")) {
      const json& e = j.at("evaluation");
      only_keys(e, "evaluation", {"solver", "grid", "cache_dir", "threads", "exotherm_window"});
      if (e.contains("solver")) read_grid(e.at("solver"), "evaluation.solver", c.eval.solver_grid, c.eval.solver_options);
      if (e.contains("grid")) {
        const json& g = e.at("grid");
        only_keys(g, "evaluation.grid", {"n_tool", "n_part", "n_times"});
        get(g, "n_tool", c.eval.grid.n_tool);
        get(g, "n_part", c.eval.grid.n_part);
        get(g, "n_times", c.eval.grid.n_times);
      }
      if (e.contains("cache_dir")) {
        std::filesystem::path p = e.at("cache_dir").get<std::string>();
        if (!p.empty() && p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
        c.eval.cache_dir = p.lexically_normal().string();
      }
      get(e, "threads", c.eval.threads);
      get(e, "exotherm_window", c.eval.exotherm_window);
    }
    if (j.contains("simulation")) read_grid(j.at("simulation"), "simulation", c.sim_grid, c.sim_options);
    if (j.contains("design")) {
      const json& d = j.at("design");
      require(d.is_object(), ErrorCode::kInvalidInput, "config: 'design' must be an object");
      for (const auto& [k, v] : d.items()) {
        int idx = -1;
        for (int i = 0; i < design::kNumVariables; ++i)
          if (k == design::kVariableNames[i]) idx = i;
        require(idx >= 0, ErrorCode::kInvalidInput, "config: unknown design variable '" + k + "'");
        c.design[idx] = v.get<double>();
      }
    }
    if (j.contains("ablation")) {
      const json& a = j.at("ablation");
      only_keys(a, "ablation", {"n_subdomains", "seeds"});
      get(a, "n_subdomains", c.ablation_subdomains);
      get(a, "seeds", c.ablation_seeds);
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidInput, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  return parse_run_config(io::read_file(path), std::filesystem::path(path).parent_path().string());
}

std::string format_run_config(const RunConfig& c) {
  json j;
  if (!c.properties_path.empty()) j["properties"] = c.properties_path;
  j["heat_generation"] = c.heat_generation;
  j["design_space"] = {{"name", c.space}, {"narrow", c.narrow}};
  j["designs"] = {{"n_train", c.n_train}, {"n_test", c.n_test}, {"train_seed", c.train_design_seed},
                  {"test_seed", c.test_design_seed}, {"lhs", c.lhs}};
  j["seed"] = c.seed;
  j["operator"] = {{"q", c.op.q}, {"hidden_layers", c.op.hidden_layers}, {"width", c.op.width},
                   {"boundaries", c.op.boundaries}, {"linear_decoder", c.op.linear_decoder}};
  const train::TrainPlan& p = c.plan;
  json weights;
  for (int i = 0; i < loss::LossBreakdown::kCount; ++i) weights[loss::LossBreakdown::name(i)] = p.weights.w[i];
  j["training"] = {{"lr0", p.lr0}, {"decay_rate", p.decay_rate}, {"decay_steps", p.decay_steps},
                   {"epochs", p.epochs}, {"steps_per_epoch", p.steps_per_epoch}, {"block_epochs", p.block_epochs},
                   {"curriculum", p.curriculum}, {"divergence_factor", p.divergence_factor},
                   {"checkpoint_every", p.checkpoint_every},
                   {"collocation", {{"designs_per_draw", p.counts.designs_per_draw}, {"interior", p.counts.interior},
                                    {"ic", p.counts.ic}, {"bc", p.counts.bc},
                                    {"interface_temporal", p.counts.interface_temporal},
                                    {"continuity", p.counts.continuity}}},
                   {"weights", weights}};
  j["evaluation"] = {{"solver", grid_json(c.eval.solver_grid, c.eval.solver_options)},
                     {"grid", {{"n_tool", c.eval.grid.n_tool}, {"n_part", c.eval.grid.n_part}, {"n_times", c.eval.grid.n_times}}},
                     {"cache_dir", c.eval.cache_dir}, {"threads", c.eval.threads},
                     {"exotherm_window", c.eval.exotherm_window}};
  j["simulation"] = grid_json(c.sim_grid, c.sim_options);
  json d;
  for (int i = 0; i < design::kNumVariables; ++i) d[design::kVariableNames[i]] = c.design[i];
  j["design"] = d;
  j["ablation"] = {{"n_subdomains", c.ablation_subdomains}, {"seeds", c.ablation_seeds}};
  return j.dump(2) + "\n";
}

}  // namespace pidon::app
