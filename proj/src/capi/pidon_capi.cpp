#include "pidon/pidon.h"

#include <cstdlib>
#include <cmath>
#include <cstring>
#include <exception>
#include <memory>
#include <string>

#include <json.hpp>

#include "pidon/app/pipeline.hpp"
#include "pidon/error.hpp"
#include "pidon/version.hpp"

using namespace pidon;

struct pidon_config {
  app::RunConfig cfg;
};

struct pidon_solution {
  solver::FieldSolution sol;
  solver::SolverOptions options;
  std::string property_hash;
};

struct pidon_model {
  train::TrainState state;
  train::TrainResult result;
  std::string property_hash;
};

namespace {

thread_local std::string g_last_error;
pidon_warning_callback g_warn = nullptr;
void* g_warn_user = nullptr;

pidon_status status_of(ErrorCode c) {
  switch (c) {
    case ErrorCode::kInvalidInput: return PIDON_ERR_INVALID_INPUT;
    case ErrorCode::kDomain: return PIDON_ERR_DOMAIN;
    case ErrorCode::kSolver: return PIDON_ERR_SOLVER;
    case ErrorCode::kIo: return PIDON_ERR_IO;
    case ErrorCode::kVersionMismatch: return PIDON_ERR_VERSION_MISMATCH;
    case ErrorCode::kDiverged: return PIDON_ERR_DIVERGED;
  }
  return PIDON_ERR_INTERNAL;
}

template <class F>
pidon_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return PIDON_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return PIDON_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PIDON_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  require(p != nullptr, ErrorCode::kInvalidInput, std::string(what) + " is NULL");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void warn(const std::string& msg) {
  if (g_warn) g_warn(msg.c_str(), g_warn_user);
}

}  // namespace

extern "C" {

const char* pidon_version(void) { return kVersion; }
int pidon_abi_version(void) { return PIDON_ABI_VERSION; }
const char* pidon_last_error(void) { return g_last_error.c_str(); }

const char* pidon_status_name(pidon_status s) {
  switch (s) {
    case PIDON_OK: return "ok";
    case PIDON_ERR_INVALID_INPUT: return "invalid_input";
    case PIDON_ERR_DOMAIN: return "domain";
    case PIDON_ERR_SOLVER: return "solver";
    case PIDON_ERR_IO: return "io";
    case PIDON_ERR_VERSION_MISMATCH: return "version_mismatch";
    case PIDON_ERR_DIVERGED: return "diverged";
    case PIDON_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

void pidon_string_free(char* s) { std::free(s); }

void pidon_set_warning_callback(pidon_warning_callback cb, void* user) {
  g_warn = cb;
  g_warn_user = user;
}

pidon_status pidon_config_load(const char* path, pidon_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    auto c = std::make_unique<pidon_config>();
    if (path) c->cfg = app::load_run_config(path);
    c->cfg.validate();
    *out = c.release();
  });
}

pidon_status pidon_config_parse(const char* text, const char* base_dir, pidon_config** out) {
  return guarded([&] {
    need(text, "json_text");
    need(out, "out");
    *out = nullptr;
    auto c = std::make_unique<pidon_config>();
    c->cfg = app::parse_run_config(text, base_dir ? base_dir : "");
    *out = c.release();
  });
}

pidon_status pidon_config_set_seed(pidon_config* cfg, uint64_t seed) {
  return guarded([&] {
    need(cfg, "config");
    cfg->cfg.seed = seed;
  });
}

pidon_status pidon_config_set_design_seeds(pidon_config* cfg, uint64_t train_seed, uint64_t test_seed) {
  return guarded([&] {
    need(cfg, "config");
    cfg->cfg.train_design_seed = train_seed;
    cfg->cfg.test_design_seed = test_seed;
  });
}

pidon_status pidon_config_set_design_variable(pidon_config* cfg, const char* name, double value) {
  return guarded([&] {
    need(cfg, "config");
    need(name, "name");
    for (int i = 0; i < design::kNumVariables; ++i)
      if (std::strcmp(name, design::kVariableNames[i]) == 0) {
        require(std::isfinite(value) && value > 0, ErrorCode::kDomain,
                std::string("design variable '") + name + "' must be positive");
        cfg->cfg.design[i] = value;
        return;
      }
    fail(ErrorCode::kInvalidInput, std::string("unknown design variable '") + name + "'");
  });
}

pidon_status pidon_config_to_json(const pidon_config* cfg, char** out) {
  return guarded([&] {
    need(cfg, "config");
    need(out, "out");
    *out = dup(app::format_run_config(cfg->cfg));
  });
}

void pidon_config_free(pidon_config* cfg) { delete cfg; }

pidon_status pidon_simulate(const pidon_config* cfg, pidon_solution** out) {
  return guarded([&] {
    need(cfg, "config");
    need(out, "out");
    *out = nullptr;
    auto s = std::make_unique<pidon_solution>();
    const io::PropertySet props = app::properties(cfg->cfg);
    s->options = cfg->cfg.sim_options;
    s->property_hash = props.hash;
    s->sol = solver::solve(cfg->cfg.design, props, cfg->cfg.sim_grid, s->options);
    *out = s.release();
  });
}

pidon_status pidon_sample_designs(const pidon_config* cfg, pidon_design_set which, char** csv_out) {
  return guarded([&] {
    need(cfg, "config");
    need(csv_out, "out");
    const app::RunConfig& c = cfg->cfg;
    const bool train = which == PIDON_DESIGNS_TRAIN;
    require(train || which == PIDON_DESIGNS_TEST, ErrorCode::kInvalidInput, "unknown design set");
    const std::uint64_t seed = train ? c.train_design_seed : c.test_design_seed;
    const design::DesignSpace space = app::design_space(c);
    *csv_out = dup(design::format_design_csv(design::sample(space, train ? c.n_train : c.n_test, seed, c.lhs), seed,
                                             space.label));
  });
}

pidon_status pidon_solution_csv(const pidon_solution* s, char** out) {
  return guarded([&] {
    need(s, "solution");
    need(out, "out");
    *out = dup(solver::format_solution_csv(s->sol));
  });
}

pidon_status pidon_solution_manifest(const pidon_solution* s, char** out) {
  return guarded([&] {
    need(s, "solution");
    need(out, "out");
    *out = dup(solver::format_manifest(s->sol, s->options, s->property_hash));
  });
}

pidon_status pidon_solution_exotherm(const pidon_solution* s, double* T_max, double* t_s, double* x) {
  return guarded([&] {
    need(s, "solution");
    const solver::Exotherm e = solver::exotherm(s->sol);
    if (T_max) *T_max = e.T_max;
    if (t_s) *t_s = e.t_at;
    if (x) *x = e.x_at;
  });
}

pidon_status pidon_solution_probe(const pidon_solution* s, pidon_field field, double x, double t, double* out) {
  return guarded([&] {
    need(s, "solution");
    need(out, "out");
    require(field >= PIDON_FIELD_TOOL_TEMPERATURE && field <= PIDON_FIELD_DEGREE_OF_CURE, ErrorCode::kInvalidInput,
            "unknown field");
    *out = solver::probe(s->sol, x, t, static_cast<solver::Field>(field));
  });
}

void pidon_solution_free(pidon_solution* s) { delete s; }

pidon_status pidon_train(const pidon_config* cfg, const pidon_model* resume, const char* checkpoint_path,
                         pidon_epoch_callback cb, void* user, pidon_model** out) {
  return guarded([&] {
    need(cfg, "config");
    need(out, "out");
    *out = nullptr;
    const app::Problem p = app::make_problem(cfg->cfg);
    if (resume && resume->property_hash != p.props.hash)
      warn("resuming from a checkpoint built with other material properties");
    train::TrainHooks hooks;
    hooks.property_hash = p.props.hash;
    if (checkpoint_path) hooks.checkpoint_path = checkpoint_path;
    if (cb)
      hooks.after_epoch = [cb, user](const train::TrainState& s) {
        const train::HistoryRow& r = s.history.back();
        return cb(r.epoch, train::phase_name(r.phase), r.total, user) == 0;
      };
    auto m = std::make_unique<pidon_model>();
    app::TrainOutcome o = app::run_training(cfg->cfg, p, resume ? &resume->state : nullptr, hooks);
    m->state = std::move(o.state);
    m->result = std::move(o.result);
    m->property_hash = p.props.hash;
    *out = m.release();
  });
}

int pidon_model_diverged(const pidon_model* m) { return m && m->result.diverged ? 1 : 0; }
int pidon_model_epochs_done(const pidon_model* m) { return m ? m->state.next_epoch : -1; }

pidon_status pidon_model_history_csv(const pidon_model* m, char** out) {
  return guarded([&] {
    need(m, "model");
    need(out, "out");
    *out = dup(train::format_history_csv(m->state.history));
  });
}

pidon_status pidon_model_summary_json(const pidon_model* m, char** out) {
  return guarded([&] {
    need(m, "model");
    need(out, "out");
    nlohmann::json j;
    j["schema"] = "pidon.train_summary";
    j["epochs_done"] = m->state.next_epoch;
    j["diverged"] = m->result.diverged;
    j["message"] = m->result.message;
    j["property_hash"] = m->property_hash;
    j["seed"] = m->state.seed;
    j["parameters"] = m->state.triplet.g_tc.parameter_count() + m->state.triplet.g_tt.parameter_count() +
                      m->state.triplet.g_alpha.parameter_count();
    nlohmann::json fl;
    for (int i = 0; i < loss::LossBreakdown::kCount; ++i) fl[loss::LossBreakdown::name(i)] = m->result.final_loss[i];
    j["final_loss"] = fl;
    j["final_total_loss"] = m->result.final_total;
    *out = dup(j.dump(2) + "\n");
  });
}

pidon_status pidon_model_save(const pidon_model* m, const char* path) {
  return guarded([&] {
    need(m, "model");
    need(path, "path");
    train::save_checkpoint(path, m->state, {m->property_hash, true});
  });
}

pidon_status pidon_model_load(const char* path, pidon_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    auto m = std::make_unique<pidon_model>();
    train::CheckpointMeta meta;
    m->state = train::load_checkpoint(path, &meta);
    m->property_hash = meta.property_hash;
    *out = m.release();
  });
}

void pidon_model_free(pidon_model* m) { delete m; }

namespace {

void check_properties(const pidon_model* m, const io::PropertySet& props) {
  if (!m->property_hash.empty() && m->property_hash != props.hash)
    warn("model was trained with other material properties (" + m->property_hash + " vs " + props.hash + ")");
}

}  // namespace

pidon_status pidon_predict(const pidon_model* m, const pidon_config* cfg, pidon_solution** out) {
  return guarded([&] {
    need(m, "model");
    need(cfg, "config");
    need(out, "out");
    *out = nullptr;
    const io::PropertySet props = app::properties(cfg->cfg);
    check_properties(m, props);
    auto s = std::make_unique<pidon_solution>();
    s->sol = eval::prediction(m->state.triplet, cfg->cfg.design, cfg->cfg.eval);
    s->property_hash = m->property_hash;
    *out = s.release();
  });
}

pidon_status pidon_reference(const pidon_config* cfg, pidon_solution** out) {
  return guarded([&] {
    need(cfg, "config");
    need(out, "out");
    *out = nullptr;
    const io::PropertySet props = app::properties(cfg->cfg);
    auto s = std::make_unique<pidon_solution>();
    s->sol = eval::reference(cfg->cfg.design, props, cfg->cfg.eval, warn);
    s->options = cfg->cfg.eval.solver_options;
    s->property_hash = props.hash;
    *out = s.release();
  });
}

pidon_status pidon_evaluate(const pidon_model* m, const pidon_config* cfg, const char* designs_csv, char** out) {
  return guarded([&] {
    need(m, "model");
    need(cfg, "config");
    need(out, "out");
    const io::PropertySet props = app::properties(cfg->cfg);
    check_properties(m, props);
    std::vector<design::DesignPoint> designs;
    if (designs_csv)
      designs = design::parse_design_csv(designs_csv).designs;
    else
      designs = app::make_problem(cfg->cfg).test;
    const eval::Metrics metrics = eval::evaluate(m->state.triplet, designs, props, cfg->cfg.eval, warn);
    *out = dup(eval::format_metrics_json(metrics));
  });
}

pidon_status pidon_plot_data(const pidon_model* m, const pidon_config* cfg, char** out) {
  return guarded([&] {
    need(m, "model");
    need(cfg, "config");
    need(out, "out");
    const io::PropertySet props = app::properties(cfg->cfg);
    check_properties(m, props);
    const solver::FieldSolution ref = eval::reference(cfg->cfg.design, props, cfg->cfg.eval, warn);
    const solver::FieldSolution pred = eval::prediction(m->state.triplet, cfg->cfg.design, cfg->cfg.eval);
    *out = dup(eval::format_plot_data_csv(pred, ref, props.T_init));
  });
}

pidon_status pidon_ablate(const pidon_config* cfg, const char* kind, char** out) {
  return guarded([&] {
    need(cfg, "config");
    need(kind, "kind");
    need(out, "out");
    const app::AblationReport r = app::run_ablation(cfg->cfg, app::parse_ablation_kind(kind), warn);
    *out = dup(app::format_ablation_json(r));
  });
}

}  // extern "C"
