#include "pidon/app/pipeline.hpp"

#include <json.hpp>

#include "pidon/error.hpp"
#include "pidon/io/hash.hpp"

namespace pidon::app {

using nlohmann::json;

io::PropertySet properties(const RunConfig& c) {
  io::PropertySet p = c.properties_path.empty() ? io::default_properties() : io::load_properties(c.properties_path);
  if (!c.heat_generation) {
    p.materials.H_r = 0.0;
    p.hash = io::content_hash(p.hash + "|no-heat-generation");
  }
  return p;
}

design::DesignSpace narrowed(const design::DesignSpace& s, double fraction) {
  require(fraction > 0 && fraction <= 1, ErrorCode::kInvalidInput, "narrow fraction must lie in (0, 1]");
  design::DesignSpace out = s;
  if (fraction == 1.0) return out;
  for (auto& r : out.ranges) {
    const double m = r.mid(), h = 0.5 * fraction * (r.hi - r.lo);
    r = {m - h, m + h};
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", fraction);
  out.label = s.label + "@" + buf;
  return out;
}

design::DesignSpace design_space(const RunConfig& c) { return narrowed(design::DesignSpace::named(c.space), c.narrow); }

Problem make_problem(const RunConfig& c) {
  Problem p;
  p.props = properties(c);
  const design::DesignSpace space = design_space(c);
  p.context = op::OperatorContext::for_space(space, p.props.T_init, p.props.alpha_init);
  p.train = design::sample(space, c.n_train, c.train_design_seed, c.lhs);
  p.test = design::sample(space, c.n_test, c.test_design_seed, c.lhs);
  return p;
}

TrainOutcome run_training(const RunConfig& c, const Problem& p, const train::TrainState* resume,
                          const train::TrainHooks& hooks) {
  TrainOutcome out;
  out.state = resume ? *resume : train::TrainState::fresh(op::OperatorTriplet::init(c.op, p.context, c.seed), c.seed);
  require(out.state.triplet.g_tc.config == c.op, ErrorCode::kInvalidInput,
          "resume: checkpoint operator architecture differs from the config");
  const loss::LossProblem prob = loss::LossProblem::build(p.props, out.state.triplet.context, p.train);
  out.result = train::train(out.state, prob, c.plan, -1, hooks);
  return out;
}

AblationKind parse_ablation_kind(const std::string& s) {
  if (s == "decoder") return AblationKind::kDecoder;
  if (s == "curriculum") return AblationKind::kCurriculum;
  if (s == "domain_decomp") return AblationKind::kDomainDecomposition;
  fail(ErrorCode::kInvalidInput, "unknown ablation kind '" + s + "' (decoder, curriculum, domain_decomp)");
}

const char* ablation_kind_name(AblationKind k) {
  switch (k) {
    case AblationKind::kDecoder: return "decoder";
    case AblationKind::kCurriculum: return "curriculum";
    case AblationKind::kDomainDecomposition: return "domain_decomp";
  }
  return "?";
}

std::vector<std::pair<std::string, RunConfig>> ablation_variants(const RunConfig& c, AblationKind kind) {
  std::vector<std::pair<std::string, RunConfig>> v;
  RunConfig a = c, b = c;
  switch (kind) {
    case AblationKind::kDecoder:
      a.op.linear_decoder = false;
      b.op.linear_decoder = true;
      v = {{"nonlinear_decoder", a}, {"linear_decoder", b}};
      break;
    case AblationKind::kCurriculum:
      b.plan.curriculum = {1.0};
      v = {{"curriculum", a}, {"no_curriculum", b}};
      break;
    case AblationKind::kDomainDecomposition:
      for (int n : c.ablation_subdomains) {
        RunConfig d = c;
        d.op.boundaries = op::uniform_boundaries(n);
        v.emplace_back("n_subdomains_" + std::to_string(n), d);
      }
      break;
  }
  return v;
}

AblationReport run_ablation(const RunConfig& c, AblationKind kind, const eval::Warn& warn) {
  AblationReport r;
  r.kind = kind;
  const Problem p = make_problem(c);
  for (std::uint64_t seed : c.ablation_seeds)
    for (auto& [name, cfg] : ablation_variants(c, kind)) {
      cfg.seed = seed;
      AblationVariant v;
      v.name = name;
      v.seed = seed;
      v.outcome = run_training(cfg, p);
      v.metrics = eval::evaluate(v.outcome.state.triplet, p.test, p.props, cfg.eval, warn);
      v.interface_mismatch = eval::interface_mismatch(v.outcome.state.triplet, p.test);
      r.variants.push_back(std::move(v));
    }
  return r;
}

std::string format_ablation_json(const AblationReport& r) {
  json j;
  j["schema"] = "pidon.ablation";
  j["kind"] = ablation_kind_name(r.kind);
  json vs = json::array();
  for (const AblationVariant& v : r.variants) {
    json fl;
    for (int i = 0; i < loss::LossBreakdown::kCount; ++i) fl[loss::LossBreakdown::name(i)] = v.outcome.result.final_loss[i];
    vs.push_back({{"name", v.name},
                  {"seed", v.seed},
                  {"diverged", v.outcome.result.diverged},
                  {"final_total_loss", v.outcome.result.final_total},
                  {"final_loss", fl},
                  {"epochs_run", v.outcome.state.next_epoch},
                  {"rel_l2_T_part", v.metrics.T_part.rel_l2},
                  {"rel_l2_T_tool", v.metrics.T_tool.rel_l2},
                  {"rel_l2_alpha", v.metrics.alpha.rel_l2},
                  {"rel_l2_T_mid", v.metrics.T_mid.rel_l2},
                  {"max_abs_err_T_part_C", v.metrics.T_part.max_abs_err},
                  {"exotherm_err_C", v.metrics.exotherm_err},
                  {"exotherm_window_err_C", v.metrics.exotherm_window_err},
                  {"interface_mismatch", v.interface_mismatch},
                  {"history_csv", train::format_history_csv(v.outcome.state.history)}});
  }
  j["variants"] = vs;
  return j.dump(2) + "\n";
}

}  // namespace pidon::app
