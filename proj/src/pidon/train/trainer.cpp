#include "pidon/train/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>

#include <json.hpp>

#include "pidon/error.hpp"
#include "pidon/io/properties.hpp"

namespace pidon::train {

using nlohmann::json;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t step_seed(std::uint64_t seed, std::int64_t global_step) {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(global_step)));
}

constexpr std::uint64_t kEvalStream = 0x6576616c75617465ULL;

loss::LossGroup group_of(Phase p) {
  return p == Phase::kTemperature ? loss::LossGroup::kTemperature : loss::LossGroup::kCure;
}

bool in_group(int component, Phase p) {
  const bool cure = component == 1 || component == 6;
  if (component == 7) return true;
  return p == Phase::kCure ? cure : !cure;
}

}  // namespace

AdamState AdamState::zeros_like(const std::vector<ad::MlpParams*>& params) {
  AdamState s;
  for (const ad::MlpParams* p : params) {
    s.m.push_back(ad::ParamGradient::zeros_like(*p));
    s.v.push_back(ad::ParamGradient::zeros_like(*p));
  }
  return s;
}

bool AdamState::operator==(const AdamState& o) const {
  if (step != o.step || m.size() != o.m.size()) return false;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i].weights != o.m[i].weights || m[i].biases != o.m[i].biases || v[i].weights != o.v[i].weights ||
        v[i].biases != o.v[i].biases)
      return false;
  return beta1 == o.beta1 && beta2 == o.beta2 && eps == o.eps;
}

void adam_step(const std::vector<ad::MlpParams*>& params, const std::vector<ad::ParamGradient>& grads,
               AdamState& s, double rate) {
  require(params.size() == grads.size() && params.size() == s.m.size(), ErrorCode::kInvalidInput,
          "adam: parameter/gradient/state count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    require(grads[i].congruent(*params[i]) && s.m[i].congruent(*params[i]), ErrorCode::kInvalidInput,
            "adam: shape mismatch");
    require(grads[i].all_finite(), ErrorCode::kDiverged,
            "adam: non-finite gradient at optimizer step " + std::to_string(s.step));
  }
  ++s.step;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  auto update = [&](auto& theta, const auto& g, auto& m, auto& v) {
    m = s.beta1 * m + (1.0 - s.beta1) * g;
    v = s.beta2 * v + (1.0 - s.beta2) * g.cwiseProduct(g);
    theta.array() -= rate * (m.array() / c1) / ((v.array() / c2).sqrt() + s.eps);
  };
  for (std::size_t i = 0; i < params.size(); ++i) {
    ad::MlpParams& p = *params[i];
    for (int l = 0; l < p.num_layers(); ++l) {
      update(p.weights[l], grads[i].weights[l], s.m[i].weights[l], s.v[i].weights[l]);
      update(p.biases[l], grads[i].biases[l], s.m[i].biases[l], s.v[i].biases[l]);
    }
  }
}

const char* phase_name(Phase p) { return p == Phase::kTemperature ? "T" : "alpha"; }

void TrainPlan::validate() const {
  require(lr0 >= 0 && decay_rate > 0 && decay_steps >= 1, ErrorCode::kInvalidInput, "plan: bad learning-rate schedule");
  require(steps_per_epoch >= 1 && block_epochs >= 1, ErrorCode::kInvalidInput, "plan: bad epoch structure");
  require(!curriculum.empty() && epochs >= static_cast<int>(curriculum.size()), ErrorCode::kInvalidInput,
          "plan: need at least one epoch per curriculum stage");
  for (std::size_t k = 0; k < curriculum.size(); ++k) {
    require(curriculum[k] >= 0 && curriculum[k] <= 1, ErrorCode::kInvalidInput, "plan: bc_scale outside [0, 1]");
    if (k > 0) require(curriculum[k] >= curriculum[k - 1], ErrorCode::kInvalidInput, "plan: curriculum must not decrease");
  }
  require(curriculum.back() == 1.0, ErrorCode::kInvalidInput, "plan: curriculum must end at bc_scale = 1");
  require(divergence_factor > 1, ErrorCode::kInvalidInput, "plan: divergence factor must exceed 1");
  counts.validate();
}

double TrainPlan::lr_at(std::int64_t step) const {
  return lr0 * std::pow(decay_rate, static_cast<double>(step / decay_steps));
}

TrainPlan::EpochSlot TrainPlan::slot(int epoch) const {
  const int S = static_cast<int>(curriculum.size());
  const int base = epochs / S, extra = epochs % S;
  int start = 0;
  for (int k = 0; k < S; ++k) {
    const int len = base + (k >= S - extra ? 1 : 0);
    if (epoch < start + len) {
      const int local = epoch - start;
      return {k, curriculum[k], (local / block_epochs) % 2 == 0 ? Phase::kTemperature : Phase::kCure};
    }
    start += len;
  }
  fail(ErrorCode::kInvalidInput, "plan: epoch beyond the budget");
}

bool HistoryRow::operator==(const HistoryRow& o) const {
  for (int i = 0; i < loss::LossBreakdown::kCount; ++i)
    if (loss[i] != o.loss[i]) return false;
  return epoch == o.epoch && phase == o.phase && stage == o.stage && bc_scale == o.bc_scale && total == o.total &&
         lr == o.lr;
}

std::string format_history_csv(const std::vector<HistoryRow>& rows) {
  std::string out = "epoch,phase,stage,bc_scale";
  for (int i = 0; i < loss::LossBreakdown::kCount; ++i) out += std::string(",") + loss::LossBreakdown::name(i);
  out += ",total,lr\n";
  char buf[64];
  for (const HistoryRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%s,%d,%.17g", r.epoch, phase_name(r.phase), r.stage, r.bc_scale);
    out += buf;
    for (int i = 0; i < loss::LossBreakdown::kCount; ++i) {
      out += ',';
      if (in_group(i, r.phase)) {
        std::snprintf(buf, sizeof buf, "%.17g", r.loss[i]);
        out += buf;
      }
    }
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g\n", r.total, r.lr);
    out += buf;
  }
  return out;
}

TrainState TrainState::fresh(const op::OperatorTriplet& triplet, std::uint64_t seed) {
  TrainState s;
  s.triplet = triplet;
  s.seed = seed;
  s.adam_T = AdamState::zeros_like(phase_params(s.triplet, Phase::kTemperature));
  s.adam_alpha = AdamState::zeros_like(phase_params(s.triplet, Phase::kCure));
  return s;
}

bool TrainState::operator==(const TrainState& o) const {
  return triplet == o.triplet && adam_T == o.adam_T && adam_alpha == o.adam_alpha && next_epoch == o.next_epoch &&
         stage_start_loss[0] == o.stage_start_loss[0] && stage_start_loss[1] == o.stage_start_loss[1] &&
         stage_of_start[0] == o.stage_of_start[0] && stage_of_start[1] == o.stage_of_start[1] && seed == o.seed &&
         history == o.history;
}

std::vector<ad::MlpParams*> phase_params(op::OperatorTriplet& tri, Phase phase) {
  if (phase == Phase::kCure) return tri.g_alpha.parameter_sets();
  auto a = tri.g_tc.parameter_sets();
  for (ad::MlpParams* p : tri.g_tt.parameter_sets()) a.push_back(p);
  return a;
}

loss::LossBreakdown evaluation_loss(const op::OperatorTriplet& tri, const loss::LossProblem& prob,
                                    const TrainPlan& plan, std::uint64_t seed, double bc_scale) {
  const auto set = loss::sample_collocation(plan.counts, static_cast<int>(prob.designs.size()),
                                            tri.g_tc.config.boundaries, splitmix64(seed ^ kEvalStream));
  ad::Tape tape;
  return loss::build_losses(tape, tri, prob, set, bc_scale, loss::LossGroup::kAll).values();
}

TrainResult train(TrainState& state, const loss::LossProblem& prob, const TrainPlan& plan, int stop_epoch,
                  const TrainHooks& hooks) {
  plan.validate();
  const int end = stop_epoch < 0 ? plan.epochs : std::min(stop_epoch, plan.epochs);
  TrainResult result;
  TrainState last_good = state;
  const int n_designs = static_cast<int>(prob.designs.size());

  for (int epoch = state.next_epoch; epoch < end && !result.diverged; ++epoch) {
    const TrainPlan::EpochSlot slot = plan.slot(epoch);
    const int pi = slot.phase == Phase::kTemperature ? 0 : 1;
    AdamState& adam = pi == 0 ? state.adam_T : state.adam_alpha;
    HistoryRow row;
    row.epoch = epoch;
    row.phase = slot.phase;
    row.stage = slot.stage;
    row.bc_scale = slot.bc_scale;
    row.lr = plan.lr_at(adam.step);

    for (int s = 0; s < plan.steps_per_epoch; ++s) {
      const std::int64_t global_step = static_cast<std::int64_t>(epoch) * plan.steps_per_epoch + s;
      const auto set = loss::sample_collocation(plan.counts, n_designs, state.triplet.g_tc.config.boundaries,
                                                step_seed(state.seed, global_step));
      ad::Tape tape;
      const Phase other = slot.phase == Phase::kTemperature ? Phase::kCure : Phase::kTemperature;
      for (ad::MlpParams* p : phase_params(state.triplet, other)) tape.freeze(*p);
      const loss::LossTerms terms = loss::build_losses(tape, state.triplet, prob, set, slot.bc_scale, group_of(slot.phase));
      const ad::Var total = loss::total_loss(tape, terms, plan.weights);
      const double value = total.scalar();

      if (state.stage_of_start[pi] != slot.stage) {
        state.stage_of_start[pi] = slot.stage;
        state.stage_start_loss[pi] = value;
      }
      if (!std::isfinite(value) || value > plan.divergence_factor * state.stage_start_loss[pi]) {
        result.diverged = true;
        result.message = "loss diverged at epoch " + std::to_string(epoch) + " step " + std::to_string(s) +
                         " (phase " + phase_name(slot.phase) + ", loss " + std::to_string(value) +
                         "); restored the last good state";
        break;
      }
      const ad::Gradients g = tape.backward(total);
      std::vector<ad::ParamGradient> grads;
      auto params = phase_params(state.triplet, slot.phase);
      for (ad::MlpParams* p : params) grads.push_back(g.get(*p));
      adam_step(params, grads, adam, plan.lr_at(adam.step));

      const loss::LossBreakdown b = terms.values();
      for (int i = 0; i < loss::LossBreakdown::kCount; ++i) row.loss[i] += b[i] / plan.steps_per_epoch;
      row.total += value / plan.steps_per_epoch;
    }
    if (result.diverged) break;
    state.history.push_back(row);
    state.next_epoch = epoch + 1;
    last_good = state;
    if (!hooks.checkpoint_path.empty() && plan.checkpoint_every > 0 && state.next_epoch % plan.checkpoint_every == 0)
      save_checkpoint(hooks.checkpoint_path, state, {hooks.property_hash, true});
    if (hooks.after_epoch && !hooks.after_epoch(state)) break;
  }
  if (result.diverged) {
    state = last_good;
    if (!hooks.checkpoint_path.empty()) save_checkpoint(hooks.checkpoint_path, state, {hooks.property_hash, true});
  }
  const double final_scale = state.next_epoch > 0 ? plan.slot(state.next_epoch - 1).bc_scale : plan.curriculum.front();
  result.final_loss = evaluation_loss(state.triplet, prob, plan, state.seed, final_scale);
  result.final_total = loss::total_loss(result.final_loss, plan.weights);
  return result;
}

// --- checkpoints -----------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'P', 'I', 'D', 'O', 'N', 'C', 'K', 'P'};

json config_json(const op::OperatorConfig& c) {
  return {{"q", c.q},
          {"hidden_layers", c.hidden_layers},
          {"width", c.width},
          {"boundaries", c.boundaries},
          {"linear_decoder", c.linear_decoder}};
}

op::OperatorConfig config_from(const json& j) {
  op::OperatorConfig c;
  c.q = j.at("q");
  c.hidden_layers = j.at("hidden_layers");
  c.width = j.at("width");
  c.boundaries = j.at("boundaries").get<std::vector<double>>();
  c.linear_decoder = j.at("linear_decoder");
  c.validate();
  return c;
}

json context_json(const op::OperatorContext& c) {
  json ranges = json::array();
  for (const auto& r : c.space.ranges) ranges.push_back({r.lo, r.hi});
  return {{"space", c.space.label}, {"ranges", ranges}, {"T0", c.T0},
          {"T_ref", c.T_ref},      {"horizon", c.horizon}, {"alpha0", c.alpha0}};
}

op::OperatorContext context_from(const json& j) {
  op::OperatorContext c;
  c.space.label = j.at("space");
  const json& r = j.at("ranges");
  require(r.size() == design::kNumVariables, ErrorCode::kInvalidInput, "checkpoint: bad design ranges");
  for (int i = 0; i < design::kNumVariables; ++i) c.space.ranges[i] = {r[i][0].get<double>(), r[i][1].get<double>()};
  c.T0 = j.at("T0");
  c.T_ref = j.at("T_ref");
  c.horizon = j.at("horizon");
  c.alpha0 = j.at("alpha0");
  return c;
}

struct Writer {
  std::string out;
  void doubles(const double* p, std::size_t n) { out.append(reinterpret_cast<const char*>(p), n * sizeof(double)); }
  void params(const ad::MlpParams& p) {
    for (int l = 0; l < p.num_layers(); ++l) {
      doubles(p.weights[l].data(), p.weights[l].size());
      doubles(p.biases[l].data(), p.biases[l].size());
    }
  }
  void grad(const ad::ParamGradient& g) {
    for (std::size_t l = 0; l < g.weights.size(); ++l) {
      doubles(g.weights[l].data(), g.weights[l].size());
      doubles(g.biases[l].data(), g.biases[l].size());
    }
  }
};

struct Reader {
  const std::string& in;
  std::size_t pos;
  void doubles(double* p, std::size_t n) {
    const std::size_t bytes = n * sizeof(double);
    require(pos + bytes <= in.size(), ErrorCode::kIo, "checkpoint: truncated payload");
    std::memcpy(p, in.data() + pos, bytes);
    pos += bytes;
  }
  void params(ad::MlpParams& p) {
    for (int l = 0; l < p.num_layers(); ++l) {
      doubles(p.weights[l].data(), p.weights[l].size());
      doubles(p.biases[l].data(), p.biases[l].size());
    }
  }
  void grad(ad::ParamGradient& g) {
    for (std::size_t l = 0; l < g.weights.size(); ++l) {
      doubles(g.weights[l].data(), g.weights[l].size());
      doubles(g.biases[l].data(), g.biases[l].size());
    }
  }
};

json history_json(const std::vector<HistoryRow>& rows) {
  json a = json::array();
  for (const HistoryRow& r : rows) {
    std::vector<double> l(loss::LossBreakdown::kCount);
    for (int i = 0; i < loss::LossBreakdown::kCount; ++i) l[i] = r.loss[i];
    a.push_back({{"epoch", r.epoch}, {"phase", phase_name(r.phase)}, {"stage", r.stage}, {"bc_scale", r.bc_scale},
                 {"loss", l}, {"total", r.total}, {"lr", r.lr}});
  }
  return a;
}

std::vector<HistoryRow> history_from(const json& a) {
  std::vector<HistoryRow> rows;
  for (const json& j : a) {
    HistoryRow r;
    r.epoch = j.at("epoch");
    r.phase = j.at("phase") == "T" ? Phase::kTemperature : Phase::kCure;
    r.stage = j.at("stage");
    r.bc_scale = j.at("bc_scale");
    const auto l = j.at("loss").get<std::vector<double>>();
    for (int i = 0; i < loss::LossBreakdown::kCount; ++i) r.loss[i] = l.at(i);
    r.total = j.at("total");
    r.lr = j.at("lr");
    rows.push_back(r);
  }
  return rows;
}

const op::DeepONetModel* models(const op::OperatorTriplet& t, int i) {
  return i == 0 ? &t.g_tc : i == 1 ? &t.g_tt : &t.g_alpha;
}

}  // namespace

std::string serialize_checkpoint(const TrainState& s, const CheckpointMeta& meta) {
  json h;
  h["format"] = "pidon.checkpoint";
  h["config"] = config_json(s.triplet.g_tc.config);
  h["context"] = context_json(s.triplet.context);
  h["output_T"] = {s.triplet.g_tc.output.offset, s.triplet.g_tc.output.scale};
  h["output_alpha"] = {s.triplet.g_alpha.output.offset, s.triplet.g_alpha.output.scale};
  h["seed"] = s.seed;
  h["property_hash"] = meta.property_hash;
  h["has_optimizer"] = meta.has_optimizer;
  h["next_epoch"] = s.next_epoch;
  h["stage_start_loss"] = {s.stage_start_loss[0], s.stage_start_loss[1]};
  h["stage_of_start"] = {s.stage_of_start[0], s.stage_of_start[1]};
  h["adam_steps"] = {s.adam_T.step, s.adam_alpha.step};
  h["history"] = history_json(s.history);
  const std::string header = h.dump();

  Writer w;
  w.out.append(kMagic, sizeof kMagic);
  const std::uint32_t version = kCheckpointVersion;
  w.out.append(reinterpret_cast<const char*>(&version), sizeof version);
  const std::uint64_t len = header.size();
  w.out.append(reinterpret_cast<const char*>(&len), sizeof len);
  w.out += header;
  for (int i = 0; i < 3; ++i)
    for (const ad::MlpParams* p : models(s.triplet, i)->parameter_sets()) w.params(*p);
  if (meta.has_optimizer)
    for (const AdamState* a : {&s.adam_T, &s.adam_alpha})
      for (std::size_t k = 0; k < a->m.size(); ++k) {
        w.grad(a->m[k]);
        w.grad(a->v[k]);
      }
  return w.out;
}

TrainState deserialize_checkpoint(const std::string& bytes, CheckpointMeta* meta_out) {
  require(bytes.size() >= 20 && std::memcmp(bytes.data(), kMagic, sizeof kMagic) == 0, ErrorCode::kIo,
          "checkpoint: not a checkpoint file");
  std::uint32_t version = 0;
  std::memcpy(&version, bytes.data() + 8, sizeof version);
  require(version == kCheckpointVersion, ErrorCode::kVersionMismatch,
          "checkpoint: format version " + std::to_string(version) + ", expected " + std::to_string(kCheckpointVersion));
  std::uint64_t len = 0;
  std::memcpy(&len, bytes.data() + 12, sizeof len);
  require(20 + len <= bytes.size(), ErrorCode::kIo, "checkpoint: truncated header");
  TrainState s;
  CheckpointMeta meta;
  try {
    const json h = json::parse(bytes.substr(20, len));
    require(h.at("format") == "pidon.checkpoint", ErrorCode::kIo, "checkpoint: wrong format tag");
    const op::OperatorConfig cfg = config_from(h.at("config"));
    const op::OperatorContext ctx = context_from(h.at("context"));
    s.triplet = op::OperatorTriplet::init(cfg, ctx, 0);
    s.triplet.g_tc.output = s.triplet.g_tt.output = {h.at("output_T")[0], h.at("output_T")[1]};
    s.triplet.g_alpha.output = {h.at("output_alpha")[0], h.at("output_alpha")[1]};
    s.seed = h.at("seed");
    meta.property_hash = h.at("property_hash");
    meta.has_optimizer = h.at("has_optimizer");
    s.next_epoch = h.at("next_epoch");
    s.stage_start_loss[0] = h.at("stage_start_loss")[0];
    s.stage_start_loss[1] = h.at("stage_start_loss")[1];
    s.stage_of_start[0] = h.at("stage_of_start")[0];
    s.stage_of_start[1] = h.at("stage_of_start")[1];
    s.adam_T = AdamState::zeros_like(phase_params(s.triplet, Phase::kTemperature));
    s.adam_alpha = AdamState::zeros_like(phase_params(s.triplet, Phase::kCure));
    s.adam_T.step = h.at("adam_steps")[0];
    s.adam_alpha.step = h.at("adam_steps")[1];
    s.history = history_from(h.at("history"));
  } catch (const json::exception& e) {
    fail(ErrorCode::kIo, std::string("checkpoint: bad header: ") + e.what());
  }
  Reader r{bytes, 20 + len};
  for (auto* m : {&s.triplet.g_tc, &s.triplet.g_tt, &s.triplet.g_alpha})
    for (ad::MlpParams* p : m->parameter_sets()) r.params(*p);
  if (meta.has_optimizer)
    for (AdamState* a : {&s.adam_T, &s.adam_alpha})
      for (std::size_t k = 0; k < a->m.size(); ++k) {
        r.grad(a->m[k]);
        r.grad(a->v[k]);
      }
  require(r.pos == bytes.size(), ErrorCode::kIo, "checkpoint: trailing bytes");
  if (meta_out) *meta_out = meta;
  return s;
}

void save_checkpoint(const std::string& path, const TrainState& state, const CheckpointMeta& meta) {
  io::write_file_atomic(path, serialize_checkpoint(state, meta));
}

TrainState load_checkpoint(const std::string& path, CheckpointMeta* meta) {
  return deserialize_checkpoint(io::read_file(path), meta);
}

}  // namespace pidon::train
