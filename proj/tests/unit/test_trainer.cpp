#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "pidon/error.hpp"
#include "pidon/train/trainer.hpp"

using namespace pidon;
using namespace pidon::train;
namespace train = pidon::train;

namespace {

op::OperatorConfig tiny_config() {
  op::OperatorConfig c;
  c.q = 6;
  c.hidden_layers = 2;
  c.width = 8;
  c.boundaries = op::uniform_boundaries(2);
  return c;
}

TrainPlan tiny_plan(int epochs = 4) {
  TrainPlan p;
  p.epochs = epochs;
  p.steps_per_epoch = 3;
  p.block_epochs = 1;
  p.curriculum = {0.0, 1.0};
  p.counts.designs_per_draw = 3;
  p.counts.interior = 32;
  p.counts.ic = p.counts.bc = p.counts.interface_temporal = p.counts.continuity = 16;
  return p;
}

struct Setup {
  op::OperatorContext ctx = op::OperatorContext::for_space(design::DesignSpace::named("small"));
  std::vector<design::DesignPoint> designs = design::sample(ctx.space, 4, 3);
  loss::LossProblem prob;
  TrainState state;
  explicit Setup(const io::PropertySet& props = io::default_properties()) {
    prob = loss::LossProblem::build(props, ctx, designs);
    state = TrainState::fresh(op::OperatorTriplet::init(tiny_config(), ctx, 17), 4242);
  }
};

ad::MlpParams scalar_params(double w, double b) {
  ad::MlpParams p = ad::MlpParams::zeros({1, 1});
  p.weights[0](0, 0) = w;
  p.biases[0](0) = b;
  return p;
}

ad::ParamGradient scalar_grad(const ad::MlpParams& like, double gw, double gb) {
  ad::ParamGradient g = ad::ParamGradient::zeros_like(like);
  g.weights[0](0, 0) = gw;
  g.biases[0](0) = gb;
  return g;
}

}  // namespace

TEST_CASE("learning-rate schedule: step decay every 1000 steps") {
  TrainPlan p;
  CHECK(p.lr_at(0) == doctest::Approx(1e-3));
  CHECK(p.lr_at(999) == doctest::Approx(1e-3));
  CHECK(p.lr_at(1000) == doctest::Approx(9e-4));
  CHECK(p.lr_at(2500) == doctest::Approx(8.1e-4));
}

TEST_CASE("adam: zero gradient is a no-op, first step moves by lr, three-step trajectory") {
  ad::MlpParams p = scalar_params(0.5, -0.25);
  AdamState s = AdamState::zeros_like({&p});
  adam_step({&p}, {scalar_grad(p, 0.0, 0.0)}, s, 1e-3);
  CHECK(p.weights[0](0, 0) == 0.5);
  CHECK(p.biases[0](0) == -0.25);

  ad::MlpParams q = scalar_params(0.5, -0.25);
  AdamState sq = AdamState::zeros_like({&q});
  adam_step({&q}, {scalar_grad(q, 3.0, -0.01)}, sq, 1e-3);
  // first bias-corrected step is lr * g/|g| up to eps
  CHECK(q.weights[0](0, 0) == doctest::Approx(0.5 - 1e-3).epsilon(1e-9));
  CHECK(q.biases[0](0) == doctest::Approx(-0.25 + 1e-3).epsilon(1e-6));

  // hand-rolled recurrence on the weight
  const double g[3] = {0.3, -1.2, 0.7};
  const double lr[3] = {1e-2, 5e-3, 2e-3};
  ad::MlpParams r = scalar_params(1.0, 0.0);
  AdamState sr = AdamState::zeros_like({&r});
  double w = 1.0, m = 0.0, v = 0.0;
  for (int k = 0; k < 3; ++k) {
    adam_step({&r}, {scalar_grad(r, g[k], 0.0)}, sr, lr[k]);
    m = 0.9 * m + 0.1 * g[k];
    v = 0.999 * v + 0.001 * g[k] * g[k];
    const double mh = m / (1 - std::pow(0.9, k + 1)), vh = v / (1 - std::pow(0.999, k + 1));
    w -= lr[k] * mh / (std::sqrt(vh) + 1e-8);
    CHECK(r.weights[0](0, 0) == doctest::Approx(w).epsilon(1e-14));
  }
  CHECK(sr.step == 3);
}

TEST_CASE("adam: non-finite gradient raises a divergence error") {
  ad::MlpParams p = scalar_params(0.5, 0.0);
  AdamState s = AdamState::zeros_like({&p});
  try {
    adam_step({&p}, {scalar_grad(p, std::nan(""), 0.0)}, s, 1e-3);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDiverged);
  }
}

TEST_CASE("schedule: stages share epochs, phases alternate per block, bc_scale ends at 1") {
  TrainPlan p;
  p.epochs = 200;
  int stage_len[5] = {};
  double last = -1;
  for (int e = 0; e < 200; ++e) {
    const auto s = p.slot(e);
    stage_len[s.stage]++;
    CHECK(s.bc_scale >= last);
    last = s.bc_scale;
  }
  for (int k = 0; k < 5; ++k) CHECK(stage_len[k] == 40);
  CHECK(p.slot(0).phase == Phase::kTemperature);
  CHECK(p.slot(10).phase == Phase::kCure);
  CHECK(p.slot(20).phase == Phase::kTemperature);
  CHECK(p.slot(199).bc_scale == 1.0);
  CHECK(p.slot(199).phase == Phase::kCure);

  p.epochs = 12;
  p.block_epochs = 1;
  int len[5] = {};
  for (int e = 0; e < 12; ++e) len[p.slot(e).stage]++;
  CHECK(len[0] == 2);
  CHECK(len[4] == 3);
  CHECK_THROWS(p.slot(12));

  p.curriculum = {0.0, 0.5};
  CHECK_THROWS(p.validate());
  p.curriculum = {0.5, 0.25, 1.0};
  CHECK_THROWS(p.validate());
}

TEST_CASE("train: lr = 0 leaves parameters bit-identical") {
  Setup s;
  TrainPlan plan = tiny_plan(2);
  plan.lr0 = 0.0;
  const op::OperatorTriplet before = s.state.triplet;
  const TrainResult r = train::train(s.state, s.prob, plan);
  CHECK_FALSE(r.diverged);
  CHECK(s.state.triplet == before);
  CHECK(s.state.history.size() == 2);
}

TEST_CASE("train: the frozen operator is untouched in each phase") {
  Setup s;
  TrainPlan plan = tiny_plan(2);
  plan.curriculum = {1.0};
  const op::OperatorTriplet t0 = s.state.triplet;
  train::train(s.state, s.prob, plan, 1);  // phase T only
  CHECK(s.state.triplet.g_alpha == t0.g_alpha);
  CHECK_FALSE(s.state.triplet.g_tc == t0.g_tc);
  CHECK_FALSE(s.state.triplet.g_tt == t0.g_tt);
  CHECK(s.state.adam_alpha.step == 0);
  const op::OperatorTriplet t1 = s.state.triplet;
  train::train(s.state, s.prob, plan, 2);  // phase alpha only
  CHECK(s.state.triplet.g_tc == t1.g_tc);
  CHECK(s.state.triplet.g_tt == t1.g_tt);
  CHECK_FALSE(s.state.triplet.g_alpha == t1.g_alpha);
  CHECK(s.state.adam_T.step == 3);
  CHECK(s.state.adam_alpha.step == 3);
}

TEST_CASE("train: curriculum stage 0 matches training with heat generation disabled") {
  io::PropertySet no_gen = io::default_properties();
  no_gen.materials.H_r = 0.0;
  Setup a, b(no_gen);
  TrainPlan plan = tiny_plan(4);
  train::train(a.state, a.prob, plan, 2);
  train::train(b.state, b.prob, plan, 2);
  CHECK(a.state.triplet == b.state.triplet);
  CHECK(a.state.history == b.state.history);
  // later stages differ once generation is scaled in
  train::train(a.state, a.prob, plan);
  train::train(b.state, b.prob, plan);
  CHECK_FALSE(a.state.triplet == b.state.triplet);
}

TEST_CASE("train: initial-condition loss drops over temperature epochs") {
  Setup s;
  TrainPlan plan = tiny_plan(1);
  plan.curriculum = {1.0};
  plan.block_epochs = 100;
  plan.epochs = 1;
  plan.steps_per_epoch = 60;
  plan.lr0 = 5e-3;
  for (double& w : plan.weights.w) w = 0.0;
  plan.weights.w[0] = 1.0;
  // start away from the initial temperature
  for (auto* m : {&s.state.triplet.g_tc, &s.state.triplet.g_tt})
    for (auto& d : m->decoders) d.biases.back().array() += 0.3;
  const double before = evaluation_loss(s.state.triplet, s.prob, plan, 1, 1.0).l_ic_T;
  const TrainResult r = train::train(s.state, s.prob, plan);
  CHECK_FALSE(r.diverged);
  CHECK(r.final_loss.l_ic_T < 0.5 * before);
}

TEST_CASE("train: deterministic for equal seeds, different for different seeds") {
  Setup a, b, c;
  c.state.seed = 1;
  TrainPlan plan = tiny_plan(2);
  const TrainResult ra = train::train(a.state, a.prob, plan);
  const TrainResult rb = train::train(b.state, b.prob, plan);
  train::train(c.state, c.prob, plan);
  CHECK(a.state == b.state);
  CHECK(ra.final_total == rb.final_total);
  CHECK_FALSE(a.state.triplet == c.state.triplet);
  const std::string csv = format_history_csv(a.state.history);
  CHECK(csv.rfind("epoch,phase,stage,bc_scale,l_ic_T,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}

TEST_CASE("train: divergence guard restores the last good state") {
  Setup s;
  TrainPlan plan = tiny_plan(4);
  plan.lr0 = 0.5;
  plan.divergence_factor = 1.0001;
  const TrainResult r = train::train(s.state, s.prob, plan);
  CHECK(r.diverged);
  CHECK(r.message.find("diverged") != std::string::npos);
  CHECK(s.state.history.size() == static_cast<std::size_t>(s.state.next_epoch));
  CHECK(std::isfinite(r.final_total));
}

TEST_CASE("checkpoint: bit-exact round trip and version check") {
  Setup s;
  TrainPlan plan = tiny_plan(2);
  train::train(s.state, s.prob, plan, 1);
  const std::string bytes = serialize_checkpoint(s.state, {"abc123", true});
  CheckpointMeta meta;
  const TrainState back = deserialize_checkpoint(bytes, &meta);
  CHECK(back == s.state);
  CHECK(meta.property_hash == "abc123");
  CHECK(serialize_checkpoint(back, meta) == bytes);

  const TrainState weights_only = deserialize_checkpoint(serialize_checkpoint(s.state, {"", false}));
  CHECK(weights_only.triplet == s.state.triplet);
  CHECK(weights_only.adam_T.step == s.state.adam_T.step);

  std::string bad = bytes;
  bad[8] = 9;
  try {
    deserialize_checkpoint(bad);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kVersionMismatch);
  }
  CHECK_THROWS(deserialize_checkpoint(bytes.substr(0, bytes.size() - 8)));
  CHECK_THROWS(deserialize_checkpoint("not a checkpoint at all"));
}

TEST_CASE("checkpoint: resuming reproduces the uninterrupted run") {
  const auto dir = std::filesystem::temp_directory_path() / "pidon_test_trainer";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "ckpt.bin").string();
  TrainPlan plan = tiny_plan(4);  // 12 steps in total
  plan.checkpoint_every = 1;

  Setup full;
  train::train(full.state, full.prob, plan);

  Setup part;
  train::train(part.state, part.prob, plan, 2, {nullptr, path, "h"});
  TrainState resumed = load_checkpoint(path);
  CHECK(resumed.next_epoch == 2);
  Setup ref;
  train::train(resumed, ref.prob, plan);
  CHECK(resumed == full.state);
  std::filesystem::remove_all(dir);
}
