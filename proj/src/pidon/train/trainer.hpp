#pragma once

// Adam, the curriculum x sequential training schedule and checkpoints.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pidon/loss/losses.hpp"
#include "pidon/op/operator.hpp"

namespace pidon::train {

struct AdamState {
  std::vector<ad::ParamGradient> m, v;
  std::int64_t step = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  static AdamState zeros_like(const std::vector<ad::MlpParams*>& params);
  bool operator==(const AdamState& o) const;
};

/// One bias-corrected Adam update of every set in `params`; throws kDiverged on
/// non-finite gradients.
void adam_step(const std::vector<ad::MlpParams*>& params, const std::vector<ad::ParamGradient>& grads,
               AdamState& state, double rate);

enum class Phase { kTemperature, kCure };
const char* phase_name(Phase p);

struct TrainPlan {
  double lr0 = 1e-3;
  double decay_rate = 0.9;
  int decay_steps = 1000;
  int epochs = 200;
  int steps_per_epoch = 10;  ///< gradient steps per epoch, collocation resampled every step
  int block_epochs = 10;     ///< epochs per sequential phase before switching
  std::vector<double> curriculum = {0.0, 0.25, 0.5, 0.75, 1.0};
  double divergence_factor = 1e3;
  int checkpoint_every = 0;  ///< epochs; 0 disables periodic checkpoints
  loss::CollocationCounts counts;
  loss::LossWeights weights;

  void validate() const;
  /// lr0 * decay_rate^floor(step / decay_steps)
  double lr_at(std::int64_t step) const;

  struct EpochSlot {
    int stage = 0;
    double bc_scale = 1.0;
    Phase phase = Phase::kTemperature;
  };
  /// Stages share the epochs equally (earlier stages absorb no remainder: the
  /// last stages get one extra epoch each); within a stage phases alternate
  /// every block_epochs, starting with temperature.
  EpochSlot slot(int epoch) const;
};

struct HistoryRow {
  int epoch = 0;
  Phase phase = Phase::kTemperature;
  int stage = 0;
  double bc_scale = 0.0;
  loss::LossBreakdown loss;  ///< mean over the epoch's steps
  double total = 0.0;
  double lr = 0.0;
  bool operator==(const HistoryRow& o) const;
};

/// CSV with header epoch,phase,stage,bc_scale,<components>,total,lr.
/// Components not optimized in a phase are left empty.
std::string format_history_csv(const std::vector<HistoryRow>& rows);

struct TrainState {
  op::OperatorTriplet triplet;
  AdamState adam_T, adam_alpha;
  int next_epoch = 0;
  double stage_start_loss[2] = {0.0, 0.0};  ///< per phase; 0 = not yet recorded
  int stage_of_start[2] = {-1, -1};
  std::uint64_t seed = 0;
  std::vector<HistoryRow> history;

  static TrainState fresh(const op::OperatorTriplet& triplet, std::uint64_t seed);
  bool operator==(const TrainState& o) const;
};

std::vector<ad::MlpParams*> phase_params(op::OperatorTriplet& tri, Phase phase);

struct TrainResult {
  bool diverged = false;
  std::string message;
  loss::LossBreakdown final_loss;  ///< all components on a fixed evaluation draw
  double final_total = 0.0;
};

struct TrainHooks {
  /// Called after every epoch with the state; return false to stop.
  std::function<bool(const TrainState&)> after_epoch;
  /// Periodic checkpoint target; empty disables writing.
  std::string checkpoint_path;
  std::string property_hash;
};

/// Runs epochs [state.next_epoch, stop_epoch) (stop_epoch < 0 means the plan's total).
TrainResult train(TrainState& state, const loss::LossProblem& prob, const TrainPlan& plan, int stop_epoch = -1,
                  const TrainHooks& hooks = {});

/// Full loss breakdown on the fixed evaluation draw used by `train`.
loss::LossBreakdown evaluation_loss(const op::OperatorTriplet& tri, const loss::LossProblem& prob,
                                    const TrainPlan& plan, std::uint64_t seed, double bc_scale);

// Checkpoints: magic, format version, JSON header, raw little-endian doubles.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointMeta {
  std::string property_hash;
  bool has_optimizer = true;
};

std::string serialize_checkpoint(const TrainState& state, const CheckpointMeta& meta);
TrainState deserialize_checkpoint(const std::string& bytes, CheckpointMeta* meta = nullptr);
void save_checkpoint(const std::string& path, const TrainState& state, const CheckpointMeta& meta);
TrainState load_checkpoint(const std::string& path, CheckpointMeta* meta = nullptr);

}  // namespace pidon::train
