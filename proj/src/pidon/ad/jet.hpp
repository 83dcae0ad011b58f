#pragma once

// Order-2 forward jets carried through the tape.
//
// A JetBatch stores P query points for a layer of width w as a single
// w x (C*P) matrix. Column block 0 holds values; the remaining C-1 blocks hold
// first (and optionally pure second) derivatives with respect to each tracked
// network input. Linear layers act on all blocks at once, tanh layers apply
// the chain rule per block, and the whole computation stays on the tape so
// losses may use any channel.

#include <span>
#include <vector>

#include "pidon/ad/mlp.hpp"
#include "pidon/ad/tape.hpp"

namespace pidon::ad {

/// Scalar jet: value, d/dx_k and d2/dx_k2 for each tracked input k.
template <class S>
struct Jet2 {
  S value{};
  std::vector<S> d1;
  std::vector<S> d2;
};

struct TrackedInput {
  int index = 0;  ///< input coordinate
  int order = 2;  ///< 1 = first derivative only, 2 = first and second
};

class JetLayout {
 public:
  JetLayout() = default;
  explicit JetLayout(std::vector<TrackedInput> tracked);

  const std::vector<TrackedInput>& tracked() const { return tracked_; }
  int channels() const { return channels_; }
  int d1_channel(std::size_t k) const { return d1_[k]; }
  /// -1 when the coordinate is tracked to first order only.
  int d2_channel(std::size_t k) const { return d2_[k]; }
  /// Position of input `index` among the tracked coordinates, or -1.
  int find(int index) const;

  bool operator==(const JetLayout& o) const;

 private:
  std::vector<TrackedInput> tracked_;
  std::vector<int> d1_, d2_;
  int channels_ = 1;
};

struct JetBatch {
  Var data;  ///< width x (channels * points)
  JetLayout layout;
  Eigen::Index points = 0;

  Eigen::Index width() const { return data.rows(); }
  /// width x points slice of one channel.
  Var channel(int c) const { return slice_cols(data, c * points, points); }
  Var value() const { return channel(0); }
};

/// Seeds a jet for raw network inputs (rows = input coordinates, cols = points).
JetBatch seed_inputs(Tape& tape, const Matrix& inputs, const JetLayout& layout);

/// Wraps a plain node (no tracked inputs) as a jet.
JetBatch as_jet(Var values);

/// Affine layer l of `p` applied to every channel; bias enters the value block only.
JetBatch linear_jet(Tape& tape, const MlpParams& p, int layer, const JetBatch& x);

/// tanh with order-2 chain rule per tracked coordinate.
JetBatch tanh_jet(Tape& tape, const JetBatch& z);

/// Full network applied to a jet batch.
JetBatch mlp_forward_jet(Tape& tape, const MlpParams& p, const JetBatch& x);

/// Multiplies every channel by per-point factors `m` (width x points), which may
/// themselves be tape nodes. Used for the Hadamard merge with branch features.
JetBatch scale_channels(Tape& tape, const JetBatch& x, Var m);

/// Selects a subset of points (all channels).
JetBatch gather_points(Tape& tape, const JetBatch& x, const std::vector<int>& points);

/// Inverse of a partition into gathered parts: part k holds points idx[k].
JetBatch scatter_points(Tape& tape, const std::vector<JetBatch>& parts,
                        const std::vector<std::vector<int>>& idx, Eigen::Index total_points);

/// Sum over rows per channel (vanilla DeepONet inner product); output width 1.
JetBatch sum_rows(Tape& tape, const JetBatch& x);

/// Single-point convenience: jets of every network output at `input`.
std::vector<Jet2<double>> mlp_forward_jet(const MlpParams& p, std::span<const double> input,
                                          const JetLayout& layout);

}  // namespace pidon::ad
