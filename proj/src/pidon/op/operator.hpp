#pragma once

// DeepONet with two branch nets merged by a Hadamard product, a trunk net on
// (x, tau) and one decoder per temporal subdomain.
//
//   G(u)(x, tau) = decoder_k( bn1(u.bn1) * bn2(u.bn2) * trunk(x, tau) ),  k = subdomain(tau)
//
// Outputs are normalized; OutputScale maps them to physical units.

#include <cstdint>
#include <string>
#include <vector>

#include "pidon/ad/jet.hpp"
#include "pidon/design/design.hpp"
#include "pidon/solver/solver.hpp"

namespace pidon::op {

using ad::Matrix;
using ad::MlpParams;
using ad::Vector;

inline constexpr int kTrunkInputs = 2;  ///< (x, tau)
inline constexpr int kInputX = 0;
inline constexpr int kInputTau = 1;

struct OperatorConfig {
  int q = 50;
  int hidden_layers = 5;
  int width = 50;
  std::vector<double> boundaries = {0.0, 0.25, 0.40, 0.48, 0.56, 0.64, 0.80, 1.0};
  /// Affine q -> 1 decoders (vanilla inner product + bias) instead of tanh networks.
  bool linear_decoder = false;

  int n_subdomains() const { return static_cast<int>(boundaries.size()) - 1; }
  std::vector<int> branch1_layers() const;
  std::vector<int> branch2_layers() const;
  std::vector<int> trunk_layers() const;
  std::vector<int> decoder_layers() const;
  void validate() const;
  bool operator==(const OperatorConfig&) const = default;
};

/// Evenly spaced boundaries for n subdomains.
std::vector<double> uniform_boundaries(int n);

/// k with b_k <= tau < b_{k+1}; tau = 1 maps to the last subdomain.
int subdomain_index(const std::vector<double>& boundaries, double tau);

/// Hadamard product of two branch outputs.
Vector branch_merge(const Vector& b1, const Vector& b2);

struct OutputScale {
  double offset = 0.0;
  double scale = 1.0;
  double to_physical(double u) const { return offset + scale * u; }
  double to_normalized(double v) const { return (v - offset) / scale; }
  bool operator==(const OutputScale&) const = default;
};

struct DeepONetModel {
  OperatorConfig config;
  MlpParams bn1, bn2, trunk;
  std::vector<MlpParams> decoders;
  OutputScale output;

  /// Glorot-uniform weights and zero biases, deterministic in seed. Linear
  /// decoders start as the plain sum (unit weights, zero bias).
  static DeepONetModel init(const OperatorConfig& config, std::uint64_t seed);

  /// Every parameter set in a fixed order (bn1, bn2, trunk, decoders...).
  std::vector<MlpParams*> parameter_sets();
  std::vector<const MlpParams*> parameter_sets() const;
  std::size_t parameter_count() const;
  bool operator==(const DeepONetModel& o) const;

  Vector merged_branch(const design::SensorizedInput& u) const;
  /// Normalized output at one query.
  double predict(const design::SensorizedInput& u, double x, double tau) const;
  /// Normalized outputs at coords (2 x P) for a precomputed merged branch vector.
  Vector predict_batch(const Vector& merged, const Matrix& coords) const;
};

/// Branch inputs for a batch of designs, one column per design.
struct BranchInputs {
  Matrix bn1;  ///< 4 x N
  Matrix bn2;  ///< 100 x N

  static BranchInputs from(const std::vector<design::SensorizedInput>& inputs);
  Eigen::Index designs() const { return bn1.cols(); }
};

/// Query points with the design each one belongs to. `decoder` optionally
/// forces the decoder per point (used at subdomain interfaces).
struct PointBatch {
  Matrix coords;  ///< 2 x P: (x, tau)
  std::vector<int> design;
  std::vector<int> decoder;

  Eigen::Index size() const { return coords.cols(); }
  void validate(Eigen::Index n_designs, int n_subdomains) const;
};

/// Normalized output jets (width 1) at every point, recorded on `tape`.
ad::JetBatch forward_jet(ad::Tape& tape, const DeepONetModel& m, const BranchInputs& u, const PointBatch& pts,
                         const ad::JetLayout& layout);

/// Normalization context shared by the three operators.
struct OperatorContext {
  design::DesignSpace space = design::DesignSpace::named("small");
  double T0 = 20.0;
  double T_ref = 233.0;  ///< max ht2 + 50
  double horizon = 0.0;  ///< s
  double alpha0 = 0.05;

  static OperatorContext for_space(const design::DesignSpace& space, double T0 = 20.0, double alpha0 = 0.05);
  double delta_T() const { return T_ref - T0; }
  design::SensorizedInput encode(const design::DesignPoint& d) const;
};

struct OperatorTriplet {
  DeepONetModel g_tc, g_tt, g_alpha;
  OperatorContext context;

  static OperatorTriplet init(const OperatorConfig& config, const OperatorContext& context, std::uint64_t seed);
  bool operator==(const OperatorTriplet& o) const;
};

struct PredictGrid {
  int n_tool = 41;
  int n_part = 41;
  int n_times = 201;
  double t_end = 0.0;  ///< <= 0 selects the context horizon
};

/// Dense prediction in physical units. alpha is clamped onto [0, 1]; the number
/// of clamped entries is returned in `alpha_clamped` when given.
solver::FieldSolution predict_field(const OperatorTriplet& triplet, const design::DesignPoint& d,
                                    const PredictGrid& grid, std::size_t* alpha_clamped = nullptr);

}  // namespace pidon::op
