#pragma once

// Physics-informed loss components for an operator triplet.
//
// Everything is expressed in normalized units: temperatures as
// (T - T0) / (T_ref - T0), time as tau = t / H with H the global horizon.
// The heat equations therefore carry coefficients a H / L^2, the generation
// term bc_scale * b_c / (T_ref - T0), the cure ODE reads
// dalpha/dtau - H * rate(alpha, T), and the interface flux row is divided by
// the part conductance k_c / L_c.

#include <cstdint>
#include <vector>

#include "pidon/ad/tape.hpp"
#include "pidon/io/properties.hpp"
#include "pidon/op/operator.hpp"

namespace pidon::loss {

using op::PointBatch;

struct CollocationCounts {
  int designs_per_draw = 16;  ///< N per draw (capped by the training-set size)
  int interior = 2048;        ///< Q, per material
  int ic = 256;
  int bc = 256;
  int interface_temporal = 256;
  int continuity = 256;

  void validate() const;
};

struct CollocationSet {
  std::vector<int> designs;  ///< training-set indices of the designs in this draw
  PointBatch ic;             ///< (x, 0)
  PointBatch bc_top;         ///< part, x2 = 1
  PointBatch bc_bottom;      ///< tool, x1 = 0
  PointBatch interior_tool;
  PointBatch interior_part;  ///< also carries the cure ODE
  PointBatch if_left;        ///< tau on a subdomain boundary, decoder k - 1
  PointBatch if_right;       ///< same points, decoder k
  PointBatch ct_tool;        ///< x1 = 1
  PointBatch ct_part;        ///< x2 = 0, same tau as ct_tool
};

/// Uniform coordinates per category. Interior tau is stratified across the
/// subdomains in proportion to their widths, so each subdomain receives at
/// least floor(Q * width) points. Deterministic per seed.
CollocationSet sample_collocation(const CollocationCounts& counts, int n_designs,
                                  const std::vector<double>& boundaries, std::uint64_t seed);

/// Training designs with their per-design coefficients in normalized units.
struct LossProblem {
  io::PropertySet props;
  op::OperatorContext context;
  std::vector<design::DesignPoint> designs;
  std::vector<design::SensorizedInput> inputs;
  std::vector<process::CureCycleSpec> cycles;
  std::vector<double> diff_tool, diff_part;  ///< a H / L^2
  std::vector<double> biot_top, biot_bot;    ///< h L / k
  std::vector<double> flux_ratio;            ///< (k_t / L_t) / (k_c / L_c)
  double generation = 0.0;                   ///< b_c / (T_ref - T0) at bc_scale = 1
  double ic_T = 0.0;                         ///< normalized initial temperature

  static LossProblem build(const io::PropertySet& props, const op::OperatorContext& context,
                           const std::vector<design::DesignPoint>& designs);

  op::BranchInputs branch(const std::vector<int>& subset) const;
  /// Normalized air temperature for training design `d` at tau.
  double air(int d, double tau) const;
  /// Physical cure rate in 1/tau units with the guards used by the ODE loss.
  double ode_rate(double alpha, double T_hat) const;
};

struct LossBreakdown {
  double l_ic_T = 0, l_ic_alpha = 0;
  double l_bc_top = 0, l_bc_bot = 0;
  double l_pde_tool = 0, l_pde_part = 0, l_ode = 0;
  double l_if_temporal = 0;
  double l_ct_value = 0, l_ct_flux = 0;

  static constexpr int kCount = 10;
  static const char* name(int i);
  double& operator[](int i);
  double operator[](int i) const;
};

struct LossWeights {
  double w[LossBreakdown::kCount] = {1, 1, 1, 1, 1, 1, 1, 1, 1, 1};
};

/// Which operators a loss build is for: temperature phase, cure phase, or both.
enum class LossGroup { kTemperature, kCure, kAll };

/// Tape nodes of the loss components; components outside the group stay invalid.
struct LossTerms {
  ad::Var c[LossBreakdown::kCount];
  LossBreakdown values() const;
};

// Component builders. `u` holds the branch inputs of `set.designs`.
std::pair<ad::Var, ad::Var> loss_ic(ad::Tape& tape, const op::OperatorTriplet& tri, const LossProblem& prob,
                                    const CollocationSet& set, const op::BranchInputs& u, LossGroup group);
std::pair<ad::Var, ad::Var> loss_bc(ad::Tape& tape, const op::OperatorTriplet& tri, const LossProblem& prob,
                                    const CollocationSet& set, const op::BranchInputs& u);
struct PhysicsTerms {
  ad::Var pde_tool, pde_part, ode;
};
PhysicsTerms loss_physics(ad::Tape& tape, const op::OperatorTriplet& tri, const LossProblem& prob,
                          const CollocationSet& set, const op::BranchInputs& u, double bc_scale, LossGroup group);
/// Sum over the operators of `group` of the mean squared jump between adjacent decoders.
ad::Var loss_interface_temporal(ad::Tape& tape, const op::OperatorTriplet& tri, const CollocationSet& set,
                                const op::BranchInputs& u, LossGroup group);
std::pair<ad::Var, ad::Var> loss_continuity_material(ad::Tape& tape, const op::OperatorTriplet& tri,
                                                     const LossProblem& prob, const CollocationSet& set,
                                                     const op::BranchInputs& u);

LossTerms build_losses(ad::Tape& tape, const op::OperatorTriplet& tri, const LossProblem& prob,
                       const CollocationSet& set, double bc_scale, LossGroup group);

/// Weighted sum over the valid components.
ad::Var total_loss(ad::Tape& tape, const LossTerms& terms, const LossWeights& w);
double total_loss(const LossBreakdown& b, const LossWeights& w);

}  // namespace pidon::loss
