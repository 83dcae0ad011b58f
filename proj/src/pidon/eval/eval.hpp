#pragma once

// Prediction-vs-reference metrics, the reference cache and plot-data export.

#include <functional>
#include <string>
#include <vector>

#include "pidon/io/properties.hpp"
#include "pidon/op/operator.hpp"
#include "pidon/solver/solver.hpp"

namespace pidon::eval {

struct FieldMetrics {
  double rel_l2 = 0.0;       ///< ||pred - ref|| / ||ref|| over the space-time grid
  double mae = 0.0;
  double max_abs_err = 0.0;  ///< per design, then averaged
};

struct DesignMetrics {
  FieldMetrics T_part, T_tool, alpha;
  FieldMetrics T_mid;             ///< part mid-point trace
  double exotherm_err = 0.0;      ///< C
  double exotherm_window_err = 0.0;  ///< max |dT| of the part inside the exotherm window, C
};

struct Metrics {
  FieldMetrics T_part, T_tool, alpha, T_mid;
  double exotherm_err = 0.0;
  double exotherm_window_err = 0.0;
  std::vector<DesignMetrics> per_design;
};

FieldMetrics field_metrics(const solver::Matrix& pred, const solver::Matrix& ref);

/// Both solutions must share times and node counts. The exotherm window is
/// |t - t_exo(ref)| <= window_fraction * t_end.
DesignMetrics compare(const solver::FieldSolution& pred, const solver::FieldSolution& ref, double window_fraction = 0.1);
Metrics average(std::vector<DesignMetrics> per_design);

struct EvalConfig {
  solver::Grid1D solver_grid;
  solver::SolverOptions solver_options{2, 10, 1.0, false};
  op::PredictGrid grid;  ///< t_end is replaced by each design's cycle duration
  std::string cache_dir;  ///< empty disables the cache
  int threads = 0;        ///< 0 = hardware concurrency
  double exotherm_window = 0.1;
};

using Warn = std::function<void(const std::string&)>;

/// Solver output resampled onto the evaluation grid of `d`.
solver::FieldSolution resample(const solver::FieldSolution& fine, const op::PredictGrid& grid);

/// Reference on the evaluation grid, loaded from or stored into the cache.
solver::FieldSolution reference(const design::DesignPoint& d, const io::PropertySet& props, const EvalConfig& cfg,
                                const Warn& warn = {});

/// Prediction on the same grid as `reference`.
solver::FieldSolution prediction(const op::OperatorTriplet& tri, const design::DesignPoint& d, const EvalConfig& cfg);

Metrics evaluate(const op::OperatorTriplet& tri, const std::vector<design::DesignPoint>& designs,
                 const io::PropertySet& props, const EvalConfig& cfg, const Warn& warn = {});

std::string format_metrics_json(const Metrics& m);

/// Mid-point traces: time_s,T_air_C,T_mid_pred_C,T_mid_ref_C,alpha_mid_pred,alpha_mid_ref.
std::string format_plot_data_csv(const solver::FieldSolution& pred, const solver::FieldSolution& ref, double T0 = 20.0);

/// Largest |decoder_{k-1} - decoder_k| of the normalized outputs at every
/// interior subdomain boundary, over all three operators, `n_x` x-points and the designs.
double interface_mismatch(const op::OperatorTriplet& tri, const std::vector<design::DesignPoint>& designs, int n_x = 21);

}  // namespace pidon::eval
