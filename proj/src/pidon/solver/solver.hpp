#pragma once

// Finite-difference reference solver for the coupled tool/part problem.
//
// Unknowns per step are [T_tool(0..nt-1), T_part(0..nc-1)] in local
// coordinates. Interior nodes use Crank-Nicolson; the two Robin rows and the
// two interface rows (value, flux) are algebraic and imposed at t^{n+1} with
// second-order one-sided differences. Cure kinetics are advanced first at
// every part node with sub-stepped RK4 at the start-of-step temperature, and
// the resulting increment enters the part equation as a source.

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pidon/design/design.hpp"
#include "pidon/io/properties.hpp"
#include "pidon/process/model.hpp"

namespace pidon::solver {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Grid1D {
  int n_tool = 81;
  int n_part = 81;
  double dt = 1.0;     ///< s; shortened so that steps divide t_end evenly
  double t_end = 0.0;  ///< s; <= 0 selects the cure-cycle duration

  void validate() const;
};

struct SolverOptions {
  int kinetics_substeps = 2;
  int store_every = 1;  ///< keep every k-th step (the final step is always kept)
  double bc_scale = 1.0;  ///< multiplies the heat generation coefficient
  bool cooldown = false;
};

/// Optional manufactured-solution hooks. Sources are added to dT/dt and are
/// evaluated at the half step; the offsets are the prescribed values of the
/// boundary/interface residuals at t^{n+1}.
struct Forcing {
  std::function<double(double x, double t)> tool_source;
  std::function<double(double x, double t)> part_source;
  std::function<double(double t)> bottom;      ///< dT_t/dx1 - Bi_bot (T_t - Ta) at x1 = 0
  std::function<double(double t)> top;         ///< dT_c/dx2 - Bi_top (Ta - T_c) at x2 = 1
  std::function<double(double t)> jump_value;  ///< T_t(1) - T_c(0)
  std::function<double(double t)> jump_flux;   ///< (k_t/L_t) dT_t/dx1 - (k_c/L_c) dT_c/dx2
  std::function<double(double t)> air;         ///< replaces the cure-cycle air temperature
  std::function<double(double x)> tool_initial;
  std::function<double(double x)> part_initial;
};

struct SolveDiagnostics {
  int steps = 0;
  double dt = 0.0;
  double max_value_jump = 0.0;     ///< C
  double max_flux_jump_rel = 0.0;  ///< relative to the magnitude of the stencil terms
  double max_linear_residual = 0.0;
  std::size_t kinetics_clamped = 0;
};

struct FieldSolution {
  std::vector<double> times;  ///< s
  Matrix T_tool;              ///< times x n_tool, C
  Matrix T_part;              ///< times x n_part, C
  Matrix alpha;               ///< times x n_part
  design::DesignPoint design;
  Grid1D grid;
  SolveDiagnostics diag;

  double t_end() const { return times.empty() ? 0.0 : times.back(); }
};

FieldSolution solve(const design::DesignPoint& design, const io::PropertySet& props, const Grid1D& grid,
                    const SolverOptions& options = {}, const Forcing* forcing = nullptr);

struct Exotherm {
  double T_max = 0.0;
  double t_at = 0.0;
  double x_at = 0.0;
};

/// Maximum part temperature over stored frames; ties go to the earliest time, then the smallest x.
Exotherm exotherm(const FieldSolution& sol);

enum class Field { kToolTemperature, kPartTemperature, kDegreeOfCure };

/// Bilinear interpolation in (x, t) over the stored frames.
double probe(const FieldSolution& sol, double x, double t, Field field);

/// CSV rows (time_s, x_local, material, T_C, alpha); alpha is empty on tool rows.
std::string format_solution_csv(const FieldSolution& sol);
/// Inverse of format_solution_csv. Design and grid come from the manifest, if any.
FieldSolution parse_solution_csv(const std::string& text);

/// JSON run manifest: design, grid, options, property hash, code version, diagnostics.
std::string format_manifest(const FieldSolution& sol, const SolverOptions& options, const std::string& property_hash);
/// Restores design and grid from a manifest into `sol`.
void apply_manifest(FieldSolution& sol, const std::string& manifest_text);

}  // namespace pidon::solver
