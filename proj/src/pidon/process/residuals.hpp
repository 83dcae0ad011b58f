#pragma once

// Residuals of the heat equations, Robin boundary conditions and tool/part
// continuity in local coordinates x1 (tool) and x2 (part), both on [0, 1].
//
// Every residual is linear in the jet, so the generic forms below accept any
// consistent scaling: losses feed normalized temperatures and normalized time
// with correspondingly scaled coefficients, unit tests feed physical values.
// S is the scalar type (double, or an ad::Var row of points); coefficient
// types may be plain doubles or per-point constant rows.

#include <utility>

#include "pidon/ad/jet.hpp"
#include "pidon/error.hpp"
#include "pidon/process/model.hpp"

namespace pidon::process {

/// Jet slots: coordinate 0 is the local spatial coordinate, 1 is time.
inline constexpr std::size_t kSpace = 0;
inline constexpr std::size_t kTime = 1;

using ad::Jet2;

/// dT/dt - D * d2T/dx2
template <class S, class C>
S heat_residual(const Jet2<S>& T, const C& diffusion) {
  return T.d1[kTime] - diffusion * T.d2[kSpace];
}

/// dT/dt - D * d2T/dx2 - G * dalpha/dt
template <class S, class C, class G>
S heat_residual_with_source(const Jet2<S>& T, const S& alpha_rate, const C& diffusion, const G& generation) {
  return T.d1[kTime] - diffusion * T.d2[kSpace] - generation * alpha_rate;
}

/// Top surface, x2 = 1: dT/dx2 - Bi_top * (Ta - T)
template <class S, class A, class C>
S robin_top_residual(const Jet2<S>& T, const A& air, const C& biot) {
  return T.d1[kSpace] - biot * (air - T.value);
}

/// Bottom surface, x1 = 0: dT/dx1 - Bi_bot * (T - Ta)
template <class S, class A, class C>
S robin_bottom_residual(const Jet2<S>& T, const A& air, const C& biot) {
  return T.d1[kSpace] - biot * (T.value - air);
}

/// (k_t/L_t) dT_t/dx1 - (k_c/L_c) dT_c/dx2 at the tool/part interface.
template <class S, class C>
S interface_flux_residual(const Jet2<S>& tool, const Jet2<S>& part, const C& tool_conductance,
                          const C& part_conductance) {
  return tool_conductance * tool.d1[kSpace] - part_conductance * part.d1[kSpace];
}

// Physical-unit forms (seconds, C).

inline void require_positive_length(double L) {
  require(L > 0, ErrorCode::kDomain, "material thickness must be positive");
}

inline double pde_residual_tool(const Jet2<double>& T, const MaterialProps& props, double L_t) {
  require_positive_length(L_t);
  return heat_residual(T, props.a_t() / (L_t * L_t));
}

/// `bc_scale` in [0, 1] multiplies the heat generation coefficient.
inline double pde_residual_part(const Jet2<double>& T, double alpha_rate, const MaterialProps& props, double L_c,
                                double bc_scale) {
  require_positive_length(L_c);
  require(bc_scale >= 0 && bc_scale <= 1, ErrorCode::kDomain, "bc_scale must lie in [0, 1]");
  return heat_residual_with_source(T, alpha_rate, props.a_c() / (L_c * L_c), bc_scale * props.b_c());
}

/// (top, bottom) Robin residuals; `top` is T_c at x2 = 1, `bottom` is T_t at x1 = 0.
inline std::pair<double, double> bc_residuals(const Jet2<double>& top, const Jet2<double>& bottom, double air_C,
                                              const MaterialProps& props, const SimulationConstants& c) {
  require_positive_length(c.L_c);
  require_positive_length(c.L_t);
  require(props.part.k > 0 && props.tool.k > 0, ErrorCode::kDomain, "conductivity must be positive");
  return {robin_top_residual(top, air_C, c.h_top * c.L_c / props.part.k),
          robin_bottom_residual(bottom, air_C, c.h_bot * c.L_t / props.tool.k)};
}

/// (value jump, flux jump) between T_t at x1 = 1 and T_c at x2 = 0.
inline std::pair<double, double> continuity_residuals(const Jet2<double>& tool, const Jet2<double>& part,
                                                      const MaterialProps& props, double L_t, double L_c) {
  require_positive_length(L_t);
  require_positive_length(L_c);
  require(props.part.k > 0 && props.tool.k > 0, ErrorCode::kDomain, "conductivity must be positive");
  return {tool.value - part.value, interface_flux_residual(tool, part, props.tool.k / L_t, props.part.k / L_c)};
}

}  // namespace pidon::process
