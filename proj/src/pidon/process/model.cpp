#include "pidon/process/model.hpp"

#include <algorithm>
#include <cmath>

#include "pidon/error.hpp"

namespace pidon::process {

void CureKineticsParams::validate() const {
  require(A > 0 && n > 0 && m > 0, ErrorCode::kInvalidInput, "kinetics: A, m and n must be positive");
  require(R > 0 && delta_E >= 0, ErrorCode::kInvalidInput, "kinetics: R must be positive and delta_E non-negative");
  require(std::isfinite(C) && std::isfinite(C0) && std::isfinite(CT), ErrorCode::kInvalidInput,
          "kinetics: non-finite diffusion constants");
}

void MaterialProps::validate() const {
  for (const Material* mat : {&tool, &part}) {
    require(mat->k > 0 && mat->rho > 0 && mat->cp > 0, ErrorCode::kInvalidInput,
            "material k, rho and cp must be positive");
  }
  require(v_r >= 0 && v_r <= 1, ErrorCode::kInvalidInput, "resin volume fraction must lie in [0, 1]");
  require(rho_r > 0 && H_r >= 0, ErrorCode::kInvalidInput, "resin density must be positive and H_r non-negative");
}

void CureCycleSpec::validate() const {
  require(r1 > 0 && r2 > 0, ErrorCode::kInvalidInput, "ramp rates must be positive");
  require(hd1 > 0 && hd2 > 0, ErrorCode::kInvalidInput, "hold durations must be positive");
  require(ht2 > ht1 && ht1 > T0, ErrorCode::kInvalidInput, "cure cycle needs T0 < ht1 < ht2");
}

double CureCycleSpec::duration_s() const {
  double minutes = (ht1 - T0) / r1 + hd1 + (ht2 - ht1) / r2 + hd2;
  if (cooldown) minutes += (ht2 - T0) / r2;
  return 60.0 * minutes;
}

void SimulationConstants::validate() const {
  require(alpha_init >= 0 && alpha_init < 1, ErrorCode::kInvalidInput, "alpha_init must lie in [0, 1)");
  require(h_top >= 0 && h_bot >= 0, ErrorCode::kInvalidInput, "heat transfer coefficients must be non-negative");
  require(L_t > 0 && L_c > 0, ErrorCode::kInvalidInput, "thicknesses must be positive");
}

namespace {

double clamp_alpha(double alpha, double lo, double hi, KineticsDiagnostics* diag) {
  if (alpha < lo || alpha > hi) {
    if (diag) ++diag->clamped;
    return std::clamp(alpha, lo, hi);
  }
  return alpha;
}

double rate_unchecked(double alpha, double T, const CureKineticsParams& p) {
  const double arrhenius = p.A * std::exp(-p.delta_E / (p.R * T));
  const double diffusion = 1.0 + std::exp(p.C * (alpha - (p.C0 + p.CT * T)));
  return arrhenius / diffusion * std::pow(alpha, p.m) * std::pow(1.0 - alpha, p.n);
}

}  // namespace

double cure_rate(double alpha, double T_kelvin, const CureKineticsParams& p, KineticsDiagnostics* diag) {
  require(T_kelvin > 0, ErrorCode::kDomain, "cure_rate: temperature must be positive kelvin");
  return rate_unchecked(clamp_alpha(alpha, 0.0, 1.0, diag), T_kelvin, p);
}

double cure_rate_guarded(double alpha, double T_kelvin, const CureKineticsParams& p, KineticsDiagnostics* diag) {
  require(T_kelvin > 0, ErrorCode::kDomain, "cure_rate: temperature must be positive kelvin");
  return rate_unchecked(clamp_alpha(alpha, kAlphaGuard, 1.0 - kAlphaGuard, diag), T_kelvin, p);
}

CureRateJet cure_rate_partials(double alpha, double T_kelvin, const CureKineticsParams& p) {
  require(T_kelvin > 0, ErrorCode::kDomain, "cure_rate: temperature must be positive kelvin");
  require(alpha > 0 && alpha < 1, ErrorCode::kDomain, "cure_rate_partials: alpha must lie in (0, 1)");
  const double r = rate_unchecked(alpha, T_kelvin, p);
  const double u = p.C * (alpha - (p.C0 + p.CT * T_kelvin));
  // logistic(u), written to avoid overflow for large |u|
  const double sig = u >= 0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u));
  CureRateJet j;
  j.rate = r;
  j.d_alpha = r * (p.m / alpha - p.n / (1.0 - alpha) - p.C * sig);
  j.d_T = r * (p.delta_E / (p.R * T_kelvin * T_kelvin) + p.C * p.CT * sig);
  return j;
}

double air_temperature(const CureCycleSpec& c, double t_s) {
  require(t_s >= 0, ErrorCode::kDomain, "air_temperature: time must be non-negative");
  const double t = t_s / 60.0;
  const double e1 = (c.ht1 - c.T0) / c.r1;
  const double e2 = e1 + c.hd1;
  const double e3 = e2 + (c.ht2 - c.ht1) / c.r2;
  const double e4 = e3 + c.hd2;
  if (t <= e1) return c.T0 + c.r1 * t;
  if (t <= e2) return c.ht1;
  if (t <= e3) return c.ht1 + c.r2 * (t - e2);
  if (t <= e4 || !c.cooldown) return c.ht2;
  const double e5 = e4 + (c.ht2 - c.T0) / c.r2;
  if (t <= e5) return c.ht2 - c.r2 * (t - e4);
  return c.T0;
}

}  // namespace pidon::process
