#pragma once

// Thermochemical process model of a composite part cured on a tool in an
// autoclave: materials, cure kinetics of the resin and the air temperature
// program. Kinetics work in kelvin; every user-facing temperature is in C.

#include <cstddef>
#include <utility>

namespace pidon::process {

inline constexpr double kKelvinOffset = 273.15;
inline double to_kelvin(double celsius) { return celsius + kKelvinOffset; }
inline double to_celsius(double kelvin) { return kelvin - kKelvinOffset; }

/// Autocatalytic cure kinetics with diffusion control (8552 resin defaults).
struct CureKineticsParams {
  double delta_E = 66.5e3;   ///< J/mol
  double R = 8.314;          ///< J/(mol K)
  double A = 1.53e5;         ///< 1/s
  double m = 0.813;
  double n = 2.74;
  double C = 43.1;
  double C0 = -1.684;        ///< critical degree of cure at 0 K
  double CT = 5.475e-3;      ///< 1/K

  void validate() const;
};

struct Material {
  double k = 0.0;    ///< W/(m K)
  double rho = 0.0;  ///< kg/m^3
  double cp = 0.0;   ///< J/(kg K)

  double diffusivity() const { return k / (rho * cp); }
};

struct MaterialProps {
  Material tool;
  Material part;
  double v_r = 0.0;    ///< resin volume fraction
  double rho_r = 0.0;  ///< kg/m^3
  double H_r = 0.0;    ///< J/kg

  double a_t() const { return tool.diffusivity(); }
  double a_c() const { return part.diffusivity(); }
  /// Heat generation coefficient (K per unit degree of cure).
  double b_c() const { return v_r * rho_r * H_r / (part.rho * part.cp); }

  void validate() const;
};

/// Two-hold cure cycle. Rates in C/min, durations in min.
struct CureCycleSpec {
  double r1 = 2.0;
  double r2 = 2.0;
  double ht1 = 110.0;
  double ht2 = 180.0;
  double hd1 = 60.0;
  double hd2 = 110.0;
  double T0 = 20.0;
  bool cooldown = false;  ///< ramp back to T0 at -r2 after hold 2

  void validate() const;
  /// End of hold 2 (or of the cool-down ramp when enabled), seconds.
  double duration_s() const;
};

struct SimulationConstants {
  double T_init = 20.0;      ///< C
  double alpha_init = 0.05;
  double h_top = 100.0;      ///< W/(m^2 K)
  double h_bot = 75.0;       ///< W/(m^2 K)
  double L_t = 0.03;         ///< m
  double L_c = 0.03;         ///< m

  void validate() const;
};

/// Counts guard activations of the kinetics clamps.
struct KineticsDiagnostics {
  std::size_t clamped = 0;
};

/// d(alpha)/dt in 1/s. `T_kelvin` must be positive. alpha outside [0, 1] is
/// clamped onto the interval and counted in `diag`.
double cure_rate(double alpha, double T_kelvin, const CureKineticsParams& p, KineticsDiagnostics* diag = nullptr);

inline constexpr double kAlphaGuard = 1e-9;

/// cure_rate with alpha clamped to [kAlphaGuard, 1 - kAlphaGuard], for iterates
/// of numerical schemes where fractional powers of tiny negatives would appear.
double cure_rate_guarded(double alpha, double T_kelvin, const CureKineticsParams& p,
                         KineticsDiagnostics* diag = nullptr);

struct CureRateJet {
  double rate = 0.0;
  double d_alpha = 0.0;
  double d_T = 0.0;
};

/// Rate and its partials; alpha must lie strictly inside (0, 1).
CureRateJet cure_rate_partials(double alpha, double T_kelvin, const CureKineticsParams& p);

/// Autoclave air temperature (C) at time t >= 0 s. Continuous, piecewise linear.
double air_temperature(const CureCycleSpec& cycle, double t_s);

}  // namespace pidon::process
