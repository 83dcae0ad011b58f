#pragma once

// Design variables of one cure scenario, the named design spaces and the
// branch-net encodings of a design.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pidon/process/model.hpp"

namespace pidon::design {

inline constexpr int kNumVariables = 10;
inline constexpr int kSensorCount = 100;
inline constexpr int kScalarCount = 4;

/// Variable order used by ranges, CSV columns and flat access.
inline constexpr std::array<const char*, kNumVariables> kVariableNames = {
    "h_top", "h_bot", "r1", "r2", "ht1", "ht2", "hd1", "hd2", "L_t", "L_c"};

struct DesignPoint {
  double h_top = 100.0;  ///< W/(m^2 K)
  double h_bot = 75.0;   ///< W/(m^2 K)
  double r1 = 2.0;       ///< C/min
  double r2 = 2.0;       ///< C/min
  double ht1 = 110.0;    ///< C
  double ht2 = 180.0;    ///< C
  double hd1 = 60.0;     ///< min
  double hd2 = 110.0;    ///< min
  double L_t = 0.03;     ///< m
  double L_c = 0.03;     ///< m

  double& operator[](int i);
  double operator[](int i) const;
  bool operator==(const DesignPoint&) const = default;

  process::CureCycleSpec cycle(double T0 = 20.0) const;
  process::SimulationConstants constants(double T_init = 20.0, double alpha_init = 0.05) const;
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  double mid() const { return 0.5 * (lo + hi); }
  bool contains(double v) const { return v >= lo && v <= hi; }
};

struct DesignSpace {
  std::string label;
  std::array<Range, kNumVariables> ranges;

  /// "small", "medium" or "large". Thicknesses are stored in metres.
  static DesignSpace named(const std::string& label);

  /// Requires lo < hi, or lo == hi when `allow_degenerate`.
  void validate(bool allow_degenerate = false) const;
  bool contains(const DesignPoint& d) const;
  const Range& range(int i) const { return ranges[i]; }

  /// Largest ht2 in the space; upper end of the temperature normalization.
  double max_ht2() const { return ranges[5].hi; }
};

/// n i.i.d. uniform samples (or a Latin hypercube with `lhs`), deterministic in seed.
std::vector<DesignPoint> sample(const DesignSpace& space, int n, std::uint64_t seed, bool lhs = false);

/// Maximum cycle duration over the space (seconds). The duration is monotone in
/// each cycle variable, so the extreme is attained at a corner of (r1, r2, ht1, ht2)
/// with both hold durations at their upper bounds.
double global_horizon(const DesignSpace& space, double T0 = 20.0);

/// Affine maps used to normalize temperatures and scalar inputs.
struct Normalizer {
  double T0 = 20.0;
  double T_max = 185.0;
  std::array<Range, kScalarCount> scalars;  ///< h_top, h_bot, L_t, L_c

  static Normalizer for_space(const DesignSpace& space, double T0 = 20.0);

  double temperature(double T_C) const { return (T_C - T0) / (T_max - T0); }
  double temperature_inv(double u) const { return T0 + u * (T_max - T0); }
  double scalar(int i, double v) const;
  double scalar_inv(int i, double u) const;
};

struct SensorizedInput {
  std::array<double, kScalarCount> bn1{};
  std::array<double, kSensorCount> bn2{};
};

/// Sensor times are i * horizon / 99; `horizon` must cover the design's cycle.
SensorizedInput encode(const DesignPoint& d, const DesignSpace& space, double horizon, double T0 = 20.0);

/// Recovers (h_top, h_bot, L_t, L_c) from bn1.
std::array<double, kScalarCount> decode_scalars(const SensorizedInput& in, const DesignSpace& space);

struct Query {
  double x = 0.0;
  double tau = 0.0;
};

Query normalize_query(double x, double t_s, double horizon);

/// CSV with header h_top..L_c,seed,space; values printed with 17 significant digits.
std::string format_design_csv(const std::vector<DesignPoint>& designs, std::uint64_t seed, const std::string& label);

struct DesignSet {
  std::vector<DesignPoint> designs;
  std::uint64_t seed = 0;
  std::string label;
};

DesignSet parse_design_csv(const std::string& text);

}  // namespace pidon::design
