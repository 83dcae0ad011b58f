#include "pidon/design/design.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

#include "pidon/error.hpp"

namespace pidon::design {

double& DesignPoint::operator[](int i) {
  switch (i) {
    case 0: return h_top;
    case 1: return h_bot;
    case 2: return r1;
    case 3: return r2;
    case 4: return ht1;
    case 5: return ht2;
    case 6: return hd1;
    case 7: return hd2;
    case 8: return L_t;
    case 9: return L_c;
  }
  fail(ErrorCode::kInvalidInput, "design variable index out of range");
}

double DesignPoint::operator[](int i) const { return const_cast<DesignPoint&>(*this)[i]; }

process::CureCycleSpec DesignPoint::cycle(double T0) const {
  process::CureCycleSpec c;
  c.r1 = r1;
  c.r2 = r2;
  c.ht1 = ht1;
  c.ht2 = ht2;
  c.hd1 = hd1;
  c.hd2 = hd2;
  c.T0 = T0;
  return c;
}

process::SimulationConstants DesignPoint::constants(double T_init, double alpha_init) const {
  process::SimulationConstants s;
  s.T_init = T_init;
  s.alpha_init = alpha_init;
  s.h_top = h_top;
  s.h_bot = h_bot;
  s.L_t = L_t;
  s.L_c = L_c;
  return s;
}

DesignSpace DesignSpace::named(const std::string& label) {
  DesignSpace s;
  s.label = label;
  // h_top, h_bot, r1, r2, ht1, ht2, hd1, hd2, L_t (cm), L_c (cm)
  if (label == "small") {
    s.ranges = {{{90, 120}, {60, 90}, {1.9, 2.8}, {1.9, 2.8}, {110, 115}, {178, 183}, {55, 63}, {105, 115},
                 {2, 3.5}, {2.5, 3.5}}};
  } else if (label == "medium") {
    s.ranges = {{{80, 120}, {50, 90}, {1.7, 3}, {1.7, 3}, {105, 115}, {175, 185}, {52, 63}, {105, 120},
                 {2, 4}, {2.5, 3.5}}};
  } else if (label == "large") {
    s.ranges = {{{70, 120}, {50, 100}, {1.5, 3}, {1.5, 3}, {105, 120}, {170, 185}, {50, 65}, {105, 120},
                 {2, 5}, {2.5, 3.5}}};
  } else {
    fail(ErrorCode::kInvalidInput, "unknown design space '" + label + "' (small, medium, large)");
  }
  for (int i : {8, 9}) {
    s.ranges[i].lo /= 100.0;
    s.ranges[i].hi /= 100.0;
  }
  return s;
}

void DesignSpace::validate(bool allow_degenerate) const {
  for (int i = 0; i < kNumVariables; ++i) {
    const Range& r = ranges[i];
    const bool ok = allow_degenerate ? r.lo <= r.hi : r.lo < r.hi;
    require(ok && std::isfinite(r.lo) && std::isfinite(r.hi), ErrorCode::kInvalidInput,
            std::string("design space: bad range for ") + kVariableNames[i]);
  }
  require(ranges[0].lo >= 0 && ranges[1].lo >= 0, ErrorCode::kInvalidInput, "design space: negative HTC");
  require(ranges[2].lo > 0 && ranges[3].lo > 0, ErrorCode::kInvalidInput, "design space: ramp rates must be positive");
  require(ranges[6].lo > 0 && ranges[7].lo > 0, ErrorCode::kInvalidInput, "design space: holds must be positive");
  require(ranges[8].lo > 0 && ranges[9].lo > 0, ErrorCode::kInvalidInput, "design space: thickness must be positive");
  require(ranges[5].lo > ranges[4].hi, ErrorCode::kInvalidInput, "design space: ht2 range must lie above ht1 range");
}

bool DesignSpace::contains(const DesignPoint& d) const {
  for (int i = 0; i < kNumVariables; ++i)
    if (!ranges[i].contains(d[i])) return false;
  return true;
}

std::vector<DesignPoint> sample(const DesignSpace& space, int n, std::uint64_t seed, bool lhs) {
  require(n >= 1, ErrorCode::kInvalidInput, "sample: n must be at least 1");
  space.validate(true);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<DesignPoint> out(n);
  if (!lhs) {
    for (auto& d : out)
      for (int i = 0; i < kNumVariables; ++i) {
        const Range& r = space.ranges[i];
        d[i] = r.lo == r.hi ? r.lo : r.lo + (r.hi - r.lo) * u01(rng);
      }
    return out;
  }
  std::vector<int> perm(n);
  for (int i = 0; i < kNumVariables; ++i) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const Range& r = space.ranges[i];
    for (int s = 0; s < n; ++s) {
      const double f = (perm[s] + u01(rng)) / n;
      out[s][i] = r.lo == r.hi ? r.lo : r.lo + (r.hi - r.lo) * f;
    }
  }
  return out;
}

double global_horizon(const DesignSpace& space, double T0) {
  double best = 0.0;
  for (int mask = 0; mask < 16; ++mask) {
    process::CureCycleSpec c;
    c.T0 = T0;
    c.r1 = (mask & 1) ? space.ranges[2].hi : space.ranges[2].lo;
    c.r2 = (mask & 2) ? space.ranges[3].hi : space.ranges[3].lo;
    c.ht1 = (mask & 4) ? space.ranges[4].hi : space.ranges[4].lo;
    c.ht2 = (mask & 8) ? space.ranges[5].hi : space.ranges[5].lo;
    c.hd1 = space.ranges[6].hi;
    c.hd2 = space.ranges[7].hi;
    best = std::max(best, c.duration_s());
  }
  return best;
}

Normalizer Normalizer::for_space(const DesignSpace& space, double T0) {
  Normalizer n;
  n.T0 = T0;
  n.T_max = space.max_ht2();
  require(n.T_max > T0, ErrorCode::kInvalidInput, "normalizer: max ht2 must exceed T0");
  n.scalars = {space.ranges[0], space.ranges[1], space.ranges[8], space.ranges[9]};
  return n;
}

double Normalizer::scalar(int i, double v) const {
  const Range& r = scalars.at(i);
  return r.hi == r.lo ? 0.0 : (v - r.lo) / (r.hi - r.lo);
}

double Normalizer::scalar_inv(int i, double u) const {
  const Range& r = scalars.at(i);
  return r.lo + u * (r.hi - r.lo);
}

SensorizedInput encode(const DesignPoint& d, const DesignSpace& space, double horizon, double T0) {
  const process::CureCycleSpec c = d.cycle(T0);
  c.validate();
  require(horizon >= c.duration_s() * (1.0 - 1e-12), ErrorCode::kDomain,
          "encode: horizon shorter than the design's cure cycle");
  const Normalizer norm = Normalizer::for_space(space, T0);
  SensorizedInput in;
  const double scal[kScalarCount] = {d.h_top, d.h_bot, d.L_t, d.L_c};
  for (int i = 0; i < kScalarCount; ++i) in.bn1[i] = norm.scalar(i, scal[i]);
  for (int i = 0; i < kSensorCount; ++i) {
    const double t = horizon * i / (kSensorCount - 1);
    in.bn2[i] = norm.temperature(process::air_temperature(c, t));
  }
  return in;
}

std::array<double, kScalarCount> decode_scalars(const SensorizedInput& in, const DesignSpace& space) {
  const Normalizer norm = Normalizer::for_space(space);
  std::array<double, kScalarCount> out;
  for (int i = 0; i < kScalarCount; ++i) out[i] = norm.scalar_inv(i, in.bn1[i]);
  return out;
}

Query normalize_query(double x, double t_s, double horizon) {
  require(horizon > 0, ErrorCode::kDomain, "horizon must be positive");
  require(x >= 0 && x <= 1, ErrorCode::kDomain, "local coordinate outside [0, 1]");
  require(t_s >= 0 && t_s <= horizon, ErrorCode::kDomain, "time outside [0, horizon]");
  return {x, t_s / horizon};
}

std::string format_design_csv(const std::vector<DesignPoint>& designs, std::uint64_t seed, const std::string& label) {
  std::string out;
  for (const char* name : kVariableNames) {
    out += name;
    out += ',';
  }
  out += "seed,space\n";
  char buf[40];
  for (const auto& d : designs) {
    for (int i = 0; i < kNumVariables; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g,", d[i]);
      out += buf;
    }
    out += std::to_string(seed) + "," + label + "\n";
  }
  return out;
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) parts.push_back(cur);
  if (!line.empty() && line.back() == sep) parts.emplace_back();
  return parts;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    require(used == s.size(), ErrorCode::kInvalidInput, "bad number in " + what + ": '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    fail(ErrorCode::kInvalidInput, "bad number in " + what + ": '" + s + "'");
  }
}

}  // namespace

DesignSet parse_design_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::kInvalidInput, "design csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split(line, ',');
  require(header.size() == kNumVariables + 2, ErrorCode::kInvalidInput, "design csv: unexpected column count");
  for (int i = 0; i < kNumVariables; ++i)
    require(header[i] == kVariableNames[i], ErrorCode::kInvalidInput, "design csv: unexpected header " + header[i]);
  require(header[10] == "seed" && header[11] == "space", ErrorCode::kInvalidInput, "design csv: missing seed/space");

  DesignSet set;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    require(cells.size() == header.size(), ErrorCode::kInvalidInput, "design csv: row " + std::to_string(row));
    DesignPoint d;
    for (int i = 0; i < kNumVariables; ++i) d[i] = parse_double(cells[i], "design csv row " + std::to_string(row));
    set.designs.push_back(d);
    set.seed = std::stoull(cells[10]);
    set.label = cells[11];
  }
  return set;
}

}  // namespace pidon::design
