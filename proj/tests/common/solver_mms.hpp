#pragma once

// Manufactured-solution fixtures for the reference solver.

#include <cmath>
#include <functional>

#include "pidon/solver/solver.hpp"

namespace pidon::testing {

using solver::FieldSolution;
using solver::Forcing;

inline io::PropertySet inert_props() {
  io::PropertySet p = io::default_properties();
  p.materials.H_r = 0.0;
  return p;
}

/// Smooth exact fields for the manufactured-solution checks.
struct Exact {
  std::function<double(double, double)> T, Tx, Txx, Tt;
};

struct Manufactured {
  Exact tool, part;
  std::function<double(double)> air;
};

inline Forcing forcing_for(const Manufactured& m, const io::PropertySet& p, const design::DesignPoint& d) {
  const auto& mat = p.materials;
  const double Dt = mat.a_t() / (d.L_t * d.L_t), Dc = mat.a_c() / (d.L_c * d.L_c);
  const double bi_bot = d.h_bot * d.L_t / mat.tool.k, bi_top = d.h_top * d.L_c / mat.part.k;
  const double gt = mat.tool.k / d.L_t, gc = mat.part.k / d.L_c;
  Forcing f;
  f.tool_source = [=](double x, double t) { return m.tool.Tt(x, t) - Dt * m.tool.Txx(x, t); };
  f.part_source = [=](double x, double t) { return m.part.Tt(x, t) - Dc * m.part.Txx(x, t); };
  f.bottom = [=](double t) { return m.tool.Tx(0, t) - bi_bot * (m.tool.T(0, t) - m.air(t)); };
  f.top = [=](double t) { return m.part.Tx(1, t) - bi_top * (m.air(t) - m.part.T(1, t)); };
  f.jump_value = [=](double t) { return m.tool.T(1, t) - m.part.T(0, t); };
  f.jump_flux = [=](double t) { return gt * m.tool.Tx(1, t) - gc * m.part.Tx(0, t); };
  f.air = m.air;
  f.tool_initial = [=](double x) { return m.tool.T(x, 0); };
  f.part_initial = [=](double x) { return m.part.T(x, 0); };
  return f;
}

inline double max_error(const FieldSolution& s, const Manufactured& m) {
  double err = 0.0;
  const auto nt = s.T_tool.cols(), nc = s.T_part.cols();
  for (std::size_t r = 0; r < s.times.size(); ++r) {
    const double t = s.times[r];
    for (Eigen::Index i = 0; i < nt; ++i) err = std::max(err, std::abs(s.T_tool(r, i) - m.tool.T(double(i) / (nt - 1), t)));
    for (Eigen::Index j = 0; j < nc; ++j) err = std::max(err, std::abs(s.T_part(r, j) - m.part.T(double(j) / (nc - 1), t)));
  }
  return err;
}

// Linear in t: Crank-Nicolson is exact in time, leaving only spatial error.
inline Manufactured spatial_case(double tau) {
  Manufactured m;
  m.tool.T = [=](double x, double t) { return 20 + 40 * std::cos(1.7 * x + 0.3) * (1 + t / tau); };
  m.tool.Tx = [=](double x, double t) { return -68 * std::sin(1.7 * x + 0.3) * (1 + t / tau); };
  m.tool.Txx = [=](double x, double t) { return -115.6 * std::cos(1.7 * x + 0.3) * (1 + t / tau); };
  m.tool.Tt = [=](double x, double) { return 40 * std::cos(1.7 * x + 0.3) / tau; };
  m.part.T = [=](double x, double t) { return 30 + 25 * std::sin(2.1 * x + 0.4) * (1 + 0.5 * t / tau); };
  m.part.Tx = [=](double x, double t) { return 52.5 * std::cos(2.1 * x + 0.4) * (1 + 0.5 * t / tau); };
  m.part.Txx = [=](double x, double t) { return -110.25 * std::sin(2.1 * x + 0.4) * (1 + 0.5 * t / tau); };
  m.part.Tt = [=](double x, double) { return 12.5 * std::sin(2.1 * x + 0.4) / tau; };
  m.air = [=](double t) { return 20 + 0.01 * t; };
  return m;
}

// Quadratic in x: the difference stencils are exact, leaving only temporal error.
inline Manufactured temporal_case(double w) {
  Manufactured m;
  m.tool.T = [=](double x, double t) { return 20 + (5 + 3 * x - 2 * x * x) * (1 + std::sin(w * t)); };
  m.tool.Tx = [=](double x, double t) { return (3 - 4 * x) * (1 + std::sin(w * t)); };
  m.tool.Txx = [=](double, double t) { return -4 * (1 + std::sin(w * t)); };
  m.tool.Tt = [=](double x, double t) { return (5 + 3 * x - 2 * x * x) * w * std::cos(w * t); };
  m.part.T = [=](double x, double t) { return 25 + (4 - x + 1.5 * x * x) * std::exp(-w * t); };
  m.part.Tx = [=](double x, double t) { return (-1 + 3 * x) * std::exp(-w * t); };
  m.part.Txx = [=](double, double t) { return 3 * std::exp(-w * t); };
  m.part.Tt = [=](double x, double t) { return -w * (4 - x + 1.5 * x * x) * std::exp(-w * t); };
  m.air = [=](double t) { return 20 + 10 * std::sin(0.5 * w * t); };
  return m;
}

inline double order(double coarse, double fine) { return std::log2(coarse / fine); }

}  // namespace pidon::testing
