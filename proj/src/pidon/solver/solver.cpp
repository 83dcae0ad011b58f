#include "pidon/solver/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <json.hpp>

#include "pidon/error.hpp"
#include "pidon/version.hpp"

namespace pidon::solver {

using process::to_kelvin;

void Grid1D::validate() const {
  require(n_tool >= 3 && n_part >= 3, ErrorCode::kInvalidInput, "grid: at least 3 nodes per material");
  require(dt > 0 && std::isfinite(dt), ErrorCode::kInvalidInput, "grid: dt must be positive");
  require(std::isfinite(t_end), ErrorCode::kInvalidInput, "grid: t_end must be finite");
}

namespace {

double rk4_cure(double alpha, double T_K, double dt, int substeps, const process::CureKineticsParams& kin,
                process::KineticsDiagnostics& diag) {
  const double h = dt / substeps;
  auto f = [&](double a) { return process::cure_rate(a, T_K, kin, &diag); };
  for (int s = 0; s < substeps; ++s) {
    const double k1 = f(alpha);
    const double k2 = f(alpha + 0.5 * h * k1);
    const double k3 = f(alpha + 0.5 * h * k2);
    const double k4 = f(alpha + h * k3);
    alpha += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return alpha;
}

double call_or(const std::function<double(double)>& f, double t, double fallback) { return f ? f(t) : fallback; }

}  // namespace

FieldSolution solve(const design::DesignPoint& design, const io::PropertySet& props, const Grid1D& grid,
                    const SolverOptions& options, const Forcing* forcing) {
  grid.validate();
  props.materials.validate();
  props.kinetics.validate();
  require(options.kinetics_substeps >= 1 && options.store_every >= 1, ErrorCode::kInvalidInput,
          "solver: substeps and store_every must be positive");
  require(options.bc_scale >= 0 && options.bc_scale <= 1, ErrorCode::kDomain, "bc_scale must lie in [0, 1]");
  const Forcing none;
  const Forcing& F = forcing ? *forcing : none;

  process::CureCycleSpec cycle = design.cycle(props.T_init);
  cycle.cooldown = options.cooldown;
  if (!F.air) cycle.validate();
  const process::SimulationConstants c = design.constants(props.T_init, props.alpha_init);
  c.validate();
  auto air = [&](double t) { return F.air ? F.air(t) : process::air_temperature(cycle, t); };

  const double t_end = grid.t_end > 0 ? grid.t_end : cycle.duration_s();
  const int steps = std::max(1, static_cast<int>(std::ceil(t_end / grid.dt - 1e-9)));
  const double dt = t_end / steps;

  const auto& m = props.materials;
  const int nt = grid.n_tool, nc = grid.n_part, N = nt + nc;
  const double ht = 1.0 / (nt - 1), hc = 1.0 / (nc - 1);
  const double rt = m.a_t() / (c.L_t * c.L_t) * dt / (2.0 * ht * ht);
  const double rc = m.a_c() / (c.L_c * c.L_c) * dt / (2.0 * hc * hc);
  const double bi_bot = c.h_bot * c.L_t / m.tool.k;
  const double bi_top = c.h_top * c.L_c / m.part.k;
  const double g_tool = m.tool.k / c.L_t, g_part = m.part.k / c.L_c;
  const double gen = options.bc_scale * m.b_c();
  const int it = nt - 1;  // tool interface node
  const int ic = nt;      // part interface node

  // Constant system matrix.
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(3 * N + 8);
  trip.emplace_back(0, 0, -3.0 / (2 * ht) - bi_bot);
  trip.emplace_back(0, 1, 4.0 / (2 * ht));
  trip.emplace_back(0, 2, -1.0 / (2 * ht));
  for (int i = 1; i < nt - 1; ++i) {
    trip.emplace_back(i, i - 1, -rt);
    trip.emplace_back(i, i, 1 + 2 * rt);
    trip.emplace_back(i, i + 1, -rt);
  }
  trip.emplace_back(it, it, 1.0);
  trip.emplace_back(it, ic, -1.0);
  // Flux row, divided by the part conductance to keep entries O(1/h).
  const double ft = g_tool / g_part / (2 * ht), fc = 1.0 / (2 * hc);
  trip.emplace_back(ic, it, 3 * ft);
  trip.emplace_back(ic, it - 1, -4 * ft);
  trip.emplace_back(ic, it - 2, ft);
  trip.emplace_back(ic, ic, 3 * fc);
  trip.emplace_back(ic, ic + 1, -4 * fc);
  trip.emplace_back(ic, ic + 2, fc);
  for (int j = 1; j < nc - 1; ++j) {
    const int r = ic + j;
    trip.emplace_back(r, r - 1, -rc);
    trip.emplace_back(r, r, 1 + 2 * rc);
    trip.emplace_back(r, r + 1, -rc);
  }
  const int top = N - 1;
  trip.emplace_back(top, top, 3.0 / (2 * hc) + bi_top);
  trip.emplace_back(top, top - 1, -4.0 / (2 * hc));
  trip.emplace_back(top, top - 2, 1.0 / (2 * hc));
  Eigen::SparseMatrix<double> A(N, N);
  A.setFromTriplets(trip.begin(), trip.end());
  A.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(A);
  require(lu.info() == Eigen::Success, ErrorCode::kSolver, "solver: singular system matrix");

  Eigen::VectorXd T(N), rhs(N), alpha(nc), alpha_next(nc);
  for (int i = 0; i < nt; ++i) T[i] = F.tool_initial ? F.tool_initial(i * ht) : c.T_init;
  for (int j = 0; j < nc; ++j) T[ic + j] = F.part_initial ? F.part_initial(j * hc) : c.T_init;
  alpha.setConstant(c.alpha_init);

  std::vector<int> kept;
  for (int n = 0; n <= steps; ++n)
    if (n % options.store_every == 0 || n == steps) kept.push_back(n);

  FieldSolution sol;
  sol.design = design;
  sol.grid = grid;
  sol.grid.t_end = t_end;
  sol.T_tool.resize(kept.size(), nt);
  sol.T_part.resize(kept.size(), nc);
  sol.alpha.resize(kept.size(), nc);
  sol.times.reserve(kept.size());
  std::size_t frame = 0;
  auto store = [&](int n) {
    if (frame < kept.size() && kept[frame] == n) {
      sol.times.push_back(n == steps ? t_end : n * dt);
      sol.T_tool.row(frame) = T.head(nt).transpose();
      sol.T_part.row(frame) = T.tail(nc).transpose();
      sol.alpha.row(frame) = alpha.transpose();
      ++frame;
    }
  };
  store(0);

  process::KineticsDiagnostics kdiag;
  SolveDiagnostics& diag = sol.diag;
  diag.steps = steps;
  diag.dt = dt;
  for (int n = 0; n < steps; ++n) {
    const double t0 = n * dt, t1 = (n + 1 == steps) ? t_end : (n + 1) * dt, tm = 0.5 * (t0 + t1);

    for (int j = 0; j < nc; ++j) {
      const double a = rk4_cure(alpha[j], to_kelvin(T[ic + j]), dt, options.kinetics_substeps, props.kinetics, kdiag);
      alpha_next[j] = std::clamp(a, alpha[j], 1.0);
    }

    const double Ta = air(t1);
    rhs[0] = call_or(F.bottom, t1, 0.0) - bi_bot * Ta;
    for (int i = 1; i < nt - 1; ++i) {
      rhs[i] = T[i] + rt * (T[i - 1] - 2 * T[i] + T[i + 1]);
      if (F.tool_source) rhs[i] += dt * F.tool_source(i * ht, tm);
    }
    rhs[it] = call_or(F.jump_value, t1, 0.0);
    rhs[ic] = call_or(F.jump_flux, t1, 0.0) / g_part;
    for (int j = 1; j < nc - 1; ++j) {
      const int r = ic + j;
      rhs[r] = T[r] + rc * (T[r - 1] - 2 * T[r] + T[r + 1]) + gen * (alpha_next[j] - alpha[j]);
      if (F.part_source) rhs[r] += dt * F.part_source(j * hc, tm);
    }
    rhs[top] = call_or(F.top, t1, 0.0) + bi_top * Ta;

    T = lu.solve(rhs);
    if (!T.allFinite())
      fail(ErrorCode::kSolver, "solver: non-finite temperature at step " + std::to_string(n + 1) +
                                   " (t = " + std::to_string(t1) + " s)");
    alpha = alpha_next;

    const double bnorm = std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
    diag.max_linear_residual = std::max(diag.max_linear_residual, (A * T - rhs).lpNorm<Eigen::Infinity>() / bnorm);
    diag.max_value_jump =
        std::max(diag.max_value_jump, std::abs(T[it] - T[ic] - call_or(F.jump_value, t1, 0.0)));
    const double flux_t = g_tool / (2 * ht) * (3 * T[it] - 4 * T[it - 1] + T[it - 2]);
    const double flux_c = g_part / (2 * hc) * (-3 * T[ic] + 4 * T[ic + 1] - T[ic + 2]);
    const double scale = g_tool / (2 * ht) * (3 * std::abs(T[it]) + 4 * std::abs(T[it - 1]) + std::abs(T[it - 2])) +
                         g_part / (2 * hc) * (3 * std::abs(T[ic]) + 4 * std::abs(T[ic + 1]) + std::abs(T[ic + 2]));
    const double jump = std::abs(flux_t - flux_c - call_or(F.jump_flux, t1, 0.0));
    diag.max_flux_jump_rel = std::max(diag.max_flux_jump_rel, scale > 0 ? jump / scale : jump);
    store(n + 1);
  }
  diag.kinetics_clamped = kdiag.clamped;
  return sol;
}

Exotherm exotherm(const FieldSolution& sol) {
  require(!sol.times.empty() && sol.T_part.size() > 0, ErrorCode::kInvalidInput, "exotherm: empty solution");
  const Eigen::Index nc = sol.T_part.cols();
  Exotherm e{sol.T_part(0, 0), sol.times[0], 0.0};
  for (Eigen::Index r = 0; r < sol.T_part.rows(); ++r)
    for (Eigen::Index j = 0; j < nc; ++j)
      if (sol.T_part(r, j) > e.T_max) e = {sol.T_part(r, j), sol.times[r], static_cast<double>(j) / (nc - 1)};
  return e;
}

double probe(const FieldSolution& sol, double x, double t, Field field) {
  require(!sol.times.empty(), ErrorCode::kInvalidInput, "probe: empty solution");
  require(x >= 0 && x <= 1, ErrorCode::kDomain, "probe: x outside [0, 1]");
  require(t >= sol.times.front() && t <= sol.times.back(), ErrorCode::kDomain, "probe: t outside the solved interval");
  const Matrix& M = field == Field::kToolTemperature ? sol.T_tool : field == Field::kPartTemperature ? sol.T_part : sol.alpha;
  const Eigen::Index n = M.cols();
  const double s = x * (n - 1);
  const Eigen::Index j = std::min<Eigen::Index>(static_cast<Eigen::Index>(s), n - 2);
  const double wx = s - j;
  Eigen::Index r = std::upper_bound(sol.times.begin(), sol.times.end(), t) - sol.times.begin() - 1;
  r = std::clamp<Eigen::Index>(r, 0, static_cast<Eigen::Index>(sol.times.size()) - 1);
  auto at_row = [&](Eigen::Index row) { return (1 - wx) * M(row, j) + wx * M(row, j + 1); };
  if (r + 1 >= static_cast<Eigen::Index>(sol.times.size())) return at_row(r);
  const double wt = (t - sol.times[r]) / (sol.times[r + 1] - sol.times[r]);
  return (1 - wt) * at_row(r) + wt * at_row(r + 1);
}

std::string format_solution_csv(const FieldSolution& sol) {
  std::string out = "time_s,x_local,material,T_C,alpha\n";
  char buf[128];
  const Eigen::Index nt = sol.T_tool.cols(), nc = sol.T_part.cols();
  for (std::size_t r = 0; r < sol.times.size(); ++r) {
    for (Eigen::Index i = 0; i < nt; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,tool,%.17g,\n", sol.times[r], static_cast<double>(i) / (nt - 1),
                    sol.T_tool(r, i));
      out += buf;
    }
    for (Eigen::Index j = 0; j < nc; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,part,%.17g,%.17g\n", sol.times[r], static_cast<double>(j) / (nc - 1),
                    sol.T_part(r, j), sol.alpha(r, j));
      out += buf;
    }
  }
  return out;
}

FieldSolution parse_solution_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  require(std::getline(in, line) && line == "time_s,x_local,material,T_C,alpha", ErrorCode::kInvalidInput,
          "solution csv: unexpected header");
  struct Row {
    double t, T, a;
    bool tool;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell[5];
    for (int k = 0; k < 5; ++k) std::getline(ls, cell[k], ',');
    require(cell[2] == "tool" || cell[2] == "part", ErrorCode::kInvalidInput, "solution csv: bad material " + cell[2]);
    const bool tool = cell[2] == "tool";
    try {
      rows.push_back({std::stod(cell[0]), std::stod(cell[3]), tool ? 0.0 : std::stod(cell[4]), tool});
    } catch (const std::logic_error&) {
      fail(ErrorCode::kInvalidInput, "solution csv: bad number in '" + line + "'");
    }
  }
  require(!rows.empty(), ErrorCode::kInvalidInput, "solution csv: no data");
  Eigen::Index nt = 0, nc = 0;
  for (const Row& r : rows) {
    if (r.t != rows[0].t) break;
    (r.tool ? nt : nc)++;
  }
  const std::size_t per = nt + nc;
  require(nt >= 2 && nc >= 2 && rows.size() % per == 0, ErrorCode::kInvalidInput, "solution csv: ragged frames");
  const std::size_t frames = rows.size() / per;
  FieldSolution sol;
  sol.T_tool.resize(frames, nt);
  sol.T_part.resize(frames, nc);
  sol.alpha.resize(frames, nc);
  for (std::size_t f = 0; f < frames; ++f) {
    sol.times.push_back(rows[f * per].t);
    for (Eigen::Index i = 0; i < nt; ++i) {
      const Row& r = rows[f * per + i];
      require(r.tool && r.t == sol.times.back(), ErrorCode::kInvalidInput, "solution csv: frame layout");
      sol.T_tool(f, i) = r.T;
    }
    for (Eigen::Index j = 0; j < nc; ++j) {
      const Row& r = rows[f * per + nt + j];
      require(!r.tool && r.t == sol.times.back(), ErrorCode::kInvalidInput, "solution csv: frame layout");
      sol.T_part(f, j) = r.T;
      sol.alpha(f, j) = r.a;
    }
  }
  sol.grid.n_tool = static_cast<int>(nt);
  sol.grid.n_part = static_cast<int>(nc);
  sol.grid.t_end = sol.times.back();
  return sol;
}

std::string format_manifest(const FieldSolution& sol, const SolverOptions& options, const std::string& property_hash) {
  using nlohmann::json;
  json j;
  j["schema"] = "pidon.solution";
  j["version"] = 1;
  j["code_version"] = kVersion;
  json d;
  for (int i = 0; i < design::kNumVariables; ++i) d[design::kVariableNames[i]] = sol.design[i];
  j["design"] = d;
  j["grid"] = {{"n_tool", sol.grid.n_tool}, {"n_part", sol.grid.n_part}, {"dt", sol.grid.dt}, {"t_end", sol.grid.t_end}};
  j["options"] = {{"kinetics_substeps", options.kinetics_substeps},
                  {"store_every", options.store_every},
                  {"bc_scale", options.bc_scale},
                  {"cooldown", options.cooldown}};
  j["property_hash"] = property_hash;
  j["diagnostics"] = {{"steps", sol.diag.steps},
                      {"dt_effective", sol.diag.dt},
                      {"max_value_jump", sol.diag.max_value_jump},
                      {"max_flux_jump_rel", sol.diag.max_flux_jump_rel},
                      {"max_linear_residual", sol.diag.max_linear_residual},
                      {"kinetics_clamped", sol.diag.kinetics_clamped}};
  return j.dump(2) + "\n";
}

void apply_manifest(FieldSolution& sol, const std::string& manifest_text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(manifest_text);
    require(j.at("schema") == "pidon.solution", ErrorCode::kInvalidInput, "manifest: wrong schema");
    require(j.at("version") == 1, ErrorCode::kVersionMismatch, "manifest: unsupported version");
    for (int i = 0; i < design::kNumVariables; ++i) sol.design[i] = j.at("design").at(design::kVariableNames[i]);
    const json& g = j.at("grid");
    sol.grid.n_tool = g.at("n_tool");
    sol.grid.n_part = g.at("n_part");
    sol.grid.dt = g.at("dt");
    sol.grid.t_end = g.at("t_end");
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidInput, std::string("manifest: ") + e.what());
  }
}

}  // namespace pidon::solver
