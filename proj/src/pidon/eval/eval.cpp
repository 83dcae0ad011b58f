#include "pidon/eval/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <thread>

#include <json.hpp>

#include "pidon/error.hpp"
#include "pidon/io/hash.hpp"
#include "pidon/process/model.hpp"

namespace pidon::eval {

using nlohmann::json;
using solver::FieldSolution;

FieldMetrics field_metrics(const solver::Matrix& pred, const solver::Matrix& ref) {
  require(pred.rows() == ref.rows() && pred.cols() == ref.cols() && ref.size() > 0, ErrorCode::kInvalidInput,
          "metrics: prediction and reference grids differ");
  const auto diff = (pred - ref).array();
  FieldMetrics m;
  const double rn = ref.norm();
  m.rel_l2 = rn > 0 ? (pred - ref).norm() / rn : (pred - ref).norm();
  m.mae = diff.abs().mean();
  m.max_abs_err = diff.abs().maxCoeff();
  return m;
}

DesignMetrics compare(const FieldSolution& pred, const FieldSolution& ref, double window_fraction) {
  require(pred.times.size() == ref.times.size(), ErrorCode::kInvalidInput, "metrics: time grids differ");
  for (std::size_t r = 0; r < ref.times.size(); ++r)
    require(std::abs(pred.times[r] - ref.times[r]) <= 1e-9 * (1 + std::abs(ref.times[r])), ErrorCode::kInvalidInput,
            "metrics: time grids differ");
  DesignMetrics d;
  d.T_part = field_metrics(pred.T_part, ref.T_part);
  d.T_tool = field_metrics(pred.T_tool, ref.T_tool);
  d.alpha = field_metrics(pred.alpha, ref.alpha);
  const Eigen::Index nc = ref.T_part.cols();
  require(nc % 2 == 1, ErrorCode::kInvalidInput, "metrics: part grid needs an odd node count for the mid-point");
  d.T_mid = field_metrics(pred.T_part.col(nc / 2), ref.T_part.col(nc / 2));
  const solver::Exotherm ep = solver::exotherm(pred), er = solver::exotherm(ref);
  d.exotherm_err = std::abs(ep.T_max - er.T_max);
  const double half = window_fraction * ref.times.back();
  for (std::size_t r = 0; r < ref.times.size(); ++r)
    if (std::abs(ref.times[r] - er.t_at) <= half)
      d.exotherm_window_err =
          std::max(d.exotherm_window_err, (pred.T_part.row(r) - ref.T_part.row(r)).cwiseAbs().maxCoeff());
  return d;
}

Metrics average(std::vector<DesignMetrics> per) {
  require(!per.empty(), ErrorCode::kInvalidInput, "metrics: no designs");
  Metrics m;
  const double n = static_cast<double>(per.size());
  auto acc = [n](FieldMetrics& a, const FieldMetrics& b) {
    a.rel_l2 += b.rel_l2 / n;
    a.mae += b.mae / n;
    a.max_abs_err += b.max_abs_err / n;
  };
  for (const DesignMetrics& d : per) {
    acc(m.T_part, d.T_part);
    acc(m.T_tool, d.T_tool);
    acc(m.alpha, d.alpha);
    acc(m.T_mid, d.T_mid);
    m.exotherm_err += d.exotherm_err / n;
    m.exotherm_window_err += d.exotherm_window_err / n;
  }
  m.per_design = std::move(per);
  return m;
}

FieldSolution resample(const FieldSolution& fine, const op::PredictGrid& grid) {
  require(grid.n_tool >= 2 && grid.n_part >= 2 && grid.n_times >= 2, ErrorCode::kInvalidInput,
          "resample: grid needs at least 2 points per axis");
  const double t_end = fine.times.back();
  FieldSolution out;
  out.design = fine.design;
  out.diag = fine.diag;
  out.grid.n_tool = grid.n_tool;
  out.grid.n_part = grid.n_part;
  out.grid.t_end = t_end;
  out.grid.dt = t_end / (grid.n_times - 1);
  out.T_tool.resize(grid.n_times, grid.n_tool);
  out.T_part.resize(grid.n_times, grid.n_part);
  out.alpha.resize(grid.n_times, grid.n_part);
  for (int r = 0; r < grid.n_times; ++r) {
    const double t = r + 1 == grid.n_times ? t_end : t_end * r / (grid.n_times - 1);
    out.times.push_back(t);
    for (int i = 0; i < grid.n_tool; ++i)
      out.T_tool(r, i) = solver::probe(fine, static_cast<double>(i) / (grid.n_tool - 1), t, solver::Field::kToolTemperature);
    for (int j = 0; j < grid.n_part; ++j) {
      const double x = static_cast<double>(j) / (grid.n_part - 1);
      out.T_part(r, j) = solver::probe(fine, x, t, solver::Field::kPartTemperature);
      out.alpha(r, j) = solver::probe(fine, x, t, solver::Field::kDegreeOfCure);
    }
  }
  return out;
}

namespace {

std::string cache_key(const design::DesignPoint& d, const EvalConfig& cfg) {
  std::string s = design::format_design_csv({d}, 0, "");
  char buf[256];
  std::snprintf(buf, sizeof buf, "|%d,%d,%.17g,%.17g|%d,%d,%.17g,%d|%d,%d,%d", cfg.solver_grid.n_tool,
                cfg.solver_grid.n_part, cfg.solver_grid.dt, cfg.solver_grid.t_end, cfg.solver_options.kinetics_substeps,
                cfg.solver_options.store_every, cfg.solver_options.bc_scale, cfg.solver_options.cooldown ? 1 : 0,
                cfg.grid.n_tool, cfg.grid.n_part, cfg.grid.n_times);
  return io::content_hash(s + buf);
}

FieldSolution solve_reference(const design::DesignPoint& d, const io::PropertySet& props, const EvalConfig& cfg) {
  solver::Grid1D g = cfg.solver_grid;
  if (g.t_end <= 0) g.t_end = d.cycle(props.T_init).duration_s();
  return resample(solver::solve(d, props, g, cfg.solver_options), cfg.grid);
}

}  // namespace

FieldSolution reference(const design::DesignPoint& d, const io::PropertySet& props, const EvalConfig& cfg,
                        const Warn& warn) {
  if (cfg.cache_dir.empty()) return solve_reference(d, props, cfg);
  namespace fs = std::filesystem;
  const std::string key = cache_key(d, cfg);
  const fs::path csv = fs::path(cfg.cache_dir) / ("ref_" + key + ".csv");
  const fs::path meta = fs::path(cfg.cache_dir) / ("ref_" + key + ".json");
  if (fs::exists(csv) && fs::exists(meta)) {
    try {
      const json m = json::parse(io::read_file(meta.string()));
      if (m.at("property_hash") == props.hash && m.at("key") == key) {
        FieldSolution sol = solver::parse_solution_csv(io::read_file(csv.string()));
        sol.design = d;
        return sol;
      }
      if (warn) warn("reference cache " + key + " was built with other material properties; recomputing");
    } catch (const std::exception& e) {
      if (warn) warn("reference cache " + key + " unreadable (" + e.what() + "); recomputing");
    }
  }
  FieldSolution sol = solve_reference(d, props, cfg);
  fs::create_directories(cfg.cache_dir);
  io::write_file_atomic(csv.string(), solver::format_solution_csv(sol));
  io::write_file_atomic(meta.string(), json{{"schema", "pidon.reference_cache"}, {"key", key}, {"property_hash", props.hash}}.dump(2) + "\n");
  return sol;
}

FieldSolution prediction(const op::OperatorTriplet& tri, const design::DesignPoint& d, const EvalConfig& cfg) {
  op::PredictGrid g = cfg.grid;
  g.t_end = d.cycle(tri.context.T0).duration_s();
  return op::predict_field(tri, d, g);
}

Metrics evaluate(const op::OperatorTriplet& tri, const std::vector<design::DesignPoint>& designs,
                 const io::PropertySet& props, const EvalConfig& cfg, const Warn& warn) {
  require(!designs.empty(), ErrorCode::kInvalidInput, "evaluate: no test designs");
  const std::size_t n = designs.size();
  std::vector<DesignMetrics> per(n);
  std::vector<std::vector<std::string>> warnings(n);
  std::vector<std::exception_ptr> errors(n);
  auto work = [&](std::size_t i) {
    try {
      const FieldSolution ref = reference(designs[i], props, cfg, [&](const std::string& w) { warnings[i].push_back(w); });
      per[i] = compare(prediction(tri, designs[i], cfg), ref, cfg.exotherm_window);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t nt = std::min<std::size_t>(n, cfg.threads > 0 ? static_cast<std::size_t>(cfg.threads) : hw);
  if (nt <= 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nt; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < n; i += nt) work(i);
      });
    for (auto& th : pool) th.join();
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (warn)
      for (const auto& w : warnings[i]) warn(w);
    if (errors[i]) std::rethrow_exception(errors[i]);
  }
  return average(std::move(per));
}

namespace {

json field_json(const FieldMetrics& f) {
  return {{"rel_l2", f.rel_l2}, {"mae", f.mae}, {"max_abs_err", f.max_abs_err}};
}

}  // namespace

std::string format_metrics_json(const Metrics& m) {
  json j;
  j["schema"] = "pidon.metrics";
  j["n_designs"] = m.per_design.size();
  j["T_part"] = field_json(m.T_part);
  j["T_tool"] = field_json(m.T_tool);
  j["alpha"] = field_json(m.alpha);
  j["T_mid"] = field_json(m.T_mid);
  j["exotherm_err_C"] = m.exotherm_err;
  j["exotherm_window_err_C"] = m.exotherm_window_err;
  json per = json::array();
  for (const DesignMetrics& d : m.per_design)
    per.push_back({{"T_part", field_json(d.T_part)},
                   {"T_tool", field_json(d.T_tool)},
                   {"alpha", field_json(d.alpha)},
                   {"T_mid", field_json(d.T_mid)},
                   {"exotherm_err_C", d.exotherm_err},
                   {"exotherm_window_err_C", d.exotherm_window_err}});
  j["per_design"] = per;
  return j.dump(2) + "\n";
}

std::string format_plot_data_csv(const FieldSolution& pred, const FieldSolution& ref, double T0) {
  require(pred.times.size() == ref.times.size(), ErrorCode::kInvalidInput, "plot data: time grids differ");
  const Eigen::Index np = pred.T_part.cols(), nr = ref.T_part.cols();
  require(np % 2 == 1 && nr % 2 == 1, ErrorCode::kInvalidInput, "plot data: part grids need an odd node count");
  const process::CureCycleSpec cycle = ref.design.cycle(T0);
  std::string out = "time_s,T_air_C,T_mid_pred_C,T_mid_ref_C,alpha_mid_pred,alpha_mid_ref\n";
  char buf[256];
  for (std::size_t r = 0; r < ref.times.size(); ++r) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", ref.times[r],
                  process::air_temperature(cycle, ref.times[r]), pred.T_part(r, np / 2), ref.T_part(r, nr / 2),
                  pred.alpha(r, np / 2), ref.alpha(r, nr / 2));
    out += buf;
  }
  return out;
}

double interface_mismatch(const op::OperatorTriplet& tri, const std::vector<design::DesignPoint>& designs, int n_x) {
  const auto& b = tri.g_tc.config.boundaries;
  const int nd = static_cast<int>(b.size()) - 1;
  if (nd < 2 || designs.empty()) return 0.0;
  std::vector<design::SensorizedInput> enc;
  for (const auto& d : designs) enc.push_back(tri.context.encode(d));
  const op::BranchInputs u = op::BranchInputs::from(enc);
  op::PointBatch left, right;
  const Eigen::Index P = static_cast<Eigen::Index>(designs.size()) * (nd - 1) * n_x;
  left.coords.resize(op::kTrunkInputs, P);
  Eigen::Index c = 0;
  for (std::size_t i = 0; i < designs.size(); ++i)
    for (int k = 1; k < nd; ++k)
      for (int j = 0; j < n_x; ++j, ++c) {
        left.coords(op::kInputX, c) = static_cast<double>(j) / (n_x - 1);
        left.coords(op::kInputTau, c) = b[k];
        left.design.push_back(static_cast<int>(i));
        left.decoder.push_back(k - 1);
        right.decoder.push_back(k);
      }
  right.coords = left.coords;
  right.design = left.design;
  const ad::JetLayout value_only(std::vector<ad::TrackedInput>{});
  double worst = 0.0;
  for (const op::DeepONetModel* m : {&tri.g_tc, &tri.g_tt, &tri.g_alpha}) {
    ad::Tape tape;
    const ad::Matrix l = op::forward_jet(tape, *m, u, left, value_only).data.value();
    const ad::Matrix r = op::forward_jet(tape, *m, u, right, value_only).data.value();
    worst = std::max(worst, (l - r).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace pidon::eval
