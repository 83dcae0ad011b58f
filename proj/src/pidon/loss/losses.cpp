#include "pidon/loss/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "pidon/error.hpp"
#include "pidon/process/residuals.hpp"

namespace pidon::loss {

using ad::JetBatch;
using ad::JetLayout;
using ad::Matrix;
using ad::Var;
using op::kInputTau;
using op::kInputX;
using process::kSpace;
using process::kTime;

namespace {

// Kelvin window for the ODE loss; outside it the rate is frozen at the edge.
constexpr double kOdeTminK = 173.15;
constexpr double kOdeTmaxK = 673.15;

const JetLayout kNoDerivatives{};
const JetLayout kSpaceFirst({{kInputX, 1}});
const JetLayout kTimeFirst({{kInputTau, 1}});
const JetLayout kHeat({{kInputX, 2}, {kInputTau, 1}});

ad::Jet2<Var> to_jet(const JetBatch& y) {
  ad::Jet2<Var> j;
  j.value = y.value();
  j.d1.resize(2);
  j.d2.resize(2);
  for (std::size_t k = 0; k < y.layout.tracked().size(); ++k) {
    const std::size_t slot = y.layout.tracked()[k].index == kInputX ? kSpace : kTime;
    j.d1[slot] = y.channel(y.layout.d1_channel(k));
    if (y.layout.d2_channel(k) >= 0) j.d2[slot] = y.channel(y.layout.d2_channel(k));
  }
  return j;
}

Matrix per_point(const std::vector<double>& per_design, const PointBatch& pts, const std::vector<int>& designs) {
  Matrix row(1, pts.size());
  for (Eigen::Index p = 0; p < pts.size(); ++p) row(0, p) = per_design[designs[pts.design[p]]];
  return row;
}

Matrix air_row(const LossProblem& prob, const PointBatch& pts, const std::vector<int>& designs) {
  Matrix row(1, pts.size());
  for (Eigen::Index p = 0; p < pts.size(); ++p) row(0, p) = prob.air(designs[pts.design[p]], pts.coords(kInputTau, p));
  return row;
}

JetBatch eval(ad::Tape& tape, const op::DeepONetModel& m, const op::BranchInputs& u, const PointBatch& pts,
              const JetLayout& layout) {
  return op::forward_jet(tape, m, u, pts, layout);
}

Var mse(Var r) { return ad::mean(ad::square(r)); }

bool has_temperature(LossGroup g) { return g != LossGroup::kCure; }
bool has_cure(LossGroup g) { return g != LossGroup::kTemperature; }

}  // namespace

void CollocationCounts::validate() const {
  require(designs_per_draw >= 1 && interior >= 1 && ic >= 1 && bc >= 1 && interface_temporal >= 0 && continuity >= 1,
          ErrorCode::kInvalidInput, "collocation counts must be positive");
}

CollocationSet sample_collocation(const CollocationCounts& counts, int n_designs,
                                  const std::vector<double>& boundaries, std::uint64_t seed) {
  counts.validate();
  require(n_designs >= 1, ErrorCode::kInvalidInput, "collocation: no designs");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  CollocationSet s;
  s.designs.resize(n_designs);
  std::iota(s.designs.begin(), s.designs.end(), 0);
  if (n_designs > counts.designs_per_draw) {
    std::shuffle(s.designs.begin(), s.designs.end(), rng);
    s.designs.resize(counts.designs_per_draw);
    std::sort(s.designs.begin(), s.designs.end());
  }
  std::uniform_int_distribution<int> pick(0, static_cast<int>(s.designs.size()) - 1);

  auto make = [&](int n, auto&& coords) {
    PointBatch b;
    b.coords.resize(2, n);
    b.design.resize(n);
    for (int p = 0; p < n; ++p) {
      const auto [x, tau] = coords(p);
      b.coords(kInputX, p) = x;
      b.coords(kInputTau, p) = tau;
      b.design[p] = pick(rng);
    }
    return b;
  };
  s.ic = make(counts.ic, [&](int) { return std::pair{u01(rng), 0.0}; });
  s.bc_top = make(counts.bc, [&](int) { return std::pair{1.0, u01(rng)}; });
  s.bc_bottom = make(counts.bc, [&](int) { return std::pair{0.0, u01(rng)}; });

  // Stratified interior tau: floor(Q w_k) per subdomain, remainder by largest fraction.
  const int nd = static_cast<int>(boundaries.size()) - 1;
  const int Q = counts.interior;
  std::vector<int> alloc(nd);
  std::vector<std::pair<double, int>> frac(nd);
  int used = 0;
  for (int k = 0; k < nd; ++k) {
    const double share = Q * (boundaries[k + 1] - boundaries[k]);
    alloc[k] = static_cast<int>(std::floor(share));
    frac[k] = {share - alloc[k], -k};
    used += alloc[k];
  }
  std::sort(frac.rbegin(), frac.rend());
  for (int i = 0; used < Q; ++i, ++used) ++alloc[-frac[i % nd].second];
  std::vector<int> stratum;
  for (int k = 0; k < nd; ++k) stratum.insert(stratum.end(), alloc[k], k);
  auto interior = [&](int p) {
    const int k = stratum[p];
    const double tau = boundaries[k] + (boundaries[k + 1] - boundaries[k]) * u01(rng);
    return std::pair{u01(rng), std::min(tau, 1.0)};
  };
  s.interior_tool = make(Q, interior);
  s.interior_part = make(Q, interior);

  const int nif = nd > 1 ? counts.interface_temporal : 0;
  std::uniform_int_distribution<int> pick_boundary(1, std::max(1, nd - 1));
  std::vector<int> kb(nif);
  s.if_left = make(nif, [&](int p) {
    kb[p] = pick_boundary(rng);
    return std::pair{u01(rng), boundaries[kb[p]]};
  });
  s.if_right = s.if_left;
  s.if_left.decoder.resize(nif);
  s.if_right.decoder.resize(nif);
  for (int p = 0; p < nif; ++p) {
    s.if_left.decoder[p] = kb[p] - 1;
    s.if_right.decoder[p] = kb[p];
  }

  s.ct_tool = make(counts.continuity, [&](int) { return std::pair{1.0, u01(rng)}; });
  s.ct_part = s.ct_tool;
  s.ct_part.coords.row(kInputX).setZero();
  return s;
}

LossProblem LossProblem::build(const io::PropertySet& props, const op::OperatorContext& context,
                               const std::vector<design::DesignPoint>& designs) {
  require(!designs.empty(), ErrorCode::kInvalidInput, "loss problem: no designs");
  require(context.horizon > 0, ErrorCode::kInvalidInput, "loss problem: horizon must be positive");
  props.materials.validate();
  LossProblem p;
  p.props = props;
  p.context = context;
  p.designs = designs;
  const auto& m = props.materials;
  const double H = context.horizon;
  for (const auto& d : designs) {
    p.inputs.push_back(context.encode(d));
    p.cycles.push_back(d.cycle(context.T0));
    p.diff_tool.push_back(m.a_t() * H / (d.L_t * d.L_t));
    p.diff_part.push_back(m.a_c() * H / (d.L_c * d.L_c));
    p.biot_top.push_back(d.h_top * d.L_c / m.part.k);
    p.biot_bot.push_back(d.h_bot * d.L_t / m.tool.k);
    p.flux_ratio.push_back((m.tool.k / d.L_t) / (m.part.k / d.L_c));
  }
  p.generation = m.b_c() / context.delta_T();
  p.ic_T = (props.T_init - context.T0) / context.delta_T();
  return p;
}

op::BranchInputs LossProblem::branch(const std::vector<int>& subset) const {
  std::vector<design::SensorizedInput> in;
  for (int i : subset) in.push_back(inputs.at(i));
  return op::BranchInputs::from(in);
}

double LossProblem::air(int d, double tau) const {
  return (process::air_temperature(cycles[d], tau * context.horizon) - context.T0) / context.delta_T();
}

double LossProblem::ode_rate(double alpha, double T_hat) const {
  const double a = std::clamp(alpha, process::kAlphaGuard, 1.0 - process::kAlphaGuard);
  const double T = std::clamp(process::to_kelvin(context.T0 + context.delta_T() * T_hat), kOdeTminK, kOdeTmaxK);
  return context.horizon * process::cure_rate(a, T, props.kinetics);
}

const char* LossBreakdown::name(int i) {
  static const char* names[kCount] = {"l_ic_T",     "l_ic_alpha", "l_bc_top",      "l_bc_bot",   "l_pde_tool",
                                      "l_pde_part", "l_ode",      "l_if_temporal", "l_ct_value", "l_ct_flux"};
  return names[i];
}

double& LossBreakdown::operator[](int i) {
  double* f[kCount] = {&l_ic_T,     &l_ic_alpha, &l_bc_top,      &l_bc_bot,   &l_pde_tool,
                       &l_pde_part, &l_ode,      &l_if_temporal, &l_ct_value, &l_ct_flux};
  return *f[i];
}

double LossBreakdown::operator[](int i) const { return const_cast<LossBreakdown&>(*this)[i]; }

LossBreakdown LossTerms::values() const {
  LossBreakdown b;
  for (int i = 0; i < LossBreakdown::kCount; ++i) b[i] = c[i].valid() ? c[i].scalar() : 0.0;
  return b;
}

std::pair<Var, Var> loss_ic(ad::Tape& tape, const op::OperatorTriplet& tri, const LossProblem& prob,
                            const CollocationSet& set, const op::BranchInputs& u, LossGroup group) {
  require(set.ic.size() > 0, ErrorCode::kInvalidInput, "loss_ic: empty collocation set");
  Var lT, la;
  if (has_temperature(group)) {
    const Var tt = eval(tape, tri.g_tt, u, set.ic, kNoDerivatives).value();
    const Var tc = eval(tape, tri.g_tc, u, set.ic, kNoDerivatives).value();
    lT = 0.5 * (mse(tt - prob.ic_T) + mse(tc - prob.ic_T));
  }
  if (has_cure(group)) {
    const Var a = eval(tape, tri.g_alpha, u, set.ic, kNoDerivatives).value();
    la = mse(a - prob.context.alpha0);
  }
  return {lT, la};
}

std::pair<Var, Var> loss_bc(ad::Tape& tape, const op::OperatorTriplet& tri, const LossProblem& prob,
                            const CollocationSet& set, const op::BranchInputs& u) {
  require(set.bc_top.size() > 0 && set.bc_bottom.size() > 0, ErrorCode::kInvalidInput, "loss_bc: empty set");
  const auto top = to_jet(eval(tape, tri.g_tc, u, set.bc_top, kSpaceFirst));
  const auto bot = to_jet(eval(tape, tri.g_tt, u, set.bc_bottom, kSpaceFirst));
  const Var r_top = process::robin_top_residual(top, air_row(prob, set.bc_top, set.designs),
                                                per_point(prob.biot_top, set.bc_top, set.designs));
  const Var r_bot = process::robin_bottom_residual(bot, air_row(prob, set.bc_bottom, set.designs),
                                                   per_point(prob.biot_bot, set.bc_bottom, set.designs));
  return {mse(r_top), mse(r_bot)};
}

PhysicsTerms loss_physics(ad::Tape& tape, const op::OperatorTriplet& tri, const LossProblem& prob,
                          const CollocationSet& set, const op::BranchInputs& u, double bc_scale, LossGroup group) {
  require(bc_scale >= 0 && bc_scale <= 1, ErrorCode::kDomain, "bc_scale must lie in [0, 1]");
  require(set.interior_tool.size() > 0 && set.interior_part.size() > 0, ErrorCode::kInvalidInput,
          "loss_physics: empty set");
  PhysicsTerms out;
  const double G = bc_scale * prob.generation;
  if (has_temperature(group)) {
    const auto tt = to_jet(eval(tape, tri.g_tt, u, set.interior_tool, kHeat));
    out.pde_tool = mse(process::heat_residual(tt, per_point(prob.diff_tool, set.interior_tool, set.designs)));
  }
  const bool need_alpha = has_cure(group) || G != 0.0;
  const bool need_tc_jet = has_temperature(group);
  ad::Jet2<Var> a, tc;
  if (need_alpha) a = to_jet(eval(tape, tri.g_alpha, u, set.interior_part, kTimeFirst));
  if (need_tc_jet || has_cure(group))
    tc = to_jet(eval(tape, tri.g_tc, u, set.interior_part, need_tc_jet ? kHeat : kNoDerivatives));
  if (has_temperature(group)) {
    const Matrix D = per_point(prob.diff_part, set.interior_part, set.designs);
    out.pde_part = mse(G != 0.0 ? process::heat_residual_with_source(tc, a.d1[kTime], D, G)
                                : process::heat_residual(tc, D));
  }
  if (has_cure(group)) {
    const double H = prob.context.horizon, dT = prob.context.delta_T(), T0 = prob.context.T0;
    const auto& kin = prob.props.kinetics;
    const Var rate = ad::map2(
        a.value, tc.value, [&prob](double al, double th) { return prob.ode_rate(al, th); },
        [H, dT, T0, kin](double al, double th) {
          const double ac = std::clamp(al, process::kAlphaGuard, 1.0 - process::kAlphaGuard);
          const double TK = process::to_kelvin(T0 + dT * th);
          const double Tc = std::clamp(TK, kOdeTminK, kOdeTmaxK);
          const process::CureRateJet j = process::cure_rate_partials(ac, Tc, kin);
          return std::pair{ac == al ? H * j.d_alpha : 0.0, Tc == TK ? H * j.d_T * dT : 0.0};
        });
    out.ode = mse(a.d1[kTime] - rate);
  }
  return out;
}

Var loss_interface_temporal(ad::Tape& tape, const op::OperatorTriplet& tri, const CollocationSet& set,
                            const op::BranchInputs& u, LossGroup group) {
  Var total = tape.scalar_constant(0.0);
  if (set.if_left.size() == 0) return total;
  std::vector<const op::DeepONetModel*> models;
  if (has_temperature(group)) models = {&tri.g_tc, &tri.g_tt};
  if (has_cure(group)) models.push_back(&tri.g_alpha);
  for (const op::DeepONetModel* m : models) {
    if (m->config.n_subdomains() < 2) continue;
    const Var l = eval(tape, *m, u, set.if_left, kNoDerivatives).value();
    const Var r = eval(tape, *m, u, set.if_right, kNoDerivatives).value();
    total = total + mse(l - r);
  }
  return total;
}

std::pair<Var, Var> loss_continuity_material(ad::Tape& tape, const op::OperatorTriplet& tri, const LossProblem& prob,
                                             const CollocationSet& set, const op::BranchInputs& u) {
  require(set.ct_tool.size() > 0, ErrorCode::kInvalidInput, "loss_continuity_material: empty set");
  const auto tt = to_jet(eval(tape, tri.g_tt, u, set.ct_tool, kSpaceFirst));
  const auto tc = to_jet(eval(tape, tri.g_tc, u, set.ct_part, kSpaceFirst));
  const Matrix ratio = per_point(prob.flux_ratio, set.ct_tool, set.designs);
  const Matrix one = Matrix::Ones(1, set.ct_tool.size());
  return {mse(tt.value - tc.value), mse(process::interface_flux_residual(tt, tc, ratio, one))};
}

LossTerms build_losses(ad::Tape& tape, const op::OperatorTriplet& tri, const LossProblem& prob,
                       const CollocationSet& set, double bc_scale, LossGroup group) {
  const op::BranchInputs u = prob.branch(set.designs);
  LossTerms t;
  auto [ic_T, ic_a] = loss_ic(tape, tri, prob, set, u, group);
  t.c[0] = ic_T;
  t.c[1] = ic_a;
  if (has_temperature(group)) {
    auto [top, bot] = loss_bc(tape, tri, prob, set, u);
    t.c[2] = top;
    t.c[3] = bot;
    auto [v, f] = loss_continuity_material(tape, tri, prob, set, u);
    t.c[8] = v;
    t.c[9] = f;
  }
  const PhysicsTerms ph = loss_physics(tape, tri, prob, set, u, bc_scale, group);
  t.c[4] = ph.pde_tool;
  t.c[5] = ph.pde_part;
  t.c[6] = ph.ode;
  t.c[7] = loss_interface_temporal(tape, tri, set, u, group);
  return t;
}

Var total_loss(ad::Tape& tape, const LossTerms& terms, const LossWeights& w) {
  Var sum = tape.scalar_constant(0.0);
  for (int i = 0; i < LossBreakdown::kCount; ++i)
    if (terms.c[i].valid() && w.w[i] != 0.0) sum = sum + w.w[i] * terms.c[i];
  return sum;
}

double total_loss(const LossBreakdown& b, const LossWeights& w) {
  double s = 0.0;
  for (int i = 0; i < LossBreakdown::kCount; ++i) s += w.w[i] * b[i];
  return s;
}

}  // namespace pidon::loss
