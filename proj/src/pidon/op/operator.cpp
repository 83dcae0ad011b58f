#include "pidon/op/operator.hpp"

#include <algorithm>
#include <random>

#include "pidon/error.hpp"

namespace pidon::op {

std::vector<int> OperatorConfig::branch1_layers() const {
  return ad::default_layers(design::kScalarCount, q, hidden_layers, width);
}
std::vector<int> OperatorConfig::branch2_layers() const {
  return ad::default_layers(design::kSensorCount, q, hidden_layers, width);
}
std::vector<int> OperatorConfig::trunk_layers() const { return ad::default_layers(kTrunkInputs, q, hidden_layers, width); }
std::vector<int> OperatorConfig::decoder_layers() const {
  if (linear_decoder) return {q, 1};
  return ad::default_layers(q, 1, hidden_layers, width);
}

void OperatorConfig::validate() const {
  require(q >= 1 && width >= 1 && hidden_layers >= 0, ErrorCode::kInvalidInput, "operator: bad network sizes");
  require(boundaries.size() >= 2, ErrorCode::kInvalidInput, "operator: need at least one subdomain");
  require(boundaries.front() == 0.0 && boundaries.back() == 1.0, ErrorCode::kInvalidInput,
          "operator: subdomain boundaries must span [0, 1]");
  for (std::size_t k = 1; k < boundaries.size(); ++k)
    require(boundaries[k] > boundaries[k - 1], ErrorCode::kInvalidInput,
            "operator: subdomain boundaries must be strictly increasing");
}

std::vector<double> uniform_boundaries(int n) {
  require(n >= 1, ErrorCode::kInvalidInput, "need at least one subdomain");
  std::vector<double> b(n + 1);
  for (int k = 0; k <= n; ++k) b[k] = static_cast<double>(k) / n;
  b[n] = 1.0;
  return b;
}

int subdomain_index(const std::vector<double>& boundaries, double tau) {
  require(tau >= 0.0 && tau <= 1.0, ErrorCode::kDomain, "tau outside [0, 1]");
  const int last = static_cast<int>(boundaries.size()) - 2;
  const auto it = std::upper_bound(boundaries.begin(), boundaries.end(), tau);
  return std::clamp(static_cast<int>(it - boundaries.begin()) - 1, 0, last);
}

Vector branch_merge(const Vector& b1, const Vector& b2) {
  require(b1.size() == b2.size(), ErrorCode::kInvalidInput, "branch_merge: length mismatch");
  return b1.cwiseProduct(b2);
}

DeepONetModel DeepONetModel::init(const OperatorConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  DeepONetModel m;
  m.config = config;
  m.bn1 = MlpParams::glorot(config.branch1_layers(), rng);
  m.bn2 = MlpParams::glorot(config.branch2_layers(), rng);
  m.trunk = MlpParams::glorot(config.trunk_layers(), rng);
  for (int k = 0; k < config.n_subdomains(); ++k) {
    if (config.linear_decoder) {
      MlpParams d = MlpParams::zeros(config.decoder_layers());
      d.weights[0].setOnes();
      m.decoders.push_back(std::move(d));
    } else {
      m.decoders.push_back(MlpParams::glorot(config.decoder_layers(), rng));
    }
  }
  return m;
}

std::vector<MlpParams*> DeepONetModel::parameter_sets() {
  std::vector<MlpParams*> out = {&bn1, &bn2, &trunk};
  for (auto& d : decoders) out.push_back(&d);
  return out;
}

std::vector<const MlpParams*> DeepONetModel::parameter_sets() const {
  std::vector<const MlpParams*> out = {&bn1, &bn2, &trunk};
  for (const auto& d : decoders) out.push_back(&d);
  return out;
}

std::size_t DeepONetModel::parameter_count() const {
  std::size_t n = 0;
  for (const MlpParams* p : parameter_sets()) n += p->parameter_count();
  return n;
}

bool DeepONetModel::operator==(const DeepONetModel& o) const {
  return config == o.config && bn1 == o.bn1 && bn2 == o.bn2 && trunk == o.trunk && decoders == o.decoders &&
         output == o.output;
}

Vector DeepONetModel::merged_branch(const design::SensorizedInput& u) const {
  return branch_merge(ad::mlp_forward(bn1, u.bn1), ad::mlp_forward(bn2, u.bn2));
}

double DeepONetModel::predict(const design::SensorizedInput& u, double x, double tau) const {
  require(tau >= 0.0 && tau <= 1.0, ErrorCode::kDomain, "predict: tau outside [0, 1]");
  Matrix c(kTrunkInputs, 1);
  c << x, tau;
  return predict_batch(merged_branch(u), c)[0];
}

Vector DeepONetModel::predict_batch(const Vector& merged, const Matrix& coords) const {
  require(coords.rows() == kTrunkInputs, ErrorCode::kInvalidInput, "predict: coords must be 2 x P");
  const Eigen::Index P = coords.cols();
  Matrix z = ad::mlp_forward(trunk, coords);
  z.array().colwise() *= merged.array();
  std::vector<std::vector<int>> groups(decoders.size());
  for (Eigen::Index p = 0; p < P; ++p) groups[subdomain_index(config.boundaries, coords(kInputTau, p))].push_back(p);
  Vector out(P);
  for (std::size_t k = 0; k < groups.size(); ++k) {
    if (groups[k].empty()) continue;
    const Matrix y = ad::mlp_forward(decoders[k], Matrix(z(Eigen::all, groups[k])));
    for (std::size_t i = 0; i < groups[k].size(); ++i) out[groups[k][i]] = y(0, i);
  }
  return out;
}

BranchInputs BranchInputs::from(const std::vector<design::SensorizedInput>& inputs) {
  BranchInputs b;
  const Eigen::Index n = static_cast<Eigen::Index>(inputs.size());
  b.bn1.resize(design::kScalarCount, n);
  b.bn2.resize(design::kSensorCount, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int r = 0; r < design::kScalarCount; ++r) b.bn1(r, i) = inputs[i].bn1[r];
    for (int r = 0; r < design::kSensorCount; ++r) b.bn2(r, i) = inputs[i].bn2[r];
  }
  return b;
}

void PointBatch::validate(Eigen::Index n_designs, int n_subdomains) const {
  require(coords.rows() == kTrunkInputs, ErrorCode::kInvalidInput, "points: coords must be 2 x P");
  require(static_cast<Eigen::Index>(design.size()) == coords.cols(), ErrorCode::kInvalidInput,
          "points: one design index per point");
  require(decoder.empty() || static_cast<Eigen::Index>(decoder.size()) == coords.cols(), ErrorCode::kInvalidInput,
          "points: decoder override must cover every point");
  for (int d : design) require(d >= 0 && d < n_designs, ErrorCode::kInvalidInput, "points: design index out of range");
  for (int k : decoder) require(k >= 0 && k < n_subdomains, ErrorCode::kInvalidInput, "points: bad decoder index");
}

ad::JetBatch forward_jet(ad::Tape& tape, const DeepONetModel& m, const BranchInputs& u, const PointBatch& pts,
                         const ad::JetLayout& layout) {
  pts.validate(u.designs(), m.config.n_subdomains());
  const ad::Var b1 = ad::mlp_forward_jet(tape, m.bn1, ad::as_jet(tape.constant(u.bn1))).data;
  const ad::Var b2 = ad::mlp_forward_jet(tape, m.bn2, ad::as_jet(tape.constant(u.bn2))).data;
  const ad::Var merged = ad::gather_cols(b1 * b2, pts.design);
  const ad::JetBatch t = ad::mlp_forward_jet(tape, m.trunk, ad::seed_inputs(tape, pts.coords, layout));
  const ad::JetBatch z = ad::scale_channels(tape, t, merged);

  const Eigen::Index P = pts.size();
  std::vector<std::vector<int>> groups(m.decoders.size());
  for (Eigen::Index p = 0; p < P; ++p) {
    const int k = pts.decoder.empty() ? subdomain_index(m.config.boundaries, pts.coords(kInputTau, p)) : pts.decoder[p];
    groups[k].push_back(static_cast<int>(p));
  }
  std::vector<ad::JetBatch> parts;
  std::vector<std::vector<int>> idx;
  for (std::size_t k = 0; k < groups.size(); ++k) {
    if (groups[k].empty()) continue;
    if (static_cast<Eigen::Index>(groups[k].size()) == P) return ad::mlp_forward_jet(tape, m.decoders[k], z);
    parts.push_back(ad::mlp_forward_jet(tape, m.decoders[k], ad::gather_points(tape, z, groups[k])));
    idx.push_back(groups[k]);
  }
  return ad::scatter_points(tape, parts, idx, P);
}

OperatorContext OperatorContext::for_space(const design::DesignSpace& space, double T0, double alpha0) {
  space.validate(true);
  OperatorContext c;
  c.space = space;
  c.T0 = T0;
  c.T_ref = space.max_ht2() + 50.0;
  c.horizon = design::global_horizon(space, T0);
  c.alpha0 = alpha0;
  return c;
}

design::SensorizedInput OperatorContext::encode(const design::DesignPoint& d) const {
  return design::encode(d, space, horizon, T0);
}

OperatorTriplet OperatorTriplet::init(const OperatorConfig& config, const OperatorContext& context,
                                      std::uint64_t seed) {
  OperatorTriplet t;
  t.context = context;
  std::seed_seq seq{seed, std::uint64_t{0x7079646f6e}};
  std::vector<std::uint64_t> seeds(3);
  seq.generate(seeds.begin(), seeds.end());
  t.g_tc = DeepONetModel::init(config, seeds[0]);
  t.g_tt = DeepONetModel::init(config, seeds[1]);
  t.g_alpha = DeepONetModel::init(config, seeds[2]);
  t.g_tc.output = t.g_tt.output = OutputScale{context.T0, context.delta_T()};
  t.g_alpha.output = OutputScale{0.0, 1.0};
  return t;
}

bool OperatorTriplet::operator==(const OperatorTriplet& o) const {
  return g_tc == o.g_tc && g_tt == o.g_tt && g_alpha == o.g_alpha && context.T0 == o.context.T0 &&
         context.T_ref == o.context.T_ref && context.horizon == o.context.horizon &&
         context.alpha0 == o.context.alpha0 && context.space.label == o.context.space.label;
}

solver::FieldSolution predict_field(const OperatorTriplet& triplet, const design::DesignPoint& d,
                                    const PredictGrid& grid, std::size_t* alpha_clamped) {
  require(grid.n_tool >= 2 && grid.n_part >= 2 && grid.n_times >= 2, ErrorCode::kInvalidInput,
          "predict: grid needs at least 2 points per axis");
  const double H = triplet.context.horizon;
  const double t_end = grid.t_end > 0 ? grid.t_end : H;
  require(t_end <= H * (1 + 1e-12), ErrorCode::kDomain, "predict: t_end beyond the operator horizon");
  const design::SensorizedInput u = triplet.context.encode(d);

  solver::FieldSolution sol;
  sol.design = d;
  sol.grid.n_tool = grid.n_tool;
  sol.grid.n_part = grid.n_part;
  sol.grid.t_end = t_end;
  sol.grid.dt = t_end / (grid.n_times - 1);
  for (int r = 0; r < grid.n_times; ++r) sol.times.push_back(r + 1 == grid.n_times ? t_end : t_end * r / (grid.n_times - 1));

  auto eval = [&](const DeepONetModel& m, int nx) {
    Matrix coords(kTrunkInputs, static_cast<Eigen::Index>(nx) * grid.n_times);
    for (int r = 0; r < grid.n_times; ++r)
      for (int j = 0; j < nx; ++j) {
        coords(kInputX, r * nx + j) = static_cast<double>(j) / (nx - 1);
        coords(kInputTau, r * nx + j) = std::min(1.0, sol.times[r] / H);
      }
    const Vector y = m.predict_batch(m.merged_branch(u), coords);
    solver::Matrix out(grid.n_times, nx);
    for (int r = 0; r < grid.n_times; ++r)
      for (int j = 0; j < nx; ++j) out(r, j) = m.output.to_physical(y[r * nx + j]);
    return out;
  };
  sol.T_tool = eval(triplet.g_tt, grid.n_tool);
  sol.T_part = eval(triplet.g_tc, grid.n_part);
  sol.alpha = eval(triplet.g_alpha, grid.n_part);
  std::size_t clamped = 0;
  for (Eigen::Index i = 0; i < sol.alpha.size(); ++i) {
    double& a = sol.alpha.data()[i];
    if (a < 0.0 || a > 1.0) {
      ++clamped;
      a = std::clamp(a, 0.0, 1.0);
    }
  }
  if (alpha_clamped) *alpha_clamped = clamped;
  return sol;
}

}  // namespace pidon::op
