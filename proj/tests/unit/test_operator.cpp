#include <doctest.h>

#include <cmath>
#include <random>

#include "fd_oracle.hpp"
#include "pidon/error.hpp"
#include "pidon/op/operator.hpp"

using namespace pidon;
using namespace pidon::op;
using pidon::testing::rel_err;

namespace {

OperatorConfig small_config(int nd = 3) {
  OperatorConfig c;
  c.q = 8;
  c.hidden_layers = 2;
  c.width = 10;
  c.boundaries = uniform_boundaries(nd);
  return c;
}

/// Neuron-by-neuron evaluation, independent of the Eigen code path.
std::vector<double> naive_mlp(const MlpParams& p, std::vector<double> a) {
  for (int l = 0; l < p.num_layers(); ++l) {
    std::vector<double> z(p.layer_sizes[l + 1]);
    for (int i = 0; i < p.layer_sizes[l + 1]; ++i) {
      double s = p.biases[l][i];
      for (int j = 0; j < p.layer_sizes[l]; ++j) s += p.weights[l](i, j) * a[j];
      z[i] = l + 1 < p.num_layers() ? std::tanh(s) : s;
    }
    a = z;
  }
  return a;
}

double naive_predict(const DeepONetModel& m, const design::SensorizedInput& u, double x, double tau) {
  const auto b1 = naive_mlp(m.bn1, {u.bn1.begin(), u.bn1.end()});
  const auto b2 = naive_mlp(m.bn2, {u.bn2.begin(), u.bn2.end()});
  const auto t = naive_mlp(m.trunk, {x, tau});
  std::vector<double> z(b1.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = b1[i] * b2[i] * t[i];
  int k = 0;
  while (k + 1 < m.config.n_subdomains() && tau >= m.config.boundaries[k + 1]) ++k;
  return naive_mlp(m.decoders[k], z)[0];
}

design::SensorizedInput random_input(std::uint64_t seed) {
  const auto space = design::DesignSpace::named("small");
  const auto d = design::sample(space, 1, seed)[0];
  return design::encode(d, space, design::global_horizon(space));
}

}  // namespace

TEST_CASE("subdomain_index: endpoints and left-closed boundaries") {
  const OperatorConfig c;
  CHECK(c.n_subdomains() == 7);
  CHECK(subdomain_index(c.boundaries, 0.0) == 0);
  CHECK(subdomain_index(c.boundaries, 1.0) == 6);
  for (int k = 0; k < 7; ++k) CHECK(subdomain_index(c.boundaries, c.boundaries[k]) == k);
  CHECK(subdomain_index(c.boundaries, 0.479) == 2);
  CHECK(subdomain_index({0.0, 1.0}, 0.7) == 0);
  CHECK_THROWS_AS(subdomain_index(c.boundaries, 1.01), pidon::Error);
  OperatorConfig bad;
  bad.boundaries = {0.0, 0.5, 0.5, 1.0};
  CHECK_THROWS_AS(bad.validate(), pidon::Error);
  bad.boundaries = {0.1, 1.0};
  CHECK_THROWS_AS(bad.validate(), pidon::Error);
}

TEST_CASE("branch_merge") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n01;
  Vector a(50), b(50);
  for (int i = 0; i < 50; ++i) {
    a[i] = n01(rng);
    b[i] = n01(rng);
  }
  CHECK(branch_merge(Vector::Ones(50), b) == b);
  CHECK(branch_merge(a, b) == branch_merge(b, a));
  const Vector m = branch_merge(a, b);
  for (int i = 0; i < 50; ++i) CHECK(m[i] == a[i] * b[i]);
  CHECK_THROWS_AS(branch_merge(a, Vector::Ones(3)), pidon::Error);
}

TEST_CASE("init: determinism and Glorot variance") {
  const OperatorConfig c;
  const DeepONetModel a = DeepONetModel::init(c, 5), b = DeepONetModel::init(c, 5), d = DeepONetModel::init(c, 6);
  CHECK(a == b);
  CHECK_FALSE(a == d);
  CHECK(a.decoders.size() == 7);
  // Hidden 50x50 layers of the trunk: Var = 2 / (fan_in + fan_out) = 0.02.
  double s = 0, s2 = 0;
  int count = 0;
  for (int l = 1; l < a.trunk.num_layers() - 1; ++l)
    for (Eigen::Index i = 0; i < a.trunk.weights[l].size(); ++i) {
      const double w = a.trunk.weights[l].data()[i];
      s += w;
      s2 += w * w;
      ++count;
    }
  REQUIRE(count >= 10000);
  const double var = s2 / count - (s / count) * (s / count);
  CHECK(std::abs(var - 0.02) < 0.1 * 0.02);
  for (const MlpParams* p : a.parameter_sets())
    for (const auto& bias : p->biases) CHECK(bias.isZero());
}

TEST_CASE("predict matches a straight-line re-implementation") {
  const DeepONetModel m = DeepONetModel::init(small_config(4), 21);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u01(0, 1);
  for (int k = 0; k < 50; ++k) {
    const auto u = random_input(k);
    const double x = u01(rng), tau = k == 0 ? 1.0 : u01(rng);
    CHECK(rel_err(m.predict(u, x, tau), naive_predict(m, u, x, tau), 1e-12) < 1e-12);
  }
  CHECK_THROWS_AS(m.predict(random_input(1), 0.5, 1.5), pidon::Error);
}

TEST_CASE("zeroed decoder output layer predicts 0") {
  DeepONetModel m = DeepONetModel::init(small_config(), 3);
  for (auto& d : m.decoders) {
    d.weights.back().setZero();
    d.biases.back().setZero();
  }
  for (int k = 0; k < 10; ++k) CHECK(m.predict(random_input(k), 0.1 * k, 0.09 * k) == 0.0);
}

TEST_CASE("factorization: the merged branch vector is reusable across queries") {
  const DeepONetModel m = DeepONetModel::init(small_config(), 8);
  const auto u = random_input(4);
  const Vector merged = m.merged_branch(u);
  Matrix coords(2, 30);
  for (int p = 0; p < 30; ++p) coords.col(p) << p / 29.0, std::fmod(0.37 * p, 1.0);
  const Vector batch = m.predict_batch(merged, coords);
  for (int p = 0; p < 30; ++p) CHECK(batch[p] == doctest::Approx(m.predict(u, coords(0, p), coords(1, p))).epsilon(1e-13));
  CHECK(m.merged_branch(u) == merged);
}

TEST_CASE("linear decoder starts as the plain inner product") {
  OperatorConfig c = small_config();
  c.linear_decoder = true;
  const DeepONetModel m = DeepONetModel::init(c, 4);
  const auto u = random_input(9);
  Matrix coords(2, 1);
  coords << 0.3, 0.6;
  const Vector t = ad::mlp_forward(m.trunk, coords).col(0);
  const double expected = m.merged_branch(u).cwiseProduct(t).sum();
  CHECK(m.predict(u, 0.3, 0.6) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("forward_jet: values match predict and derivatives match finite differences") {
  const DeepONetModel m = DeepONetModel::init(small_config(3), 17);
  std::vector<design::SensorizedInput> inputs = {random_input(1), random_input(2)};
  const BranchInputs u = BranchInputs::from(inputs);
  PointBatch pts;
  pts.coords.resize(2, 12);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u01(0.02, 0.98);
  for (int p = 0; p < 12; ++p) {
    double tau = u01(rng);
    // keep FD stencils inside one subdomain
    while (std::abs(tau - 1.0 / 3) < 0.01 || std::abs(tau - 2.0 / 3) < 0.01) tau = u01(rng);
    pts.coords.col(p) << u01(rng), tau;
    pts.design.push_back(p % 2);
  }
  const ad::JetLayout layout({{kInputX, 2}, {kInputTau, 1}});
  ad::Tape tape;
  const ad::JetBatch y = forward_jet(tape, m, u, pts, layout);
  const Matrix& v = y.data.value();
  const double h = 1e-5;
  for (int p = 0; p < 12; ++p) {
    const auto& in = inputs[p % 2];
    const double x = pts.coords(0, p), tau = pts.coords(1, p);
    CHECK(rel_err(v(0, p), m.predict(in, x, tau), 1e-12) < 1e-12);
    const double dx = (m.predict(in, x + h, tau) - m.predict(in, x - h, tau)) / (2 * h);
    const double dxx = (m.predict(in, x + 1e-3, tau) - 2 * m.predict(in, x, tau) + m.predict(in, x - 1e-3, tau)) / 1e-6;
    const double dt = (m.predict(in, x, tau + h) - m.predict(in, x, tau - h)) / (2 * h);
    CHECK(rel_err(v(0, layout.d1_channel(0) * 12 + p), dx) < 1e-6);
    CHECK(rel_err(v(0, layout.d2_channel(0) * 12 + p), dxx) < 1e-4);
    CHECK(rel_err(v(0, layout.d1_channel(1) * 12 + p), dt) < 1e-6);
  }

  SUBCASE("forced decoder selection") {
    PointBatch forced = pts;
    forced.decoder.assign(12, 2);
    ad::Tape t2;
    const Matrix f = forward_jet(t2, m, u, forced, ad::JetLayout{}).data.value();
    for (int p = 0; p < 12; ++p) {
      Vector z = ad::mlp_forward(m.trunk, Matrix(pts.coords.col(p))).col(0);
      z = z.cwiseProduct(m.merged_branch(inputs[p % 2]));
      CHECK(rel_err(f(0, p), ad::mlp_forward(m.decoders[2], std::span<const double>(z.data(), z.size()))[0], 1e-12) < 1e-12);
    }
  }
  PointBatch bad = pts;
  bad.design[0] = 5;
  ad::Tape t3;
  CHECK_THROWS_AS(forward_jet(t3, m, u, bad, layout), pidon::Error);
}

TEST_CASE("predict_field: pointwise consistency, zero decoders and alpha clamp") {
  const auto ctx = OperatorContext::for_space(design::DesignSpace::named("small"));
  CHECK(ctx.T_ref == 233.0);
  OperatorTriplet tri = OperatorTriplet::init(small_config(), ctx, 3);
  CHECK_FALSE(tri.g_tc == tri.g_tt);
  const design::DesignPoint d = design::sample(ctx.space, 1, 9)[0];
  PredictGrid g{5, 7, 9, 0.0};
  const solver::FieldSolution f = predict_field(tri, d, g);
  REQUIRE(f.T_part.rows() == 9);
  REQUIRE(f.T_part.cols() == 7);
  CHECK(f.times.back() == ctx.horizon);
  const auto u = ctx.encode(d);
  for (int r = 0; r < 9; ++r)
    for (int j = 0; j < 7; ++j) {
      const double tau = f.times[r] / ctx.horizon, x = j / 6.0;
      CHECK(f.T_part(r, j) == doctest::Approx(tri.g_tc.output.to_physical(tri.g_tc.predict(u, x, tau))).epsilon(1e-13));
    }
  CHECK(f.T_tool(2, 4) == doctest::Approx(tri.g_tt.output.to_physical(tri.g_tt.predict(u, 1.0, 0.25))).epsilon(1e-13));

  for (DeepONetModel* m : {&tri.g_tc, &tri.g_tt, &tri.g_alpha})
    for (auto& dec : m->decoders) dec.weights.back().setZero();
  for (auto& dec : tri.g_alpha.decoders) dec.biases.back().setConstant(1.5);
  std::size_t clamped = 0;
  const solver::FieldSolution z = predict_field(tri, d, g, &clamped);
  CHECK((z.T_part.array() == ctx.T0).all());
  CHECK((z.T_tool.array() == ctx.T0).all());
  CHECK((z.alpha.array() == 1.0).all());
  CHECK(clamped == static_cast<std::size_t>(z.alpha.size()));
  g.t_end = 2 * ctx.horizon;
  CHECK_THROWS_AS(predict_field(tri, d, g), pidon::Error);
}
