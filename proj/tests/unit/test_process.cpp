#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "../common/oracles.hpp"
#include "fd_oracle.hpp"
#include "pidon/error.hpp"
#include "pidon/io/properties.hpp"
#include "pidon/process/model.hpp"
#include "pidon/process/residuals.hpp"

using namespace pidon;
using namespace pidon::process;
using pidon::testing::central_diff;
using pidon::testing::kRateOracle;
using pidon::testing::rel_err;

namespace {

Jet2<double> jet(double v, double dx, double dt, double dxx) { return Jet2<double>{v, {dx, dt}, {dxx, 0.0}}; }

MaterialProps sample_props() { return io::default_properties().materials; }

}  // namespace

TEST_CASE("cure_rate: fixed points at alpha = 0 and alpha = 1") {
  const CureKineticsParams p;
  for (double T : {300.0, 400.0, 450.0, 480.0}) {
    CHECK(cure_rate(0.0, T, p) == 0.0);
    CHECK(cure_rate(1.0, T, p) == 0.0);
  }
}

TEST_CASE("cure_rate: reproduces the high-precision oracle at alpha 0.5, 450 K") {
  CHECK(rel_err(cure_rate(0.5, 450.0, CureKineticsParams{}), kRateOracle, 0.0) < 1e-12);
}

TEST_CASE("cure_rate: positive inside (0,1) and increasing in T at alpha 0.3") {
  const CureKineticsParams p;
  double prev = 0.0;
  for (double T = 300.0; T <= 500.0; T += 2.0) {
    const double r = cure_rate(0.3, T, p);
    CHECK(r > prev);
    prev = r;
  }
  for (double a = 0.01; a < 1.0; a += 0.07) CHECK(cure_rate(a, 420.0, p) > 0.0);
}

TEST_CASE("cure_rate: domain errors and clamping guard") {
  const CureKineticsParams p;
  CHECK_THROWS_AS(cure_rate(0.5, 0.0, p), pidon::Error);
  CHECK_THROWS_AS(cure_rate(0.5, -10.0, p), pidon::Error);
  KineticsDiagnostics diag;
  CHECK(cure_rate(-1e-6, 450.0, p, &diag) == 0.0);
  CHECK(cure_rate(1.2, 450.0, p, &diag) == 0.0);
  CHECK(diag.clamped == 2);
  KineticsDiagnostics guard;
  CHECK(cure_rate_guarded(-0.01, 450.0, p, &guard) > 0.0);
  CHECK(guard.clamped == 1);
  CHECK(cure_rate_guarded(0.4, 450.0, p, &guard) == cure_rate(0.4, 450.0, p));
}

TEST_CASE("cure_rate_partials match central differences") {
  const CureKineticsParams p;
  for (auto [a, T] : {std::pair{0.2, 420.0}, std::pair{0.6, 455.0}, std::pair{0.85, 470.0}}) {
    const CureRateJet j = cure_rate_partials(a, T, p);
    CHECK(j.rate == cure_rate(a, T, p));
    const double da = central_diff([&](double x) { return cure_rate(x, T, p); }, a, 1e-6);
    const double dT = central_diff([&](double x) { return cure_rate(a, x, p); }, T, 1e-4);
    CHECK(rel_err(j.d_alpha, da) < 1e-6);
    CHECK(rel_err(j.d_T, dT) < 1e-6);
  }
}

TEST_CASE("air_temperature: two-hold profile") {
  CureCycleSpec c;
  c.r1 = 2.0;
  c.ht1 = 110.0;
  c.hd1 = 60.0;
  c.r2 = 2.5;
  c.ht2 = 180.0;
  c.hd2 = 100.0;
  CHECK(air_temperature(c, 0.0) == 20.0);
  CHECK(air_temperature(c, 45.0 * 60.0) == doctest::Approx(110.0).epsilon(1e-15));
  CHECK(air_temperature(c, (45.0 + 30.0) * 60.0) == 110.0);
  const double e3 = 45.0 + 60.0 + 70.0 / 2.5;
  CHECK(air_temperature(c, (e3 + 10.0) * 60.0) == 180.0);
  CHECK(air_temperature(c, 1e6) == 180.0);  // cool-down gated off
  CHECK_THROWS_AS(air_temperature(c, -1.0), pidon::Error);

  SUBCASE("continuous, piecewise linear and capped at ht2") {
    double max_T = 0.0;
    const double end = c.duration_s();
    for (double t = 0.0; t <= end + 600.0; t += 7.0) {
      const double a = air_temperature(c, t);
      const double b = air_temperature(c, t + 1e-6);
      CHECK(std::abs(a - b) < 1e-6);
      max_T = std::max(max_T, a);
    }
    CHECK(max_T == 180.0);
  }
  SUBCASE("optional cool-down returns to T0") {
    c.cooldown = true;
    const double e4 = (e3 + 100.0) * 60.0;
    CHECK(air_temperature(c, e4 + 0.5 * 160.0 / 2.5 * 60.0) == doctest::Approx(100.0));
    CHECK(air_temperature(c, c.duration_s() + 1.0) == 20.0);
  }
}

TEST_CASE("cure cycle validation") {
  CureCycleSpec c;
  c.ht2 = c.ht1 - 1.0;
  CHECK_THROWS_AS(c.validate(), pidon::Error);
  CureCycleSpec d;
  d.r1 = 0.0;
  CHECK_THROWS_AS(d.validate(), pidon::Error);
}

TEST_CASE("tool heat residual") {
  MaterialProps props = sample_props();
  SUBCASE("constant field") { CHECK(pde_residual_tool(jet(42.0, 0.0, 0.0, 0.0), props, 0.03) == 0.0); }
  SUBCASE("steady T = x^2 with unit coefficient") {
    const double L = std::sqrt(props.a_t());
    CHECK(pde_residual_tool(jet(0.25, 1.0, 0.0, 2.0), props, L) == doctest::Approx(-2.0).epsilon(1e-14));
  }
  SUBCASE("manufactured sin(pi x) exp(-t)") {
    const double pi = std::numbers::pi;
    const double L = std::sqrt(props.a_t() * pi * pi);  // a/L^2 = 1/pi^2
    for (double x : {0.1, 0.45, 0.8})
      for (double t : {0.0, 0.7, 2.0}) {
        const double s = std::sin(pi * x), e = std::exp(-t);
        const Jet2<double> J = jet(s * e, pi * std::cos(pi * x) * e, -s * e, -pi * pi * s * e);
        CHECK(std::abs(pde_residual_tool(J, props, L)) < 1e-12);
      }
  }
  CHECK_THROWS_AS(pde_residual_tool(jet(1, 0, 0, 0), props, 0.0), pidon::Error);
}

TEST_CASE("part heat residual") {
  MaterialProps props = sample_props();
  const double L = 0.03;
  SUBCASE("bc_scale = 0 equals the tool form with part coefficients") {
    MaterialProps swapped = props;
    swapped.tool = props.part;
    const Jet2<double> J = jet(1.0, 0.3, -0.2, 4.0);
    CHECK(pde_residual_part(J, 123.0, props, L, 0.0) == pde_residual_tool(J, swapped, L));
  }
  SUBCASE("constant field without reaction") { CHECK(pde_residual_part(jet(5, 0, 0, 0), 0.0, props, L, 1.0) == 0.0); }
  SUBCASE("manufactured field with prescribed cure rate") {
    const double pi = std::numbers::pi;
    const double Lm = std::sqrt(props.a_c() * pi * pi);
    const double rate = 3e-4, scale = 0.5;
    const double b = scale * props.b_c();
    for (double x : {0.2, 0.6})
      for (double t : {0.1, 1.3}) {
        const double s = std::sin(pi * x), e = std::exp(-t);
        // T = sin(pi x) e^-t + b * rate * t
        const Jet2<double> J = jet(s * e + b * rate * t, pi * std::cos(pi * x) * e, -s * e + b * rate, -pi * pi * s * e);
        CHECK(std::abs(pde_residual_part(J, rate, props, Lm, scale)) < 1e-12);
      }
  }
  CHECK_THROWS_AS(pde_residual_part(jet(1, 0, 0, 0), 0.0, props, L, 1.5), pidon::Error);
  CHECK_THROWS_AS(pde_residual_part(jet(1, 0, 0, 0), 0.0, props, -1.0, 0.5), pidon::Error);
}

TEST_CASE("Robin boundary residuals") {
  MaterialProps props = sample_props();
  SimulationConstants c;
  SUBCASE("thermal equilibrium") {
    const auto [top, bot] = bc_residuals(jet(150.0, 0, 0, 0), jet(150.0, 0, 0, 0), 150.0, props, c);
    CHECK(top == 0.0);
    CHECK(bot == 0.0);
  }
  SUBCASE("adiabatic top") {
    c.h_top = 0.0;
    const auto [top, bot] = bc_residuals(jet(90.0, 3.5, 0, 0), jet(150.0, 0, 0, 0), 150.0, props, c);
    CHECK(top == 3.5);
    (void)bot;
  }
  SUBCASE("random jets match the expanded formula") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-50.0, 200.0);
    for (int i = 0; i < 20; ++i) {
      const double Tt = u(rng), Tb = u(rng), gt = u(rng) / 10, gb = u(rng) / 10, Ta = u(rng);
      const auto [top, bot] = bc_residuals(jet(Tt, gt, 0, 0), jet(Tb, gb, 0, 0), Ta, props, c);
      CHECK(top == doctest::Approx(gt - (c.h_top * c.L_c / props.part.k) * (Ta - Tt)).epsilon(1e-13));
      CHECK(bot == doctest::Approx(gb - (c.h_bot * c.L_t / props.tool.k) * (Tb - Ta)).epsilon(1e-13));
    }
  }
  SUBCASE("non-positive conductivity or length") {
    c.L_c = 0.0;
    CHECK_THROWS_AS(bc_residuals(jet(1, 0, 0, 0), jet(1, 0, 0, 0), 1.0, props, c), pidon::Error);
  }
}

TEST_CASE("tool/part continuity residuals") {
  MaterialProps props = sample_props();
  const double Lt = 0.025, Lc = 0.031;
  SUBCASE("piecewise-linear field with matched flux") {
    const double gt = 40.0;                                  // K/m in the tool
    const double gc = gt * props.tool.k / props.part.k;      // K/m in the part
    const Jet2<double> tool = jet(20.0 + gt * Lt, gt * Lt, 0, 0);  // x1 = 1
    const Jet2<double> part = jet(20.0 + gt * Lt, gc * Lc, 0, 0);  // x2 = 0
    const auto [v, f] = continuity_residuals(tool, part, props, Lt, Lc);
    CHECK(v == 0.0);
    CHECK(std::abs(f) < 1e-12 * props.tool.k * gt);
  }
  SUBCASE("one degree jump") {
    const auto [v, f] = continuity_residuals(jet(101.0, 0, 0, 0), jet(100.0, 0, 0, 0), props, Lt, Lc);
    CHECK(v == 1.0);
    CHECK(f == 0.0);
  }
  SUBCASE("random jets match the expanded formula") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int i = 0; i < 20; ++i) {
      const double a = u(rng), b = u(rng), ga = u(rng), gb = u(rng);
      const auto [v, f] = continuity_residuals(jet(a, ga, 0, 0), jet(b, gb, 0, 0), props, Lt, Lc);
      CHECK(v == a - b);
      CHECK(f == doctest::Approx(props.tool.k / Lt * ga - props.part.k / Lc * gb).epsilon(1e-13));
    }
  }
}

TEST_CASE("material derived coefficients") {
  const MaterialProps p = sample_props();
  CHECK(p.a_t() > 0.0);
  CHECK(p.a_c() > 0.0);
  CHECK(p.b_c() > 0.0);
  MaterialProps inert = p;
  inert.H_r = 0.0;
  CHECK(inert.b_c() == 0.0);
  MaterialProps bad = p;
  bad.part.k = -1.0;
  CHECK_THROWS_AS(bad.validate(), pidon::Error);
}

TEST_CASE("property file: round trip, units and version") {
  const io::PropertySet d = io::default_properties();
  const std::string text = io::format_properties(d);
  const io::PropertySet back = io::parse_properties(text);
  CHECK(back.materials.part.k == d.materials.part.k);
  CHECK(back.materials.H_r == d.materials.H_r);
  CHECK(back.kinetics.A == d.kinetics.A);
  CHECK(back.kinetics.CT == d.kinetics.CT);
  CHECK(back.hash == d.hash);

  std::string wrong_unit = text;
  wrong_unit.replace(wrong_unit.find("\"J/mol\""), 7, "\"kJ/mol\"");
  CHECK_THROWS_AS(io::parse_properties(wrong_unit), pidon::Error);

  std::string wrong_version = text;
  wrong_version.replace(wrong_version.find("\"version\": 1"), 12, "\"version\": 9");
  try {
    io::parse_properties(wrong_version);
    FAIL("expected version error");
  } catch (const pidon::Error& e) {
    CHECK(e.code() == pidon::ErrorCode::kVersionMismatch);
  }
}

TEST_CASE("shipped default property file matches built-in defaults") {
  const io::PropertySet file = io::load_properties(PIDON_SOURCE_DIR "/configs/properties.default.json");
  const io::PropertySet d = io::default_properties();
  CHECK(io::format_properties(file) == io::format_properties(d));
  CHECK(file.hash.size() == 16);
}
