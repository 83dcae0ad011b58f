#pragma once

// Finite-difference check of every loss component against reverse-mode
// gradients, over random parameter entries of every network of a triplet.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "pidon/loss/losses.hpp"

namespace pidon::testing {

struct GradCheckResult {
  double worst_rel_err = 0.0;
  std::string worst_where;
  int probes_per_network = 0;
  int networks = 0;
  int comparisons = 0;
};

inline double rel_err_floor(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Components of a full loss build at the current parameters.
inline loss::LossBreakdown loss_values(const op::OperatorTriplet& tri, const loss::LossProblem& prob,
                                       const loss::CollocationSet& set, double bc_scale) {
  ad::Tape tape;
  return loss::build_losses(tape, tri, prob, set, bc_scale, loss::LossGroup::kAll).values();
}

/// Fourth-order central differences (h = 1e-4) for `probes` random entries of
/// every parameter set; each probe is compared for all ten components.
inline GradCheckResult check_loss_gradients(op::OperatorTriplet& tri, const loss::LossProblem& prob,
                                            const loss::CollocationSet& set, double bc_scale, int probes,
                                            std::uint64_t seed) {
  GradCheckResult out;
  out.probes_per_network = probes;
  std::vector<std::pair<std::string, ad::MlpParams*>> nets;
  const char* names[3] = {"T_c", "T_t", "alpha"};
  op::DeepONetModel* models[3] = {&tri.g_tc, &tri.g_tt, &tri.g_alpha};
  for (int m = 0; m < 3; ++m) {
    auto sets = models[m]->parameter_sets();
    for (std::size_t k = 0; k < sets.size(); ++k) {
      const std::string part = k == 0 ? "bn1" : k == 1 ? "bn2" : k == 2 ? "trunk" : "decoder" + std::to_string(k - 3);
      nets.emplace_back(std::string(names[m]) + "." + part, sets[k]);
    }
  }
  out.networks = static_cast<int>(nets.size());

  // Reverse-mode gradients for every component.
  std::vector<std::vector<ad::ParamGradient>> grads(loss::LossBreakdown::kCount);
  {
    ad::Tape tape;
    const loss::LossTerms terms = loss::build_losses(tape, tri, prob, set, bc_scale, loss::LossGroup::kAll);
    for (int c = 0; c < loss::LossBreakdown::kCount; ++c) {
      const ad::Gradients g = tape.backward(terms.c[c]);
      for (auto& [name, p] : nets) grads[c].push_back(g.get(*p));
    }
  }

  std::mt19937_64 rng(seed);
  const double h = 1e-4;
  for (std::size_t n = 0; n < nets.size(); ++n) {
    ad::MlpParams& p = *nets[n].second;
    const std::size_t count = p.parameter_count();
    std::uniform_int_distribution<std::size_t> pick(0, count - 1);
    for (int k = 0; k < probes; ++k) {
      const std::size_t i = pick(rng);
      double& theta = ad::flat_entry(p, i);
      const double saved = theta;
      loss::LossBreakdown f[4];
      const double offs[4] = {2 * h, h, -h, -2 * h};
      for (int s = 0; s < 4; ++s) {
        theta = saved + offs[s];
        f[s] = loss_values(tri, prob, set, bc_scale);
      }
      theta = saved;
      for (int c = 0; c < loss::LossBreakdown::kCount; ++c) {
        const double fd = (-f[0][c] + 8 * f[1][c] - 8 * f[2][c] + f[3][c]) / (12 * h);
        const double ad = ad::flat_entry(grads[c][n], i);
        const double e = rel_err_floor(ad, fd);
        ++out.comparisons;
        if (e > out.worst_rel_err) {
          out.worst_rel_err = e;
          out.worst_where = nets[n].first + "[" + std::to_string(i) + "] " + loss::LossBreakdown::name(c) +
                            " ad=" + std::to_string(ad) + " fd=" + std::to_string(fd);
        }
      }
    }
  }
  return out;
}

}  // namespace pidon::testing
