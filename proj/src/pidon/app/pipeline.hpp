#pragma once

// End-to-end steps driven by a RunConfig; the C API and the acceptance suite sit on these.

#include <string>
#include <vector>

#include "pidon/app/run_config.hpp"
#include "pidon/io/properties.hpp"

namespace pidon::app {

io::PropertySet properties(const RunConfig& c);
design::DesignSpace design_space(const RunConfig& c);
/// Keeps `fraction` of every range, centred on its midpoint.
design::DesignSpace narrowed(const design::DesignSpace& s, double fraction);

struct Problem {
  io::PropertySet props;
  op::OperatorContext context;
  std::vector<design::DesignPoint> train, test;
};
Problem make_problem(const RunConfig& c);

struct TrainOutcome {
  train::TrainState state;
  train::TrainResult result;
};

/// Fresh triplet from (op config, seed) unless `resume` is given.
TrainOutcome run_training(const RunConfig& c, const Problem& p, const train::TrainState* resume = nullptr,
                          const train::TrainHooks& hooks = {});

enum class AblationKind { kDecoder, kCurriculum, kDomainDecomposition };
AblationKind parse_ablation_kind(const std::string& s);
const char* ablation_kind_name(AblationKind k);

struct AblationVariant {
  std::string name;
  std::uint64_t seed = 0;
  TrainOutcome outcome;
  eval::Metrics metrics;
  double interface_mismatch = 0.0;
};

struct AblationReport {
  AblationKind kind = AblationKind::kDecoder;
  std::vector<AblationVariant> variants;
};

/// The config variants compared by an ablation (same budget and seed).
std::vector<std::pair<std::string, RunConfig>> ablation_variants(const RunConfig& c, AblationKind kind);
AblationReport run_ablation(const RunConfig& c, AblationKind kind, const eval::Warn& warn = {});
std::string format_ablation_json(const AblationReport& r);

}  // namespace pidon::app
