#pragma once

#include "stlhr/estimation.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace stlhr {

enum class CovariateLaw { uniform, binary };  // uniform(-1, 1) or +-0.5 with probability 1/2

/// Data-generating design with baseline Lambda(t) = t and censoring
/// C = min(2, uniform(0, 4)).
struct ScenarioSpec {
  std::size_t n = 200;
  Vector beta = Vector::Zero(1);
  Vector gamma = Vector::Zero(1);
  CovariateLaw covariate_law = CovariateLaw::uniform;
  std::size_t replicates = 1000;
  std::uint64_t seed = 1;

  /// Scenarios a-d: (-0.5, 0.5), (-0.5, 0), (0, 0.5), (0.5, 0.5).
  static ScenarioSpec named(const std::string& name);
  Theta truth() const { return {beta, gamma}; }
  std::size_t dimension() const noexcept { return static_cast<std::size_t>(beta.size()); }
  void validate() const;
};

/// Inverse-transform draw: T = log(1 + (b/a)(u^{-1/b} - 1)), a = e^{beta'x}, b = e^{gamma'x}.
double sample_event_time(const Theta& theta, const Vector& x, double u);

/// Deterministic in (spec.seed, replicate): streams 0, 1, 2 supply covariates,
/// event times and censoring times.
Dataset generate_dataset(const ScenarioSpec& spec, std::size_t replicate);

struct StudyTargets {
  bool table1 = true;      // Est/SE/SEE/CP incl. baseline and sub-model fits
  bool table2 = true;      // Wald rejection rates H1-H5
  bool table3_mse = true;  // MSE of beta, gamma
};

struct ParameterSummary {
  std::string name;
  double truth = 0.0;  // NaN when the fitted sub-model is misspecified
  double mean = 0.0;
  double sd = 0.0;     // sample SD of estimates (SE column)
  double mean_se = 0.0;  // average model-based SE (SEE column)
  double coverage = 0.0;  // NaN when truth is NaN
  double bias = 0.0;
  double variance = 0.0;  // 1/N variance so that mse = bias^2 + variance
  double mse = 0.0;
};

struct RejectionRate {
  std::string hypothesis;
  double rate = 0.0;
};

struct ReplicationSummary {
  ScenarioSpec spec;
  std::vector<ParameterSummary> parameters;
  std::vector<RejectionRate> rejections;
  std::size_t completed = 0;
  std::size_t failures = 0;
  std::vector<std::size_t> failed_replicates;
};

/// Per-replicate numbers collected by the study, before aggregation.
struct ReplicateOutcome {
  bool ok = false;
  std::vector<double> estimates;
  std::vector<double> standard_errors;
  std::vector<bool> covered;
  std::vector<bool> rejected;
};

ReplicationSummary run_replication_study(const ScenarioSpec& spec, const StudyTargets& targets = {},
                                         double level = 0.05);

/// Aggregation of per-replicate outcomes (failed ones are counted, not used).
ReplicationSummary summarize(const ScenarioSpec& spec, const StudyTargets& targets,
                             const std::vector<ReplicateOutcome>& outcomes);

/// One replicate of the study.
ReplicateOutcome run_replicate(const ScenarioSpec& spec, const StudyTargets& targets, std::size_t replicate,
                               double level);

}  // namespace stlhr
