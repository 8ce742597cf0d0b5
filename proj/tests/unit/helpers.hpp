#pragma once

#include "stlhr/simulation.hpp"
#include "stlhr/types.hpp"

#include <random>
#include <vector>

namespace testing {

using namespace stlhr;

inline SurvivalRecord record(double time, bool event, double x) {
  return {time, event, CovariatePath::constant(Vector::Constant(1, x))};
}

inline Dataset small_dataset() {
  return Dataset({record(0.4, true, 0.3), record(0.9, false, -0.7), record(1.3, true, 0.9),
                  record(1.3, true, -0.2), record(2.0, false, 0.1), record(2.5, true, -0.5)});
}

/// Scenario data with a few time-varying covariate paths mixed in.
inline Dataset mixed_dataset(std::size_t n, std::uint64_t seed, double beta = -0.5, double gamma = 0.5) {
  ScenarioSpec spec;
  spec.n = n;
  spec.beta = Vector::Constant(1, beta);
  spec.gamma = Vector::Constant(1, gamma);
  spec.seed = seed;
  const Dataset base = generate_dataset(spec, 0);
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<SurvivalRecord> recs = base.records();
  for (std::size_t i = 0; i < recs.size(); i += 3) {
    const double x0 = recs[i].covariates.at(0.0)(0);
    recs[i].covariates = CovariatePath({0.0, 0.5 * recs[i].time},
                                       {Vector::Constant(1, x0), Vector::Constant(1, u(gen))});
  }
  return Dataset(std::move(recs));
}

inline Dataset scenario_dataset(const std::string& name, std::size_t n, std::uint64_t seed, std::size_t rep = 0) {
  ScenarioSpec spec = ScenarioSpec::named(name);
  spec.n = n;
  spec.seed = seed;
  return generate_dataset(spec, rep);
}

inline Dataset two_covariate_dataset(std::size_t n, std::uint64_t seed) {
  ScenarioSpec spec;
  spec.n = n;
  spec.beta = Vector(2);
  spec.beta << -0.4, 0.3;
  spec.gamma = Vector(2);
  spec.gamma << 0.5, 0.0;
  spec.seed = seed;
  return generate_dataset(spec, 0);
}

inline BaselineHazard random_baseline(const Dataset& data, std::mt19937_64& gen) {
  const auto ev = data.event_times();
  std::uniform_real_distribution<double> u(0.3, 2.0);
  std::vector<double> jumps(ev.size());
  const auto na = BaselineHazard::nelson_aalen(data);
  for (std::size_t k = 0; k < ev.size(); ++k) jumps[k] = na.jumps()[k] * u(gen);
  return BaselineHazard(ev.times, jumps);
}

inline std::vector<double> to_vector(std::span<const double> s) { return {s.begin(), s.end()}; }

}  // namespace testing
