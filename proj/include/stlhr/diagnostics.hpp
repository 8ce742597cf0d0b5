#pragma once

#include "stlhr/estimation.hpp"

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace stlhr {

/// Right-continuous step function: value[k] holds on [times[k], times[k+1]).
struct StepCurve {
  std::vector<double> times;
  std::vector<double> values;

  double at(double t) const;
};

/// Product-limit estimate; the curve starts at (0, 1) and steps at event times.
StepCurve kaplan_meier(std::span<const std::pair<double, bool>> records);
StepCurve kaplan_meier(const Dataset& data);

/// Mean over `paths` of the predicted survival at each grid time.
StepCurve model_fitted_curve(const FitResult& fit, std::span<const CovariatePath> paths,
                             std::span<const double> grid);

/// M_i(t) = N_i(t) - Lambda(min(Y_i, t) | X_i) for every record.
Vector martingale_residuals(const Theta& theta, const BaselineHazard& lambda, const Dataset& data, double t);
Vector martingale_residuals(const FitResult& fit, const Dataset& data, double t);

/// U(t) = sum_i int_0^t Z_i dM_i at each grid time, Z_i = (pi_i X_i, (1 - pi_i) X_i).
std::vector<Vector> score_process(const Theta& theta, const BaselineHazard& lambda, const Dataset& data,
                                  std::span<const double> grid);
std::vector<Vector> score_process(const FitResult& fit, const Dataset& data, std::span<const double> grid);

struct KjOptions {
  double delta = -1.0;       // negative selects 5% of tau
  std::size_t resamples = 1000;
  std::uint64_t seed = 1;
};

struct KjResult {
  double statistic = 0.0;
  double p_value = 1.0;         // experimental: multiplier-resampling calibration
  std::size_t grid_points = 0;  // event times inside [delta, tau - delta]
  std::size_t skipped = 0;      // grid points with singular or vanishing covariance
  std::size_t resamples = 0;
  std::vector<double> form_times;  // grid points used, with their quadratic forms
  std::vector<double> forms;
};

/// Sup-type goodness-of-fit statistic for covariate j (0-based) from the
/// (beta_j, gamma_j) block of the score process. Requires an unconstrained,
/// converged fit.
KjResult kj_statistic(const FitResult& fit, const Dataset& data, std::size_t j, const KjOptions& options = {});

}  // namespace stlhr
