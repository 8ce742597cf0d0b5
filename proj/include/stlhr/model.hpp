#pragma once

// Pure evaluation of the short-term/long-term hazard ratio model
//   lambda(t | x) = e^{(b+g)'x} / (e^{b'x} F(t-) + e^{g'x} S(t-)) dLambda(t)
// with S = exp(-Lambda), F = 1 - S evaluated as left limits at jump points.

#include "stlhr/kernel.hpp"
#include "stlhr/types.hpp"

namespace stlhr {

/// e^{(b+g)'x} / (e^{b'x} F + e^{g'x} S).
double relative_risk(const Theta& theta, const Vector& x, double F, double S);

double conditional_cumulative_hazard(const Theta& theta, const BaselineHazard& lambda,
                                     const CovariatePath& path, double t);

double log_likelihood(const Theta& theta, const BaselineHazard& lambda, const Dataset& data);

/// Gradient of log_likelihood in (beta, gamma, log jump) coordinates.
Vector score(const Theta& theta, const BaselineHazard& lambda, const Dataset& data);

/// Directional derivative along (h1, h2, h3) using the score above.
double directional_score(const Theta& theta, const BaselineHazard& lambda, const Dataset& data,
                         const Direction& direction);

/// Per-subject score contributions, one row per record, (2p + m) columns.
Matrix subject_scores(const Theta& theta, const BaselineHazard& lambda, const Dataset& data);

/// Weight of `record` in the jump stationarity equation at time y <= Y:
/// event term (only when Y > y) + risk factor at y - sum over jumps in (y, Y].
double q_function(double y, const SurvivalRecord& record, const Theta& theta,
                  const BaselineHazard& lambda);

/// jump_k - d_k / sum_i I(Y_i >= t_k) Q(t_k, O_i) for every jump.
/// Entries are NaN where the denominator is not positive; `flagged`, if
/// given, receives the number of such entries.
Vector self_consistency_residuals(const Theta& theta, const BaselineHazard& lambda, const Dataset& data,
                                  std::size_t* flagged = nullptr);

double predicted_survival(const Theta& theta, const BaselineHazard& lambda, const CovariatePath& path,
                          double t);

/// Check that lambda's jump times coincide with the distinct event times.
void require_matching_jumps(const BaselineHazard& lambda, const Dataset& data);

}  // namespace stlhr
