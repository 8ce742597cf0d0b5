#pragma once

#include "stlhr/estimation.hpp"

#include <string>
#include <vector>

namespace stlhr {

/// Null hypotheses on covariate coordinates (0-based indices):
///   H1 beta_j = 0, H2 gamma_j = 0, H3 beta_j = gamma_j = 0, H4 beta_j = gamma_j,
///   H5 beta_j = 0 in the proportional-hazards fit.
/// Several coordinates give a joint test.
struct Hypothesis {
  enum class Kind { H1, H2, H3, H4, H5 };
  Kind kind = Kind::H1;
  std::vector<std::size_t> coordinates{0};

  std::string name() const;
  static Kind parse_kind(const std::string& text);
};

struct TestResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
  Hypothesis hypothesis;
  std::string method;  // "wald" or "lrt"
};

/// Upper tail of the chi-square distribution.
double chi_square_upper(double statistic, int dof);
/// Standard normal quantile.
double normal_quantile(double probability);

/// Contrast matrix in the fit's free-theta coordinates.
Matrix hypothesis_contrast(const Hypothesis& hyp, const Constraint& constraint, std::size_t p);

TestResult wald_test(const FitResult& fit, const Hypothesis& hyp);

/// 2 (l_full - l_constrained) referred to chi-square(dof). Statistics below
/// -1e-6 signal an optimizer failure and throw.
TestResult likelihood_ratio_test(const FitResult& fit_full, const FitResult& fit_constrained, int dof);

struct ConfidenceInterval {
  double estimate = 0.0;
  double se = 0.0;
  double low = 0.0;
  double high = 0.0;
  double ratio = 1.0;  // exp(estimate)
  double ratio_low = 1.0;
  double ratio_high = 1.0;
};

ConfidenceInterval confidence_interval(double estimate, double se, double level);

/// Interval for free-theta coordinate `coordinate` of the fit.
ConfidenceInterval confidence_interval(const FitResult& fit, std::size_t coordinate, double level);

}  // namespace stlhr
