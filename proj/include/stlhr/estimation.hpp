#pragma once

#include "stlhr/kernel.hpp"
#include "stlhr/types.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace stlhr {

/// Sub-model restrictions on (beta, gamma).
struct Constraint {
  enum class Kind { none, proportional_hazards, proportional_odds, fixed_theta };
  Kind kind = Kind::none;
  Theta fixed;  // used by fixed_theta only

  static Constraint none() { return {}; }
  static Constraint proportional_hazards() { return {Kind::proportional_hazards, {}}; }
  static Constraint proportional_odds() { return {Kind::proportional_odds, {}}; }
  static Constraint fixed_theta(Theta theta) { return {Kind::fixed_theta, std::move(theta)}; }

  /// Number of free regression parameters for covariate dimension p.
  std::size_t free_theta(std::size_t p) const;
  std::string name() const;
};

enum class CovarianceSource { observed_information, profile_likelihood };

enum class Initialization { zeros_nelson_aalen, cox_warm_start };

struct FitOptions {
  double tolerance = 1e-6;            // gradient infinity norm
  double relative_tolerance = 1e-10;  // objective change at which BFGS stops
  int max_iterations = 500;
  std::optional<Theta> initial_theta;
  std::optional<std::vector<double>> initial_jumps;
  Initialization initialization = Initialization::zeros_nelson_aalen;
  bool compute_covariance = true;
  Backend backend = Backend::serial;
};

struct FitResult {
  Theta theta_hat;
  BaselineHazard lambda_hat;
  double loglik = 0.0;
  /// Covariance of the free regression parameters: (beta, gamma) when
  /// unconstrained, the shared/short-term vector under PH/PO, empty when fixed.
  Matrix covariance_theta;
  /// Inverse observed information over all free parameters (theta block first,
  /// then log jumps). Empty unless computed from observed information.
  Matrix covariance_free;
  CovarianceSource covariance_source = CovarianceSource::observed_information;
  bool converged = false;
  int iterations = 0;
  int evaluations = 0;
  double gradient_norm = 0.0;
  Constraint constraint;
  std::size_t clamp_count = 0;
  std::vector<double> objective_trace;  // log-likelihood per accepted BFGS iterate
  std::string message;
  std::string covariance_error;

  Vector free_theta() const;
};

/// Maps free optimization vectors to the full (beta, gamma, log jump) layout.
class ParameterMap {
 public:
  ParameterMap(Constraint constraint, std::size_t p, std::size_t m);

  std::size_t free_size() const noexcept { return free_theta_ + m_; }
  std::size_t free_theta() const noexcept { return free_theta_; }
  Vector expand(const Vector& free) const;
  Vector reduce_gradient(const Vector& full_gradient) const;
  Vector reduce(const Vector& full) const;

 private:
  Constraint constraint_;
  std::size_t p_;
  std::size_t m_;
  std::size_t free_theta_;
};

FitResult fit(const Dataset& data, const Constraint& constraint, const FitOptions& options = {});

struct Information {
  Matrix matrix;            // symmetrized negative Hessian in free coordinates
  double asymmetry = 0.0;   // ||H - H'||_inf before symmetrization
};

/// Negative Hessian of the log-likelihood at the fit, by central differences of
/// the analytic score in the fit's free coordinates.
Information observed_information(const FitResult& fit, const Dataset& data, Backend backend = Backend::serial);

/// Inverse of a symmetric positive definite information matrix. Throws
/// SingularMatrixError with the smallest eigenvalue otherwise.
Matrix invert_information(const Matrix& info);

/// Leading theta_dim x theta_dim block of info^{-1} (the whole inverse when
/// theta_dim is zero).
Matrix covariance_theta_from_information(const Matrix& info, std::size_t theta_dim);

/// Covariance from the curvature of a profile function by second-order
/// central differences around `center` with per-coordinate `steps`.
Matrix curvature_covariance(const std::function<double(const Vector&)>& profile, const Vector& center,
                            const Vector& steps);

/// Profile-likelihood covariance of the fit's free regression parameters.
/// step <= 0 selects the default 5 / sqrt(n).
Matrix profile_covariance(const Dataset& data, const FitResult& fit, double step = 0.0);

/// Profile log-likelihood max_Lambda l(theta, Lambda) at fixed theta.
FitResult profile_fit(const Dataset& data, const Theta& theta, const std::vector<double>& warm_jumps);

/// Theta assembled from free regression parameters under a constraint.
Theta expand_theta(const Constraint& constraint, const Vector& free_theta, std::size_t p);

}  // namespace stlhr
