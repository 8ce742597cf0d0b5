#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace stlhr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Piecewise-constant, right-continuous covariate vector X(t) on [0, tau].
/// values[k] holds on [breakpoints[k], breakpoints[k+1]); the last value
/// extends to infinity.
class CovariatePath {
 public:
  CovariatePath(std::vector<double> breakpoints, std::vector<Vector> values);

  static CovariatePath constant(Vector value);

  std::size_t dimension() const noexcept { return static_cast<std::size_t>(values_.front().size()); }
  std::size_t pieces() const noexcept { return breakpoints_.size(); }
  bool time_invariant() const noexcept { return breakpoints_.size() == 1; }

  const Vector& at(double t) const;
  std::span<const double> breakpoints() const noexcept { return breakpoints_; }
  const std::vector<Vector>& values() const noexcept { return values_; }

  CovariatePath shifted(const Vector& offset) const;
  CovariatePath scaled(std::size_t column, double factor) const;

  friend bool operator==(const CovariatePath&, const CovariatePath&) = default;

 private:
  std::vector<double> breakpoints_;
  std::vector<Vector> values_;
};

struct SurvivalRecord {
  double time = 0.0;
  bool event = false;
  CovariatePath covariates;

  friend bool operator==(const SurvivalRecord&, const SurvivalRecord&) = default;
};

/// Distinct event times with tie multiplicities d_k.
struct EventTimes {
  std::vector<double> times;
  std::vector<double> deaths;
  std::size_t size() const noexcept { return times.size(); }
};

class Dataset {
 public:
  /// tau defaults to the largest observed time.
  explicit Dataset(std::vector<SurvivalRecord> records, std::optional<double> tau = std::nullopt);

  const std::vector<SurvivalRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  std::size_t dimension() const noexcept { return p_; }
  double tau() const noexcept { return tau_; }
  const Vector& centering_offsets() const noexcept { return offsets_; }

  /// Copy with covariate values shifted by minus the sample mean of X_i(0).
  Dataset centered() const;
  /// Copy with column `column` of every covariate value multiplied by `factor`.
  Dataset scaled(std::size_t column, double factor) const;

  EventTimes event_times() const;

 private:
  std::vector<SurvivalRecord> records_;
  double tau_ = 0.0;
  std::size_t p_ = 0;
  Vector offsets_;
};

struct Theta {
  Vector beta;
  Vector gamma;

  static Theta zeros(std::size_t p) { return {Vector::Zero(static_cast<Eigen::Index>(p)), Vector::Zero(static_cast<Eigen::Index>(p))}; }
  static Theta scalar(double beta, double gamma) {
    return {Vector::Constant(1, beta), Vector::Constant(1, gamma)};
  }
  std::size_t dimension() const noexcept { return static_cast<std::size_t>(beta.size()); }
  /// Stacked (beta, gamma).
  Vector stacked() const;
  void validate(std::size_t p) const;
};

/// Step-function cumulative hazard with positive jumps at `times`.
class BaselineHazard {
 public:
  BaselineHazard() = default;
  BaselineHazard(std::vector<double> times, std::vector<double> jumps);

  static BaselineHazard nelson_aalen(const Dataset& data);
  static BaselineHazard from_log_jumps(std::vector<double> times, std::span<const double> log_jumps);

  std::size_t size() const noexcept { return times_.size(); }
  std::span<const double> times() const noexcept { return times_; }
  std::span<const double> jumps() const noexcept { return jumps_; }

  /// Lambda(t) = sum of jumps at times <= t.
  double cumulative(double t) const;
  /// Lambda(t-) = sum of jumps at times < t.
  double cumulative_left(double t) const;
  double survival_left(double t) const;
  std::vector<double> log_jumps() const;

 private:
  std::vector<double> times_;
  std::vector<double> jumps_;
};

/// Perturbation direction (h1, h2, h3); h3 is given at the baseline jump times
/// and perturbs each jump multiplicatively: d log(jump_k) = h3[k].
struct Direction {
  Vector h1;
  Vector h2;
  Vector h3;
};

}  // namespace stlhr
