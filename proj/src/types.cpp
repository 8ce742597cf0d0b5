#include "stlhr/types.hpp"

#include "stlhr/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace stlhr {

CovariatePath::CovariatePath(std::vector<double> breakpoints, std::vector<Vector> values)
    : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
  if (breakpoints_.empty() || breakpoints_.size() != values_.size()) {
    throw StructuralError("covariate path needs one value per breakpoint");
  }
  if (breakpoints_.front() != 0.0) {
    throw StructuralError("covariate path must start at time 0");
  }
  for (std::size_t k = 1; k < breakpoints_.size(); ++k) {
    if (!(breakpoints_[k] > breakpoints_[k - 1]) || !std::isfinite(breakpoints_[k])) {
      throw StructuralError("covariate path breakpoints must be strictly ascending");
    }
  }
  const auto p = values_.front().size();
  if (p == 0) throw StructuralError("covariate dimension must be positive");
  for (const auto& v : values_) {
    if (v.size() != p) throw StructuralError("covariate path values differ in dimension");
    if (!v.allFinite()) throw StructuralError("covariate values must be finite");
  }
}

CovariatePath CovariatePath::constant(Vector value) {
  return CovariatePath({0.0}, {std::move(value)});
}

const Vector& CovariatePath::at(double t) const {
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
  if (it == breakpoints_.begin()) return values_.front();
  return values_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
}

CovariatePath CovariatePath::shifted(const Vector& offset) const {
  auto values = values_;
  for (auto& v : values) v -= offset;
  return CovariatePath(breakpoints_, std::move(values));
}

CovariatePath CovariatePath::scaled(std::size_t column, double factor) const {
  auto values = values_;
  for (auto& v : values) v(static_cast<Eigen::Index>(column)) *= factor;
  return CovariatePath(breakpoints_, std::move(values));
}

Dataset::Dataset(std::vector<SurvivalRecord> records, std::optional<double> tau)
    : records_(std::move(records)) {
  if (records_.empty()) throw StructuralError("dataset is empty");
  p_ = records_.front().covariates.dimension();
  double max_time = 0.0;
  bool any_event = false;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (!(r.time >= 0.0) || !std::isfinite(r.time)) {
      throw StructuralError("record " + std::to_string(i) + ": time must be finite and non-negative");
    }
    if (r.covariates.dimension() != p_) {
      throw StructuralError("record " + std::to_string(i) + ": covariate dimension mismatch");
    }
    max_time = std::max(max_time, r.time);
    any_event = any_event || r.event;
  }
  if (!any_event) throw StructuralError("dataset has no events (all records censored)");
  tau_ = tau.value_or(max_time);
  if (!(tau_ > 0.0) || tau_ < max_time) {
    throw StructuralError("tau must be positive and at least the largest observed time");
  }
  offsets_ = Vector::Zero(static_cast<Eigen::Index>(p_));
}

Dataset Dataset::centered() const {
  Vector mean = Vector::Zero(static_cast<Eigen::Index>(p_));
  for (const auto& r : records_) mean += r.covariates.at(0.0);
  mean /= static_cast<double>(records_.size());
  std::vector<SurvivalRecord> shifted;
  shifted.reserve(records_.size());
  for (const auto& r : records_) {
    shifted.push_back({r.time, r.event, r.covariates.shifted(mean)});
  }
  Dataset out(std::move(shifted), tau_);
  out.offsets_ = offsets_ + mean;
  return out;
}

Dataset Dataset::scaled(std::size_t column, double factor) const {
  if (column >= p_) throw StructuralError("scaled: column out of range");
  std::vector<SurvivalRecord> out;
  out.reserve(records_.size());
  for (const auto& r : records_) out.push_back({r.time, r.event, r.covariates.scaled(column, factor)});
  Dataset d(std::move(out), tau_);
  d.offsets_ = offsets_;
  d.offsets_(static_cast<Eigen::Index>(column)) *= factor;
  return d;
}

EventTimes Dataset::event_times() const {
  std::vector<double> t;
  for (const auto& r : records_) {
    if (r.event) t.push_back(r.time);
  }
  std::sort(t.begin(), t.end());
  EventTimes out;
  for (double v : t) {
    if (!out.times.empty() && out.times.back() == v) {
      out.deaths.back() += 1.0;
    } else {
      out.times.push_back(v);
      out.deaths.push_back(1.0);
    }
  }
  return out;
}

Vector Theta::stacked() const {
  Vector out(beta.size() + gamma.size());
  out << beta, gamma;
  return out;
}

void Theta::validate(std::size_t p) const {
  if (static_cast<std::size_t>(beta.size()) != p || static_cast<std::size_t>(gamma.size()) != p) {
    throw StructuralError("theta dimension does not match covariate dimension");
  }
  if (!beta.allFinite() || !gamma.allFinite()) throw StructuralError("theta has non-finite entries");
}

BaselineHazard::BaselineHazard(std::vector<double> times, std::vector<double> jumps)
    : times_(std::move(times)), jumps_(std::move(jumps)) {
  if (times_.size() != jumps_.size()) throw StructuralError("baseline hazard: times/jumps length mismatch");
  for (std::size_t k = 0; k < times_.size(); ++k) {
    if (k > 0 && !(times_[k] > times_[k - 1])) {
      throw StructuralError("baseline hazard times must be strictly ascending");
    }
    if (!(jumps_[k] > 0.0) || !std::isfinite(jumps_[k])) {
      throw StructuralError("baseline hazard jumps must be positive and finite");
    }
  }
}

BaselineHazard BaselineHazard::nelson_aalen(const Dataset& data) {
  const auto ev = data.event_times();
  std::vector<double> y;
  y.reserve(data.size());
  for (const auto& r : data.records()) y.push_back(r.time);
  std::sort(y.begin(), y.end());
  std::vector<double> jumps(ev.size());
  for (std::size_t k = 0; k < ev.size(); ++k) {
    auto first = std::lower_bound(y.begin(), y.end(), ev.times[k]);
    const auto at_risk = static_cast<double>(y.end() - first);
    jumps[k] = ev.deaths[k] / at_risk;
  }
  return BaselineHazard(ev.times, std::move(jumps));
}

BaselineHazard BaselineHazard::from_log_jumps(std::vector<double> times, std::span<const double> log_jumps) {
  std::vector<double> jumps(log_jumps.size());
  std::transform(log_jumps.begin(), log_jumps.end(), jumps.begin(), [](double z) { return std::exp(z); });
  return BaselineHazard(std::move(times), std::move(jumps));
}

double BaselineHazard::cumulative(double t) const {
  double sum = 0.0;
  for (std::size_t k = 0; k < times_.size() && times_[k] <= t; ++k) sum += jumps_[k];
  return sum;
}

double BaselineHazard::cumulative_left(double t) const {
  double sum = 0.0;
  for (std::size_t k = 0; k < times_.size() && times_[k] < t; ++k) sum += jumps_[k];
  return sum;
}

double BaselineHazard::survival_left(double t) const { return std::exp(-cumulative_left(t)); }

std::vector<double> BaselineHazard::log_jumps() const {
  std::vector<double> out(jumps_.size());
  std::transform(jumps_.begin(), jumps_.end(), out.begin(), [](double j) { return std::log(j); });
  return out;
}

}  // namespace stlhr
