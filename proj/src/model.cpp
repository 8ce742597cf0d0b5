#include "stlhr/model.hpp"

#include "stlhr/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace stlhr {
namespace {

// Reciprocal exponentials of the two linear predictors at x.
struct RiskParts {
  double inv_short;  // e^{-b'x}
  double inv_long;   // e^{-g'x}
};

RiskParts risk_parts(const Theta& theta, const Vector& x) {
  const double eta_a = theta.beta.dot(x);
  const double eta_b = theta.gamma.dot(x);
  RiskParts rp{std::exp(-eta_a), std::exp(-eta_b)};
  if (!std::isfinite(rp.inv_short) || rp.inv_short == 0.0) {
    throw EvaluationError("short-term linear predictor overflows", eta_a);
  }
  if (!std::isfinite(rp.inv_long) || rp.inv_long == 0.0) {
    throw EvaluationError("long-term linear predictor overflows", eta_b);
  }
  return rp;
}

// R / (ab) = F e^{-g'x} + S e^{-b'x}
double scaled_denominator(const RiskParts& rp, double F, double S) { return F * rp.inv_long + S * rp.inv_short; }

}  // namespace

double relative_risk(const Theta& theta, const Vector& x, double F, double S) {
  if (std::abs(F + S - 1.0) > 1e-12 || F < 0.0 || !(S > 0.0)) {
    throw StructuralError("relative_risk requires F + S = 1 with S > 0");
  }
  const auto rp = risk_parts(theta, x);
  const double r = 1.0 / scaled_denominator(rp, F, S);
  if (!std::isfinite(r)) throw EvaluationError("relative risk is not finite", theta.beta.dot(x));
  return r;
}

double conditional_cumulative_hazard(const Theta& theta, const BaselineHazard& lambda,
                                     const CovariatePath& path, double t) {
  const auto times = lambda.times();
  const auto jumps = lambda.jumps();
  double cum_left = 0.0;
  double total = 0.0;
  for (std::size_t k = 0; k < times.size() && times[k] <= t; ++k) {
    const double S = std::exp(-cum_left);
    const double F = -std::expm1(-cum_left);
    total += relative_risk(theta, path.at(times[k]), F, S) * jumps[k];
    cum_left += jumps[k];
  }
  return total;
}

void require_matching_jumps(const BaselineHazard& lambda, const Dataset& data) {
  const auto ev = data.event_times();
  const auto times = lambda.times();
  if (ev.size() != times.size() || !std::equal(ev.times.begin(), ev.times.end(), times.begin())) {
    std::ostringstream os;
    os << "baseline hazard jump times (" << times.size()
       << ") must coincide with the distinct event times of the data (" << ev.size() << ")";
    throw StructuralError(os.str());
  }
}

double log_likelihood(const Theta& theta, const BaselineHazard& lambda, const Dataset& data) {
  theta.validate(data.dimension());
  require_matching_jumps(lambda, data);
  const auto layout = build_layout(data);
  const Vector params = stack_parameters(theta, lambda);
  return evaluate_serial(layout, as_span(params), false).loglik;
}

Vector score(const Theta& theta, const BaselineHazard& lambda, const Dataset& data) {
  theta.validate(data.dimension());
  require_matching_jumps(lambda, data);
  const auto layout = build_layout(data);
  const Vector params = stack_parameters(theta, lambda);
  return evaluate_serial(layout, as_span(params), true).gradient;
}

double directional_score(const Theta& theta, const BaselineHazard& lambda, const Dataset& data,
                         const Direction& direction) {
  const Vector g = score(theta, lambda, data);
  const auto p = static_cast<Eigen::Index>(data.dimension());
  const auto m = static_cast<Eigen::Index>(lambda.size());
  if (direction.h1.size() != p || direction.h2.size() != p || direction.h3.size() != m) {
    throw StructuralError("direction has wrong dimensions");
  }
  return g.head(p).dot(direction.h1) + g.segment(p, p).dot(direction.h2) + g.tail(m).dot(direction.h3);
}

Matrix subject_scores(const Theta& theta, const BaselineHazard& lambda, const Dataset& data) {
  theta.validate(data.dimension());
  require_matching_jumps(lambda, data);
  const auto p = static_cast<Eigen::Index>(data.dimension());
  const auto m = lambda.size();
  const auto times = lambda.times();
  const auto jumps = lambda.jumps();
  std::vector<double> surv(m), cdf(m);
  double cum = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    surv[k] = std::exp(-cum);
    cdf[k] = -std::expm1(-cum);
    cum += jumps[k];
  }

  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(data.size()), 2 * p + static_cast<Eigen::Index>(m));
  std::vector<double> risk(m), shift(m);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& rec = data.records()[i];
    const auto K = static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), rec.time) - times.begin());
    const auto row = static_cast<Eigen::Index>(i);
    double event_shift = 0.0;
    std::size_t event_k = m;
    for (std::size_t k = 0; k < K; ++k) {
      const Vector& x = rec.covariates.at(times[k]);
      const auto rp = risk_parts(theta, x);
      const double D = scaled_denominator(rp, cdf[k], surv[k]);
      const double pi = surv[k] * rp.inv_short / D;
      risk[k] = 1.0 / D;
      // d(-risk_k * jump_k) / d Lambda(t_k-)
      shift[k] = jumps[k] * surv[k] * (rp.inv_long - rp.inv_short) / (D * D);
      const double rl = risk[k] * jumps[k];
      out.row(row).head(p) -= rl * pi * x.transpose();
      out.row(row).segment(p, p) -= rl * (1.0 - pi) * x.transpose();
      if (rec.event && k + 1 == K) {
        event_k = k;
        event_shift = surv[k] * (rp.inv_long - rp.inv_short) / D;
        out.row(row).head(p) += pi * x.transpose();
        out.row(row).segment(p, p) += (1.0 - pi) * x.transpose();
      }
    }
    double suffix = 0.0;
    for (std::size_t j = K; j-- > 0;) {
      const double later_event = (event_k < m && event_k > j) ? event_shift : 0.0;
      const double dN = (j == event_k) ? 1.0 : 0.0;
      out(row, 2 * p + static_cast<Eigen::Index>(j)) = dN - jumps[j] * (risk[j] - suffix + later_event);
      suffix += shift[j];
    }
  }
  return out;
}

double q_function(double y, const SurvivalRecord& record, const Theta& theta, const BaselineHazard& lambda) {
  if (y < 0.0 || y > record.time) throw StructuralError("q_function requires 0 <= y <= Y");
  const auto times = lambda.times();
  const auto jumps = lambda.jumps();

  double cum = 0.0;  // Lambda(t_k-) while scanning
  double value = 0.0;
  // risk factor at y, using Lambda(y-)
  {
    const double cl = lambda.cumulative_left(y);
    const auto rp = risk_parts(theta, record.covariates.at(y));
    value += 1.0 / scaled_denominator(rp, -std::expm1(-cl), std::exp(-cl));
  }
  for (std::size_t k = 0; k < times.size() && times[k] <= record.time; ++k) {
    if (times[k] > y) {
      const double S = std::exp(-cum);
      const auto rp = risk_parts(theta, record.covariates.at(times[k]));
      const double D = scaled_denominator(rp, -std::expm1(-cum), S);
      value -= jumps[k] * S * (rp.inv_long - rp.inv_short) / (D * D);
    }
    cum += jumps[k];
  }
  if (record.event && record.time > y) {
    const double cl = lambda.cumulative_left(record.time);
    const double S = std::exp(-cl);
    const auto rp = risk_parts(theta, record.covariates.at(record.time));
    value += S * (rp.inv_long - rp.inv_short) / scaled_denominator(rp, -std::expm1(-cl), S);
  }
  return value;
}

Vector self_consistency_residuals(const Theta& theta, const BaselineHazard& lambda, const Dataset& data,
                                  std::size_t* flagged) {
  theta.validate(data.dimension());
  require_matching_jumps(lambda, data);
  const auto ev = data.event_times();
  const auto times = lambda.times();
  const auto jumps = lambda.jumps();
  const auto m = times.size();
  std::vector<double> denom(m, 0.0);
  std::vector<double> integrand(m);
  std::vector<double> risk(m);
  std::vector<double> surv(m), cdf(m);
  double cum = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    surv[k] = std::exp(-cum);
    cdf[k] = -std::expm1(-cum);
    cum += jumps[k];
  }
  for (const auto& rec : data.records()) {
    const auto K = static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), rec.time) - times.begin());
    double event_term = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const auto rp = risk_parts(theta, rec.covariates.at(times[k]));
      const double D = scaled_denominator(rp, cdf[k], surv[k]);
      risk[k] = 1.0 / D;
      integrand[k] = jumps[k] * surv[k] * (rp.inv_long - rp.inv_short) / (D * D);
      if (rec.event && k + 1 == K) event_term = surv[k] * (rp.inv_long - rp.inv_short) / D;
    }
    // Q(t_j) = [event term if Y > t_j] + risk_j - sum_{j < k < K} integrand_k
    double tail = 0.0;
    for (std::size_t j = K; j-- > 0;) {
      const bool later_event = rec.event && j + 1 < K;
      denom[j] += (later_event ? event_term : 0.0) + risk[j] - tail;
      tail += integrand[j];
    }
  }
  Vector out(static_cast<Eigen::Index>(m));
  std::size_t bad = 0;
  for (std::size_t k = 0; k < m; ++k) {
    if (denom[k] > 0.0) {
      out(static_cast<Eigen::Index>(k)) = jumps[k] - ev.deaths[k] / denom[k];
    } else {
      out(static_cast<Eigen::Index>(k)) = std::numeric_limits<double>::quiet_NaN();
      ++bad;
    }
  }
  if (flagged) *flagged = bad;
  return out;
}

double predicted_survival(const Theta& theta, const BaselineHazard& lambda, const CovariatePath& path, double t) {
  return std::exp(-conditional_cumulative_hazard(theta, lambda, path, t));
}

}  // namespace stlhr
