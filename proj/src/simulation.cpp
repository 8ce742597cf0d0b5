#include "stlhr/simulation.hpp"

#include "stlhr/error.hpp"
#include "stlhr/inference.hpp"
#include "stlhr/rng.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace stlhr {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kCensorCap = 2.0;
constexpr double kCensorUpper = 4.0;
constexpr double kBaselineTimes[] = {0.5, 1.0};

std::string indexed(const std::string& base, std::size_t j, std::size_t p) {
  return p == 1 ? base : base + "[" + std::to_string(j + 1) + "]";
}

struct Layout {
  std::vector<std::string> names;
  std::vector<double> truths;
  std::vector<std::string> hypotheses;
};

Layout study_layout(const ScenarioSpec& spec, const StudyTargets& targets) {
  Layout out;
  const auto p = spec.dimension();
  for (std::size_t j = 0; j < p; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    out.names.push_back(indexed("beta", j, p));
    out.truths.push_back(spec.beta(jj));
    out.names.push_back(indexed("gamma", j, p));
    out.truths.push_back(spec.gamma(jj));
  }
  if (targets.table1) {
    for (double t : kBaselineTimes) {
      std::ostringstream os;
      os << "Lambda(" << (t == 1.0 ? "1.0" : "0.5") << ")";
      out.names.push_back(os.str());
      out.truths.push_back(t);
    }
    const bool ph_true = spec.beta == spec.gamma;
    const bool po_true = spec.gamma.isZero(0.0);
    for (std::size_t j = 0; j < p; ++j) {
      out.names.push_back(indexed("beta_PH", j, p));
      out.truths.push_back(ph_true ? spec.beta(static_cast<Eigen::Index>(j)) : kNaN);
    }
    for (std::size_t j = 0; j < p; ++j) {
      out.names.push_back(indexed("beta_PO", j, p));
      out.truths.push_back(po_true ? spec.beta(static_cast<Eigen::Index>(j)) : kNaN);
    }
  }
  if (targets.table2) {
    for (const char* h : {"H1", "H2", "H3", "H4", "H5"}) {
      for (std::size_t j = 0; j < p; ++j) out.hypotheses.push_back(indexed(h, j, p));
    }
  }
  return out;
}

double standard_error(const Matrix& cov, Eigen::Index k) {
  return cov.rows() > k ? std::sqrt(std::max(0.0, cov(k, k))) : kNaN;
}

// log-scale Wald interval for Lambda(t) from the log-jump block of the
// inverse information; returns (estimate, se of the estimate, covered).
struct BaselinePoint {
  double estimate;
  double se;
  bool covered;
};

BaselinePoint baseline_point(const FitResult& f, double t, double truth, double z) {
  const auto times = f.lambda_hat.times();
  const auto jumps = f.lambda_hat.jumps();
  const auto offset = static_cast<Eigen::Index>(f.constraint.free_theta(f.theta_hat.dimension()));
  const double cum = f.lambda_hat.cumulative(t);
  if (!(cum > 0.0) || f.covariance_free.rows() == 0) return {cum, kNaN, false};
  Eigen::Index K = 0;
  while (K < static_cast<Eigen::Index>(times.size()) && times[static_cast<std::size_t>(K)] <= t) ++K;
  Vector g(K);
  for (Eigen::Index k = 0; k < K; ++k) g(k) = jumps[static_cast<std::size_t>(k)] / cum;
  const double var_log = g.dot(f.covariance_free.block(offset, offset, K, K) * g);
  const double se_log = std::sqrt(std::max(0.0, var_log));
  const double lo = std::log(cum) - z * se_log;
  const double hi = std::log(cum) + z * se_log;
  const double lt = std::log(truth);
  return {cum, cum * se_log, lt >= lo && lt <= hi};
}

bool covers(double est, double se, double truth, double z) {
  return std::isfinite(truth) && std::abs(est - truth) <= z * se;
}

}  // namespace

ScenarioSpec ScenarioSpec::named(const std::string& name) {
  ScenarioSpec s;
  if (name == "a") {
    s.beta(0) = -0.5, s.gamma(0) = 0.5;
  } else if (name == "b") {
    s.beta(0) = -0.5, s.gamma(0) = 0.0;
  } else if (name == "c") {
    s.beta(0) = 0.0, s.gamma(0) = 0.5;
  } else if (name == "d") {
    s.beta(0) = 0.5, s.gamma(0) = 0.5;
  } else {
    throw StructuralError("unknown scenario '" + name + "' (expected a, b, c or d)");
  }
  return s;
}

void ScenarioSpec::validate() const {
  if (n < 2) throw StructuralError("scenario needs n >= 2");
  if (replicates < 1) throw StructuralError("scenario needs at least one replicate");
  if (beta.size() == 0 || beta.size() != gamma.size()) throw StructuralError("scenario beta/gamma dimension mismatch");
  if (!beta.allFinite() || !gamma.allFinite()) throw StructuralError("scenario parameters must be finite");
}

double sample_event_time(const Theta& theta, const Vector& x, double u) {
  if (!(u > 0.0 && u < 1.0)) throw StructuralError("sample_event_time needs u in (0, 1)");
  const double eta_b = theta.beta.dot(x);
  const double eta_g = theta.gamma.dot(x);
  // u^{-1/b} - 1 = expm1(-log(u) / b); b/a = exp(eta_g - eta_b).
  const double inner = std::exp(eta_g - eta_b) * std::expm1(-std::log(u) * std::exp(-eta_g));
  return std::log1p(inner);
}

Dataset generate_dataset(const ScenarioSpec& spec, std::size_t replicate) {
  spec.validate();
  const auto p = static_cast<Eigen::Index>(spec.dimension());
  const Theta truth = spec.truth();
  CounterRng rx(spec.seed, replicate, 0), rt(spec.seed, replicate, 1), rc(spec.seed, replicate, 2);
  std::vector<SurvivalRecord> records;
  records.reserve(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    Vector x(p);
    for (Eigen::Index j = 0; j < p; ++j) {
      x(j) = spec.covariate_law == CovariateLaw::uniform ? rx.uniform(-1.0, 1.0) : (rx.uniform() < 0.5 ? -0.5 : 0.5);
    }
    const double T = sample_event_time(truth, x, rt.uniform());
    const double C = std::min(kCensorCap, rc.uniform(0.0, kCensorUpper));
    records.push_back({std::min(T, C), T <= C, CovariatePath::constant(std::move(x))});
  }
  return Dataset(std::move(records));
}

ReplicateOutcome run_replicate(const ScenarioSpec& spec, const StudyTargets& targets, std::size_t replicate,
                               double level) {
  const Layout layout = study_layout(spec, targets);
  const auto p = spec.dimension();
  const auto pp = static_cast<Eigen::Index>(p);
  const double z = normal_quantile(0.975);
  ReplicateOutcome out;
  const bool need_cov = targets.table1 || targets.table2;
  const std::size_t failed_size = layout.names.size();
  out.estimates.assign(failed_size, kNaN);
  out.standard_errors.assign(failed_size, kNaN);
  out.covered.assign(failed_size, false);
  out.rejected.assign(layout.hypotheses.size(), false);

  const Dataset data = generate_dataset(spec, replicate);
  FitOptions opts;
  opts.compute_covariance = need_cov;
  FitResult full;
  try {
    full = fit(data, Constraint::none(), opts);
  } catch (const std::exception&) {
    return out;
  }
  if (!full.converged || (need_cov && !full.covariance_theta.allFinite())) return out;

  std::size_t slot = 0;
  auto record = [&](double est, double se, double truth) {
    out.estimates[slot] = est;
    out.standard_errors[slot] = se;
    out.covered[slot] = covers(est, se, truth, z);
    ++slot;
  };
  for (Eigen::Index j = 0; j < pp; ++j) {
    record(full.theta_hat.beta(j), need_cov ? standard_error(full.covariance_theta, j) : kNaN, spec.beta(j));
    record(full.theta_hat.gamma(j), need_cov ? standard_error(full.covariance_theta, pp + j) : kNaN, spec.gamma(j));
  }

  FitResult ph, po;
  if (need_cov) {
    try {
      ph = fit(data, Constraint::proportional_hazards(), opts);
      if (targets.table1) po = fit(data, Constraint::proportional_odds(), opts);
    } catch (const std::exception&) {
      return out;
    }
    if (!ph.converged || !ph.covariance_theta.allFinite()) return out;
    if (targets.table1 && (!po.converged || !po.covariance_theta.allFinite())) return out;
  }

  if (targets.table1) {
    for (double t : kBaselineTimes) {
      const auto b = baseline_point(full, t, t, z);
      if (!std::isfinite(b.se)) return out;
      out.estimates[slot] = b.estimate;
      out.standard_errors[slot] = b.se;
      out.covered[slot] = b.covered;
      ++slot;
    }
    const std::size_t ph_slot = slot;
    for (Eigen::Index j = 0; j < pp; ++j) {
      record(ph.theta_hat.beta(j), standard_error(ph.covariance_theta, j), layout.truths[ph_slot + static_cast<std::size_t>(j)]);
    }
    const std::size_t po_slot = slot;
    for (Eigen::Index j = 0; j < pp; ++j) {
      record(po.theta_hat.beta(j), standard_error(po.covariance_theta, j), layout.truths[po_slot + static_cast<std::size_t>(j)]);
    }
  }

  if (targets.table2) {
    std::size_t h = 0;
    try {
      for (auto kind : {Hypothesis::Kind::H1, Hypothesis::Kind::H2, Hypothesis::Kind::H3, Hypothesis::Kind::H4,
                        Hypothesis::Kind::H5}) {
        for (std::size_t j = 0; j < p; ++j) {
          const Hypothesis hyp{kind, {j}};
          const TestResult r = wald_test(kind == Hypothesis::Kind::H5 ? ph : full, hyp);
          out.rejected[h++] = r.p_value < level;
        }
      }
    } catch (const std::exception&) {
      return out;
    }
  }
  out.ok = true;
  return out;
}

ReplicationSummary run_replication_study(const ScenarioSpec& spec, const StudyTargets& targets, double level) {
  spec.validate();
  if (!(level > 0.0 && level < 1.0)) throw StructuralError("test level must be in (0, 1)");
  std::vector<ReplicateOutcome> outcomes(spec.replicates);

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(spec.replicates); ++r) {
    outcomes[static_cast<std::size_t>(r)] = run_replicate(spec, targets, static_cast<std::size_t>(r), level);
  }
  return summarize(spec, targets, outcomes);
}

ReplicationSummary summarize(const ScenarioSpec& spec, const StudyTargets& targets,
                             const std::vector<ReplicateOutcome>& outcomes) {
  const Layout layout = study_layout(spec, targets);

  ReplicationSummary summary;
  summary.spec = spec;
  for (std::size_t r = 0; r < outcomes.size(); ++r) {
    if (!outcomes[r].ok) summary.failed_replicates.push_back(r);
  }
  summary.failures = summary.failed_replicates.size();
  summary.completed = outcomes.size() - summary.failures;
  const auto N = static_cast<double>(summary.completed);

  for (std::size_t k = 0; k < layout.names.size(); ++k) {
    ParameterSummary s;
    s.name = layout.names[k];
    s.truth = layout.truths[k];
    double sum = 0.0, sum_se = 0.0, cover = 0.0;
    for (const auto& o : outcomes) {
      if (!o.ok) continue;
      sum += o.estimates[k];
      sum_se += o.standard_errors[k];
      cover += o.covered[k] ? 1.0 : 0.0;
    }
    s.mean = sum / N;
    double ss = 0.0;
    for (const auto& o : outcomes) {
      if (o.ok) ss += (o.estimates[k] - s.mean) * (o.estimates[k] - s.mean);
    }
    s.sd = summary.completed > 1 ? std::sqrt(ss / (N - 1.0)) : kNaN;
    s.mean_se = sum_se / N;
    s.coverage = std::isfinite(s.truth) ? cover / N : kNaN;
    s.variance = ss / N;
    s.bias = std::isfinite(s.truth) ? s.mean - s.truth : kNaN;
    double sq = 0.0;
    for (const auto& o : outcomes) {
      if (o.ok) sq += (o.estimates[k] - s.truth) * (o.estimates[k] - s.truth);
    }
    s.mse = sq / N;
    summary.parameters.push_back(std::move(s));
  }
  for (std::size_t h = 0; h < layout.hypotheses.size(); ++h) {
    double count = 0.0;
    for (const auto& o : outcomes) {
      if (o.ok && o.rejected[h]) count += 1.0;
    }
    summary.rejections.push_back({layout.hypotheses[h], count / N});
  }
  return summary;
}

}  // namespace stlhr
