#include "stlhr/diagnostics.hpp"

#include "stlhr/error.hpp"
#include "stlhr/model.hpp"
#include "stlhr/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace stlhr {

double StepCurve::at(double t) const {
  auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return values.empty() ? 1.0 : values.front();
  return values[static_cast<std::size_t>(it - times.begin()) - 1];
}

StepCurve kaplan_meier(std::span<const std::pair<double, bool>> records) {
  if (records.empty()) throw StructuralError("kaplan_meier needs at least one record");
  std::vector<std::pair<double, bool>> sorted(records.begin(), records.end());
  std::sort(sorted.begin(), sorted.end());
  StepCurve curve{{0.0}, {1.0}};
  double surv = 1.0;
  std::size_t i = 0;
  const std::size_t n = sorted.size();
  while (i < n) {
    const double t = sorted[i].first;
    const auto at_risk = static_cast<double>(n - i);
    double deaths = 0.0;
    std::size_t j = i;
    for (; j < n && sorted[j].first == t; ++j) deaths += sorted[j].second ? 1.0 : 0.0;
    if (deaths > 0.0) {
      surv *= 1.0 - deaths / at_risk;
      if (t == 0.0) {
        curve.values.front() = surv;
      } else {
        curve.times.push_back(t);
        curve.values.push_back(surv);
      }
    }
    i = j;
  }
  return curve;
}

StepCurve kaplan_meier(const Dataset& data) {
  std::vector<std::pair<double, bool>> rec;
  rec.reserve(data.size());
  for (const auto& r : data.records()) rec.emplace_back(r.time, r.event);
  return kaplan_meier(rec);
}

StepCurve model_fitted_curve(const FitResult& fit, std::span<const CovariatePath> paths,
                             std::span<const double> grid) {
  if (paths.empty()) throw StructuralError("model_fitted_curve needs at least one covariate path");
  StepCurve curve;
  curve.times.assign(grid.begin(), grid.end());
  curve.values.assign(grid.size(), 0.0);
  for (const auto& path : paths) {
    for (std::size_t g = 0; g < grid.size(); ++g) {
      curve.values[g] += predicted_survival(fit.theta_hat, fit.lambda_hat, path, grid[g]);
    }
  }
  for (auto& v : curve.values) v /= static_cast<double>(paths.size());
  return curve;
}

Vector martingale_residuals(const Theta& theta, const BaselineHazard& lambda, const Dataset& data, double t) {
  if (t < 0.0) throw StructuralError("martingale residuals need t >= 0");
  Vector out(static_cast<Eigen::Index>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& r = data.records()[i];
    const double counted = (r.event && r.time <= t) ? 1.0 : 0.0;
    out(static_cast<Eigen::Index>(i)) =
        counted - conditional_cumulative_hazard(theta, lambda, r.covariates, std::min(r.time, t));
  }
  return out;
}

Vector martingale_residuals(const FitResult& fit, const Dataset& data, double t) {
  return martingale_residuals(fit.theta_hat, fit.lambda_hat, data, t);
}

namespace {

// Per-event-time increments of sum_i Z_i dM_i in the given coordinates of
// the 2p-vector Z, with parameters in stacked (beta, gamma, log jump) form.
// If `per_subject` is non-null it receives subject-level cumulative
// processes: (*per_subject)[k](i, c) = u_i(t_k) in coordinate coords[c].
Matrix process_increments(const Dataset& data, std::span<const double> times, const Vector& params,
                          std::span<const Eigen::Index> coords, std::vector<Matrix>* per_subject) {
  const auto p = static_cast<Eigen::Index>(data.dimension());
  const auto m = times.size();
  const Vector beta = params.head(p);
  const Vector gamma = params.segment(p, p);
  std::vector<double> jump(m), surv(m), cdf(m);
  double cum = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    jump[k] = std::exp(params(2 * p + static_cast<Eigen::Index>(k)));
    surv[k] = std::exp(-cum);
    cdf[k] = -std::expm1(-cum);
    cum += jump[k];
  }
  const auto C = static_cast<Eigen::Index>(coords.size());
  Matrix total = Matrix::Zero(static_cast<Eigen::Index>(m), C);
  if (per_subject) per_subject->assign(m, Matrix::Zero(static_cast<Eigen::Index>(data.size()), C));

  Vector z(2 * p);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& rec = data.records()[i];
    const auto K = static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), rec.time) - times.begin());
    Vector running = Vector::Zero(C);
    for (std::size_t k = 0; k < m; ++k) {
      if (k < K) {
        const Vector& x = rec.covariates.at(times[k]);
        const double ia = std::exp(-beta.dot(x));
        const double ib = std::exp(-gamma.dot(x));
        const double D = cdf[k] * ib + surv[k] * ia;
        const double pi = surv[k] * ia / D;
        const double dN = (rec.event && k + 1 == K) ? 1.0 : 0.0;
        const double dM = dN - jump[k] / D;
        z.head(p) = pi * x;
        z.tail(p) = (1.0 - pi) * x;
        for (Eigen::Index c = 0; c < C; ++c) {
          const double inc = z(coords[static_cast<std::size_t>(c)]) * dM;
          total(static_cast<Eigen::Index>(k), c) += inc;
          running(c) += inc;
        }
      } else if (!per_subject) {
        break;
      }
      if (per_subject) (*per_subject)[k].row(static_cast<Eigen::Index>(i)) = running.transpose();
    }
  }
  return total;
}

std::vector<Vector> cumulate_on_grid(const Matrix& increments, std::span<const double> times,
                                     std::span<const double> grid) {
  std::vector<Vector> out;
  out.reserve(grid.size());
  for (double t : grid) {
    const auto K = static_cast<Eigen::Index>(std::upper_bound(times.begin(), times.end(), t) - times.begin());
    out.push_back(K > 0 ? Vector(increments.topRows(K).colwise().sum().transpose())
                        : Vector(Vector::Zero(increments.cols())));
  }
  return out;
}

}  // namespace

std::vector<Vector> score_process(const Theta& theta, const BaselineHazard& lambda, const Dataset& data,
                                  std::span<const double> grid) {
  theta.validate(data.dimension());
  require_matching_jumps(lambda, data);
  const auto p = static_cast<Eigen::Index>(data.dimension());
  std::vector<Eigen::Index> coords(static_cast<std::size_t>(2 * p));
  for (Eigen::Index c = 0; c < 2 * p; ++c) coords[static_cast<std::size_t>(c)] = c;
  const Matrix inc = process_increments(data, lambda.times(), stack_parameters(theta, lambda), coords, nullptr);
  return cumulate_on_grid(inc, lambda.times(), grid);
}

std::vector<Vector> score_process(const FitResult& fit, const Dataset& data, std::span<const double> grid) {
  return score_process(fit.theta_hat, fit.lambda_hat, data, grid);
}

KjResult kj_statistic(const FitResult& fit, const Dataset& data, std::size_t j, const KjOptions& options) {
  if (!fit.converged) throw ConvergenceError("K_j requires a converged fit");
  if (fit.constraint.kind != Constraint::Kind::none) throw StructuralError("K_j requires an unconstrained fit");
  const auto P = data.dimension();
  if (j >= P) throw StructuralError("K_j covariate index out of range");
  require_matching_jumps(fit.lambda_hat, data);

  const auto p = static_cast<Eigen::Index>(P);
  const auto times = fit.lambda_hat.times();
  const auto m = times.size();
  const double tau = data.tau();
  const double delta = options.delta < 0.0 ? 0.05 * tau : options.delta;
  if (!(delta > 0.0)) throw StructuralError("K_j needs delta > 0");

  std::vector<std::size_t> grid;
  for (std::size_t k = 0; k < m; ++k) {
    if (times[k] >= delta && times[k] <= tau - delta) grid.push_back(k);
  }
  KjResult out;
  out.grid_points = grid.size();
  out.resamples = options.resamples;
  if (grid.empty()) return out;

  const std::array<Eigen::Index, 2> coords{static_cast<Eigen::Index>(j), p + static_cast<Eigen::Index>(j)};
  const Vector params = stack_parameters(fit.theta_hat, fit.lambda_hat);
  std::vector<Matrix> subject;
  process_increments(data, times, params, coords, &subject);

  // Estimation effect of (theta, Lambda): linearize U(t) in the parameters and
  // add D(t) I^{-1} s_i to each subject's contribution.
  Matrix cov_free = fit.covariance_free;
  if (cov_free.rows() == 0) cov_free = invert_information(observed_information(fit, data).matrix);
  const auto d = params.size();
  std::vector<Matrix> deriv(m, Matrix(2, d));  // dU_(j, p+j)(t_k) / d params
#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index l = 0; l < d; ++l) {
    const double h = 1e-5 * std::max(1.0, std::abs(params(l)));
    Vector xp = params, xm = params;
    xp(l) += h;
    xm(l) -= h;
    const Matrix up = process_increments(data, times, xp, coords, nullptr);
    const Matrix um = process_increments(data, times, xm, coords, nullptr);
    Vector run = Vector::Zero(2);
    for (std::size_t k = 0; k < m; ++k) {
      run += (up.row(static_cast<Eigen::Index>(k)) - um.row(static_cast<Eigen::Index>(k))).transpose() / (2.0 * h);
      deriv[k].col(l) = run;
    }
  }
  const Matrix influence = cov_free * subject_scores(fit.theta_hat, fit.lambda_hat, data).transpose();  // d x n

  const auto n = static_cast<Eigen::Index>(data.size());
  std::vector<Matrix> contrib;       // 2 x n per grid point
  std::vector<Eigen::Matrix2d> inv;  // inverse covariance per grid point
  std::vector<Eigen::Vector2d> observed;
  for (auto k : grid) {
    Matrix c = subject[k].transpose() + deriv[k] * influence;
    const Eigen::Matrix2d cov = c * c.transpose();
    const double det = cov.determinant();
    // After the last event the score equations pin U(t) to zero and the
    // corrected contributions cancel; such points carry no information.
    const double raw = subject[k].squaredNorm();
    if (!(det > 1e-12 * cov.trace() * cov.trace()) || !(cov.trace() > 1e-8 * raw)) {
      ++out.skipped;
      continue;
    }
    inv.push_back(cov.inverse());
    observed.push_back(subject[k].colwise().sum().transpose());
    out.form_times.push_back(times[k]);
    contrib.push_back(std::move(c));
  }
  if (contrib.empty()) return out;

  double K = 0.0;
  for (std::size_t g = 0; g < contrib.size(); ++g) {
    out.forms.push_back(observed[g].dot(inv[g] * observed[g]));
    K = std::max(K, out.forms.back());
  }
  out.statistic = K;

  // Realizations are processed in chunks: one product of the stacked
  // contributions with an n x chunk sign matrix per chunk.
  const auto G = static_cast<Eigen::Index>(contrib.size());
  Matrix stacked(2 * G, n);
  for (Eigen::Index g = 0; g < G; ++g) stacked.middleRows(2 * g, 2) = contrib[static_cast<std::size_t>(g)];
  constexpr std::ptrdiff_t chunk = 128;
  const auto R = static_cast<std::ptrdiff_t>(options.resamples);
  const std::ptrdiff_t chunks = (R + chunk - 1) / chunk;
  std::size_t exceed = 0;
#pragma omp parallel for reduction(+ : exceed) schedule(static)
  for (std::ptrdiff_t c = 0; c < chunks; ++c) {
    const std::ptrdiff_t r0 = c * chunk;
    const auto width = static_cast<Eigen::Index>(std::min(chunk, R - r0));
    Matrix sign(n, width);
    for (Eigen::Index w = 0; w < width; ++w) {
      CounterRng rng(options.seed, static_cast<std::uint64_t>(r0 + w), 0);
      for (Eigen::Index i = 0; i < n; ++i) sign(i, w) = (rng() >> 63) ? 1.0 : -1.0;
    }
    const Matrix u = stacked * sign;
    for (Eigen::Index w = 0; w < width; ++w) {
      double k_star = 0.0;
      for (Eigen::Index g = 0; g < G; ++g) {
        const Eigen::Vector2d v = u.block(2 * g, w, 2, 1);
        k_star = std::max(k_star, v.dot(inv[static_cast<std::size_t>(g)] * v));
      }
      if (k_star >= K) ++exceed;
    }
  }
  out.p_value = options.resamples > 0 ? static_cast<double>(exceed) / static_cast<double>(options.resamples) : 1.0;
  return out;
}

}  // namespace stlhr
