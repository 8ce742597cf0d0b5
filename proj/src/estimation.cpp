#include "stlhr/estimation.hpp"

#include "stlhr/bfgs.hpp"
#include "stlhr/error.hpp"
#include "stlhr/model.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace stlhr {

std::size_t Constraint::free_theta(std::size_t p) const {
  switch (kind) {
    case Kind::none: return 2 * p;
    case Kind::proportional_hazards:
    case Kind::proportional_odds: return p;
    case Kind::fixed_theta: return 0;
  }
  return 0;
}

std::string Constraint::name() const {
  switch (kind) {
    case Kind::none: return "none";
    case Kind::proportional_hazards: return "ph";
    case Kind::proportional_odds: return "po";
    case Kind::fixed_theta: return "fixed";
  }
  return "unknown";
}

Theta expand_theta(const Constraint& constraint, const Vector& free_theta, std::size_t p) {
  const auto P = static_cast<Eigen::Index>(p);
  switch (constraint.kind) {
    case Constraint::Kind::none: return {free_theta.head(P), free_theta.segment(P, P)};
    case Constraint::Kind::proportional_hazards: return {free_theta.head(P), free_theta.head(P)};
    case Constraint::Kind::proportional_odds: return {free_theta.head(P), Vector::Zero(P)};
    case Constraint::Kind::fixed_theta: return constraint.fixed;
  }
  return Theta::zeros(p);
}

Vector FitResult::free_theta() const {
  switch (constraint.kind) {
    case Constraint::Kind::none: return theta_hat.stacked();
    case Constraint::Kind::proportional_hazards:
    case Constraint::Kind::proportional_odds: return theta_hat.beta;
    case Constraint::Kind::fixed_theta: return Vector(0);
  }
  return Vector(0);
}

ParameterMap::ParameterMap(Constraint constraint, std::size_t p, std::size_t m)
    : constraint_(std::move(constraint)), p_(p), m_(m), free_theta_(constraint_.free_theta(p)) {
  if (constraint_.kind == Constraint::Kind::fixed_theta) constraint_.fixed.validate(p);
}

Vector ParameterMap::expand(const Vector& free) const {
  const auto P = static_cast<Eigen::Index>(p_);
  const auto M = static_cast<Eigen::Index>(m_);
  const auto T = static_cast<Eigen::Index>(free_theta_);
  Vector full(2 * P + M);
  const Theta th = expand_theta(constraint_, free.head(T), p_);
  full.head(P) = th.beta;
  full.segment(P, P) = th.gamma;
  full.tail(M) = free.tail(M);
  return full;
}

Vector ParameterMap::reduce_gradient(const Vector& g) const {
  const auto P = static_cast<Eigen::Index>(p_);
  const auto M = static_cast<Eigen::Index>(m_);
  const auto T = static_cast<Eigen::Index>(free_theta_);
  Vector out(T + M);
  switch (constraint_.kind) {
    case Constraint::Kind::none: out.head(2 * P) = g.head(2 * P); break;
    case Constraint::Kind::proportional_hazards: out.head(P) = g.head(P) + g.segment(P, P); break;
    case Constraint::Kind::proportional_odds: out.head(P) = g.head(P); break;
    case Constraint::Kind::fixed_theta: break;
  }
  out.tail(M) = g.tail(M);
  return out;
}

Vector ParameterMap::reduce(const Vector& full) const {
  const auto M = static_cast<Eigen::Index>(m_);
  const auto T = static_cast<Eigen::Index>(free_theta_);
  Vector out(T + M);
  if (T > 0) out.head(T) = full.head(T);  // beta first, then gamma when unconstrained
  out.tail(M) = full.tail(M);
  return out;
}

namespace {

// Negative Hessian of the log-likelihood in free coordinates.
Information numeric_information(const EvalLayout& layout, const ParameterMap& map, const Vector& x,
                                Backend backend) {
  const auto d = static_cast<Eigen::Index>(map.free_size());
  Matrix H(d, d);
#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index j = 0; j < d; ++j) {
    const double h = 1e-5 * std::max(1.0, std::abs(x(j)));
    Vector xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    const Vector gp = map.reduce_gradient(evaluate(backend, layout, map.expand(xp), true).gradient);
    const Vector gm = map.reduce_gradient(evaluate(backend, layout, map.expand(xm), true).gradient);
    H.col(j) = -(gp - gm) / (2.0 * h);
  }
  Information info;
  info.asymmetry = (H - H.transpose()).cwiseAbs().maxCoeff();
  info.matrix = 0.5 * (H + H.transpose());
  return info;
}

Vector default_inverse_diagonal(const Dataset& data, const EvalLayout& layout, const ParameterMap& map,
                                const Constraint& constraint) {
  const auto P = static_cast<Eigen::Index>(data.dimension());
  Vector diag(static_cast<Eigen::Index>(map.free_size()));
  const auto T = static_cast<Eigen::Index>(map.free_theta());
  if (T > 0) {
    Vector mean = Vector::Zero(P), sq = Vector::Zero(P);
    double events = 0.0;
    for (const auto& r : data.records()) {
      const Vector& x = r.covariates.at(0.0);
      mean += x;
      sq += x.cwiseAbs2();
      if (r.event) events += 1.0;
    }
    const double n = static_cast<double>(data.size());
    mean /= n;
    const Vector var = (sq / n - mean.cwiseAbs2()).cwiseMax(1e-8);
    // rough per-coordinate curvature of a single-index survival score
    const Vector curv = (0.25 * events * var).cwiseMax(1.0);
    const auto blocks = constraint.kind == Constraint::Kind::none ? 2 : 1;
    for (int b = 0; b < blocks; ++b) diag.segment(b * P, P) = curv.cwiseInverse();
  }
  for (std::size_t k = 0; k < layout.m; ++k) diag(T + static_cast<Eigen::Index>(k)) = 1.0 / layout.deaths[k];
  return diag;
}

}  // namespace

FitResult fit(const Dataset& data, const Constraint& constraint, const FitOptions& options) {
  const auto p = data.dimension();
  const auto layout = build_layout(data);
  const auto m = layout.m;
  if (m == 0) throw StructuralError("fit requires at least one event");
  const ParameterMap map(constraint, p, m);
  const auto T = static_cast<Eigen::Index>(map.free_theta());

  Theta theta0 = options.initial_theta.value_or(Theta::zeros(p));
  std::vector<double> jumps0;
  if (options.initialization == Initialization::cox_warm_start && !options.initial_theta &&
      constraint.kind != Constraint::Kind::proportional_hazards &&
      constraint.kind != Constraint::Kind::fixed_theta) {
    FitOptions warm = options;
    warm.initialization = Initialization::zeros_nelson_aalen;
    warm.compute_covariance = false;
    const FitResult ph = fit(data, Constraint::proportional_hazards(), warm);
    theta0 = {ph.theta_hat.beta,
              constraint.kind == Constraint::Kind::proportional_odds ? Vector::Zero(static_cast<Eigen::Index>(p))
                                                                     : ph.theta_hat.beta};
    const auto j = ph.lambda_hat.jumps();
    jumps0.assign(j.begin(), j.end());
  }
  if (constraint.kind == Constraint::Kind::fixed_theta) theta0 = constraint.fixed;
  theta0.validate(p);
  if (options.initial_jumps) jumps0 = *options.initial_jumps;
  if (jumps0.empty()) {
    const auto na = BaselineHazard::nelson_aalen(data);
    jumps0.assign(na.jumps().begin(), na.jumps().end());
  }
  if (jumps0.size() != m) throw StructuralError("initial jumps must have one entry per distinct event time");

  Vector full0(static_cast<Eigen::Index>(2 * p + m));
  full0.head(static_cast<Eigen::Index>(p)) = theta0.beta;
  full0.segment(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p)) = theta0.gamma;
  for (std::size_t k = 0; k < m; ++k) full0(static_cast<Eigen::Index>(2 * p + k)) = std::log(jumps0[k]);
  const Vector x0 = map.reduce(full0);

  const optim::Objective objective = [&](const Vector& x, Vector& g) {
    const auto ev = evaluate(options.backend, layout, map.expand(x), true);
    g = -map.reduce_gradient(ev.gradient);
    return -ev.loglik;
  };

  optim::BfgsOptions bo;
  // Aim below the convergence threshold so the jumps are resolved to about
  // tolerance relative, not just at it.
  bo.gradient_tolerance = 0.1 * options.tolerance;
  bo.relative_tolerance = options.relative_tolerance;
  bo.max_iterations = options.max_iterations;
  auto res = optim::minimize_bfgs(objective, x0, default_inverse_diagonal(data, layout, map, constraint), bo);

  FitResult out;
  out.constraint = constraint;
  out.iterations = res.iterations;
  out.evaluations = res.evaluations;
  out.message = res.message;
  out.objective_trace.reserve(res.trace.size());
  for (double f : res.trace) out.objective_trace.push_back(-f);

  Vector x = res.x;
  double value = res.value;
  Vector grad = res.gradient;

  // Newton polish with the differenced analytic Hessian when BFGS stalls short
  // of the gradient tolerance (not when it ran out of iterations).
  std::optional<Information> info_at_x;
  for (int it = 0; it < 20 && !res.exhausted && grad.lpNorm<Eigen::Infinity>() >= options.tolerance; ++it) {
    if (!grad.allFinite()) break;
    Information info = numeric_information(layout, map, x, options.backend);
    Eigen::LDLT<Matrix> ldlt(info.matrix);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) break;
    const Vector step = ldlt.solve(-grad);  // ascent direction for the log-likelihood
    bool accepted = false;
    for (double scale = 1.0; scale > 1e-3; scale *= 0.5) {
      Vector xn = x + scale * step;
      Vector gn;
      double fn;
      try {
        fn = objective(xn, gn);
      } catch (const EvaluationError&) {
        continue;
      }
      // Objective differences below the relative tolerance are rounding ties.
      if (fn <= value + options.relative_tolerance * std::max(1.0, std::abs(value)) &&
          gn.lpNorm<Eigen::Infinity>() < grad.lpNorm<Eigen::Infinity>()) {
        x = std::move(xn);
        value = fn;
        grad = std::move(gn);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    out.message += "; newton polish";
  }

  const Vector full = map.expand(x);
  const auto th = expand_theta(constraint, x.head(T), p);
  out.theta_hat = th;
  std::vector<double> lj(full.data() + 2 * p, full.data() + 2 * p + m);
  out.lambda_hat = BaselineHazard::from_log_jumps(layout.times, lj);
  const auto final_eval = evaluate(options.backend, layout, full, true);
  out.loglik = final_eval.loglik;
  out.clamp_count = final_eval.clamped;
  out.gradient_norm = map.reduce_gradient(final_eval.gradient).lpNorm<Eigen::Infinity>();
  out.converged = out.gradient_norm < options.tolerance;

  if (options.compute_covariance && out.converged) {
    try {
      const Information info = numeric_information(layout, map, x, options.backend);
      out.covariance_free = invert_information(info.matrix);
      out.covariance_theta = out.covariance_free.topLeftCorner(T, T);
    } catch (const SingularMatrixError& e) {
      out.covariance_error = e.what();
      out.covariance_theta = Matrix::Constant(T, T, std::numeric_limits<double>::quiet_NaN());
    }
  }
  return out;
}

Information observed_information(const FitResult& fit, const Dataset& data, Backend backend) {
  if (!fit.converged) throw ConvergenceError("observed information requires a converged fit");
  const auto layout = build_layout(data);
  const ParameterMap map(fit.constraint, data.dimension(), layout.m);
  require_matching_jumps(fit.lambda_hat, data);
  const Vector x = map.reduce(stack_parameters(fit.theta_hat, fit.lambda_hat));
  return numeric_information(layout, map, x, backend);
}

Matrix invert_information(const Matrix& info) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(info);
  if (es.info() != Eigen::Success) {
    throw SingularMatrixError("eigen decomposition of the information matrix failed", std::nan(""), {});
  }
  const Vector& ev = es.eigenvalues();
  const double smallest = ev(0);
  const double largest = ev(ev.size() - 1);
  if (!(smallest > 1e-12 * std::max(1.0, std::abs(largest)))) {
    const Vector v = es.eigenvectors().col(0);
    std::vector<std::size_t> idx(static_cast<std::size_t>(v.size()));
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(v(static_cast<Eigen::Index>(a))) > std::abs(v(static_cast<Eigen::Index>(b)));
    });
    idx.resize(std::min<std::size_t>(3, idx.size()));
    std::ostringstream os;
    os << "information matrix is singular: smallest eigenvalue " << smallest << " (dominant coordinates";
    for (auto i : idx) os << ' ' << i;
    os << ')';
    throw SingularMatrixError(os.str(), smallest, idx);
  }
  Matrix inv = es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (inv + inv.transpose());
}

Matrix covariance_theta_from_information(const Matrix& info, std::size_t theta_dim) {
  const Matrix inv = invert_information(info);
  const auto T = theta_dim == 0 ? inv.rows() : static_cast<Eigen::Index>(theta_dim);
  return inv.topLeftCorner(T, T);
}

Matrix curvature_covariance(const std::function<double(const Vector&)>& profile, const Vector& center,
                            const Vector& steps) {
  const auto d = center.size();
  if (steps.size() != d || (steps.array() <= 0.0).any()) {
    throw StructuralError("curvature_covariance: steps must be positive, one per coordinate");
  }
  const double f0 = profile(center);
  Matrix H(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    Vector xp = center, xm = center;
    xp(j) += steps(j);
    xm(j) -= steps(j);
    H(j, j) = (profile(xp) - 2.0 * f0 + profile(xm)) / (steps(j) * steps(j));
    for (Eigen::Index k = 0; k < j; ++k) {
      Vector pp = center, pm = center, mp = center, mm = center;
      pp(j) += steps(j); pp(k) += steps(k);
      pm(j) += steps(j); pm(k) -= steps(k);
      mp(j) -= steps(j); mp(k) += steps(k);
      mm(j) -= steps(j); mm(k) -= steps(k);
      H(j, k) = H(k, j) = (profile(pp) - profile(pm) - profile(mp) + profile(mm)) / (4.0 * steps(j) * steps(k));
    }
  }
  return invert_information(-H);
}

FitResult profile_fit(const Dataset& data, const Theta& theta, const std::vector<double>& warm_jumps) {
  FitOptions opt;
  opt.compute_covariance = false;
  if (!warm_jumps.empty()) opt.initial_jumps = warm_jumps;
  return fit(data, Constraint::fixed_theta(theta), opt);
}

Matrix profile_covariance(const Dataset& data, const FitResult& fitted, double step) {
  if (!fitted.converged) throw ConvergenceError("profile covariance requires a converged fit");
  if (fitted.constraint.kind == Constraint::Kind::fixed_theta) {
    throw StructuralError("profile covariance is undefined for a fixed-theta fit");
  }
  const auto p = data.dimension();
  const Vector center = fitted.free_theta();
  if (step <= 0.0) step = 5.0 / std::sqrt(static_cast<double>(data.size()));
  const std::vector<double> warm(fitted.lambda_hat.jumps().begin(), fitted.lambda_hat.jumps().end());
  const auto profile = [&](const Vector& free) {
    const Theta th = expand_theta(fitted.constraint, free, p);
    const FitResult inner = profile_fit(data, th, warm);
    if (!inner.converged) {
      std::ostringstream os;
      os << "profile inner maximization did not converge at theta offset [" << (free - center).transpose() << "]";
      throw ConvergenceError(os.str());
    }
    return inner.loglik;
  };
  return curvature_covariance(profile, center, Vector::Constant(center.size(), step));
}

}  // namespace stlhr
