#include "stlhr/inference.hpp"

#include "stlhr/error.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include <cmath>

namespace stlhr {

std::string Hypothesis::name() const {
  static const char* names[] = {"H1", "H2", "H3", "H4", "H5"};
  return names[static_cast<int>(kind)];
}

Hypothesis::Kind Hypothesis::parse_kind(const std::string& text) {
  if (text == "H1") return Kind::H1;
  if (text == "H2") return Kind::H2;
  if (text == "H3") return Kind::H3;
  if (text == "H4") return Kind::H4;
  if (text == "H5") return Kind::H5;
  throw StructuralError("unknown hypothesis '" + text + "'");
}

double chi_square_upper(double statistic, int dof) {
  if (dof <= 0) throw StructuralError("chi-square needs positive degrees of freedom");
  if (!(statistic > 0.0)) return 1.0;
  if (std::isinf(statistic)) return 0.0;
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, statistic));
}

double normal_quantile(double probability) {
  if (!(probability > 0.0 && probability < 1.0)) throw StructuralError("normal quantile needs 0 < p < 1");
  return boost::math::quantile(boost::math::normal(), probability);
}

Matrix hypothesis_contrast(const Hypothesis& hyp, const Constraint& constraint, std::size_t p) {
  const auto P = static_cast<Eigen::Index>(p);
  const bool needs_ph = hyp.kind == Hypothesis::Kind::H5;
  if (needs_ph && constraint.kind != Constraint::Kind::proportional_hazards) {
    throw StructuralError("H5 requires a proportional-hazards fit");
  }
  if (!needs_ph && constraint.kind != Constraint::Kind::none) {
    throw StructuralError(hyp.name() + " requires an unconstrained fit");
  }
  if (hyp.coordinates.empty()) throw StructuralError("hypothesis needs at least one coordinate");
  for (auto j : hyp.coordinates) {
    if (j >= p) throw StructuralError("hypothesis coordinate out of range");
  }
  const auto J = static_cast<Eigen::Index>(hyp.coordinates.size());
  const Eigen::Index cols = needs_ph ? P : 2 * P;
  const Eigen::Index rows = hyp.kind == Hypothesis::Kind::H3 ? 2 * J : J;
  Matrix C = Matrix::Zero(rows, cols);
  for (Eigen::Index r = 0; r < J; ++r) {
    const auto j = static_cast<Eigen::Index>(hyp.coordinates[static_cast<std::size_t>(r)]);
    switch (hyp.kind) {
      case Hypothesis::Kind::H1:
      case Hypothesis::Kind::H5: C(r, j) = 1.0; break;
      case Hypothesis::Kind::H2: C(r, P + j) = 1.0; break;
      case Hypothesis::Kind::H3:
        C(r, j) = 1.0;
        C(J + r, P + j) = 1.0;
        break;
      case Hypothesis::Kind::H4:
        C(r, j) = 1.0;
        C(r, P + j) = -1.0;
        break;
    }
  }
  return C;
}

TestResult wald_test(const FitResult& fit, const Hypothesis& hyp) {
  const auto T = fit.covariance_theta.rows();
  const auto p = static_cast<std::size_t>(fit.theta_hat.beta.size());
  const Matrix C = hypothesis_contrast(hyp, fit.constraint, p);
  if (T != C.cols() || !fit.covariance_theta.allFinite()) {
    throw StructuralError("wald_test requires a fit with a finite covariance estimate");
  }
  const Vector est = C * fit.free_theta();
  const Matrix V = C * fit.covariance_theta * C.transpose();
  Eigen::LDLT<Matrix> ldlt(V);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || (ldlt.vectorD().array() <= 0.0).any()) {
    throw SingularMatrixError("contrast covariance is singular", ldlt.vectorD().minCoeff(), {});
  }
  TestResult out;
  out.hypothesis = hyp;
  out.method = "wald";
  out.statistic = std::max(0.0, est.dot(ldlt.solve(est)));
  out.dof = static_cast<int>(C.rows());
  out.p_value = chi_square_upper(out.statistic, out.dof);
  return out;
}

TestResult likelihood_ratio_test(const FitResult& full, const FitResult& constrained, int dof) {
  double stat = 2.0 * (full.loglik - constrained.loglik);
  if (stat < -1e-6) {
    throw ConvergenceError("negative likelihood-ratio statistic: the larger model was not maximized");
  }
  TestResult out;
  out.method = "lrt";
  if (constrained.constraint.kind == Constraint::Kind::proportional_hazards) {
    out.hypothesis.kind = Hypothesis::Kind::H4;
  } else if (constrained.constraint.kind == Constraint::Kind::proportional_odds) {
    out.hypothesis.kind = Hypothesis::Kind::H2;
  }
  out.statistic = std::max(0.0, stat);
  out.dof = dof;
  out.p_value = chi_square_upper(out.statistic, dof);
  return out;
}

ConfidenceInterval confidence_interval(double estimate, double se, double level) {
  if (!(level > 0.0 && level < 1.0)) throw StructuralError("confidence level must lie in (0, 1)");
  const double z = normal_quantile(1.0 - (1.0 - level) / 2.0);
  ConfidenceInterval ci;
  ci.estimate = estimate;
  ci.se = se;
  ci.low = estimate - z * se;
  ci.high = estimate + z * se;
  ci.ratio = std::exp(estimate);
  ci.ratio_low = std::exp(ci.low);
  ci.ratio_high = std::exp(ci.high);
  return ci;
}

ConfidenceInterval confidence_interval(const FitResult& fit, std::size_t coordinate, double level) {
  const Vector est = fit.free_theta();
  const auto j = static_cast<Eigen::Index>(coordinate);
  if (j >= est.size() || fit.covariance_theta.rows() != est.size()) {
    throw StructuralError("confidence_interval: coordinate out of range or covariance missing");
  }
  return confidence_interval(est(j), std::sqrt(std::max(0.0, fit.covariance_theta(j, j))), level);
}

}  // namespace stlhr
