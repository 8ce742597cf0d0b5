#include "helpers.hpp"
#include "stlhr/error.hpp"
#include "stlhr/inference.hpp"

#include <doctest.h>

using namespace stlhr;

namespace {

double round_to(double v, int digits) {
  const double s = std::pow(10.0, digits);
  return std::round(v * s) / s;
}

}  // namespace

TEST_CASE("confidence interval arithmetic of the reported real-data estimates") {
  const auto a = confidence_interval(1.76, 0.582, 0.95);
  CHECK(round_to(a.low, 2) == doctest::Approx(0.62));
  CHECK(round_to(a.high, 2) == doctest::Approx(2.90));
  CHECK(round_to(a.ratio, 2) == doctest::Approx(5.81));
  CHECK(round_to(a.ratio_low, 2) == doctest::Approx(1.86));
  // The reported upper ratio is exp of the rounded endpoint 2.90; from the
  // rounded inputs themselves it is 18.19, inside the input rounding error.
  CHECK(round_to(std::exp(round_to(a.high, 2)), 2) == doctest::Approx(18.17));
  CHECK(std::abs(a.ratio_high - 18.17) < a.ratio_high * (0.005 + 1.96 * 0.0005));

  const auto b = confidence_interval(-1.59, 0.509, 0.95);
  CHECK(round_to(b.low, 2) == doctest::Approx(-2.59));
  CHECK(round_to(b.high, 2) == doctest::Approx(-0.59));
  CHECK(round_to(b.ratio_low, 3) == doctest::Approx(0.075));
  CHECK(round_to(b.ratio_high, 3) == doctest::Approx(0.553));

  const auto z = confidence_interval(0.3, 0.0, 0.9);
  CHECK(z.low == 0.3);
  CHECK(z.high == 0.3);
  CHECK_THROWS_AS(confidence_interval(0.0, 1.0, 1.0), StructuralError);
}

TEST_CASE("distribution functions") {
  CHECK(std::abs(normal_quantile(0.975) - 1.959963984540054) < 1e-12);
  CHECK(std::abs(normal_quantile(0.5)) < 1e-15);
  CHECK(std::abs(normal_quantile(1e-10) + 6.361340902404056) < 1e-10);
  CHECK(std::abs(chi_square_upper(3.841458820694124, 1) - 0.05) < 1e-12);
  CHECK(std::abs(chi_square_upper(5.991464547107979, 2) - 0.05) < 1e-12);
  CHECK(chi_square_upper(0.0, 3) == 1.0);
  double prev = 1.0;
  for (double s = 0.1; s < 40.0; s += 0.1) {
    const double p = chi_square_upper(s, 2);
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("Wald tests on a fitted model") {
  const Dataset d = testing::scenario_dataset("a", 200, 5).centered();
  const FitResult full = fit(d, Constraint::none());
  REQUIRE(full.converged);
  const FitResult ph = fit(d, Constraint::proportional_hazards());
  REQUIRE(ph.converged);

  for (auto kind : {Hypothesis::Kind::H1, Hypothesis::Kind::H2, Hypothesis::Kind::H4}) {
    const auto r = wald_test(full, {kind, {0}});
    CHECK(r.dof == 1);
    CHECK(r.statistic >= 0.0);
    CHECK(r.p_value == doctest::Approx(chi_square_upper(r.statistic, 1)));
  }
  const auto h1 = wald_test(full, {Hypothesis::Kind::H1, {0}});
  CHECK(h1.statistic == doctest::Approx(std::pow(full.theta_hat.beta(0), 2) / full.covariance_theta(0, 0)));
  CHECK(wald_test(full, {Hypothesis::Kind::H3, {0}}).dof == 2);
  CHECK(wald_test(ph, {Hypothesis::Kind::H5, {0}}).dof == 1);
  CHECK_THROWS_AS(wald_test(ph, {Hypothesis::Kind::H1, {0}}), StructuralError);
  CHECK_THROWS_AS(wald_test(full, {Hypothesis::Kind::H5, {0}}), StructuralError);
  CHECK_THROWS_AS(wald_test(full, {Hypothesis::Kind::H1, {1}}), StructuralError);

  // at the null value: statistic 0, p = 1
  FitResult at_null = full;
  at_null.theta_hat.gamma = at_null.theta_hat.beta;
  const auto r0 = wald_test(at_null, {Hypothesis::Kind::H4, {0}});
  CHECK(r0.statistic == 0.0);
  CHECK(r0.p_value == 1.0);

  // swapping the roles of beta and gamma leaves H4 unchanged
  FitResult swapped = full;
  std::swap(swapped.theta_hat.beta, swapped.theta_hat.gamma);
  Matrix P(2, 2);
  P << 0, 1, 1, 0;
  swapped.covariance_theta = P * full.covariance_theta * P;
  CHECK(wald_test(swapped, {Hypothesis::Kind::H4, {0}}).statistic ==
        doctest::Approx(wald_test(full, {Hypothesis::Kind::H4, {0}}).statistic).epsilon(1e-14));
}

TEST_CASE("joint Wald tests over several coordinates") {
  const Dataset d = testing::two_covariate_dataset(250, 3).centered();
  const FitResult full = fit(d, Constraint::none());
  REQUIRE(full.converged);
  const auto joint = wald_test(full, {Hypothesis::Kind::H4, {0, 1}});
  CHECK(joint.dof == 2);
  CHECK(wald_test(full, {Hypothesis::Kind::H3, {0, 1}}).dof == 4);
  const auto single = wald_test(full, {Hypothesis::Kind::H4, {1}});
  CHECK(joint.statistic >= single.statistic - 1e-12);
}

TEST_CASE("likelihood-ratio tests") {
  const Dataset d = testing::scenario_dataset("a", 200, 8).centered();
  const FitResult full = fit(d, Constraint::none());
  const FitResult ph = fit(d, Constraint::proportional_hazards());
  const FitResult po = fit(d, Constraint::proportional_odds());
  const auto same = likelihood_ratio_test(full, full, 1);
  CHECK(same.statistic == 0.0);
  CHECK(same.p_value == 1.0);
  const auto h4 = likelihood_ratio_test(full, ph, 1);
  CHECK(h4.statistic >= 0.0);
  CHECK(h4.hypothesis.kind == Hypothesis::Kind::H4);
  CHECK(likelihood_ratio_test(full, po, 1).hypothesis.kind == Hypothesis::Kind::H2);
  CHECK_THROWS_AS(likelihood_ratio_test(ph, full, 1), ConvergenceError);
}

TEST_CASE("test statistics are invariant under covariate rescaling") {
  const Dataset d = testing::scenario_dataset("c", 200, 13);
  const FitResult a = fit(d, Constraint::none());
  const FitResult b = fit(d.scaled(0, 3.0), Constraint::none());
  for (auto kind : {Hypothesis::Kind::H1, Hypothesis::Kind::H2, Hypothesis::Kind::H3, Hypothesis::Kind::H4}) {
    CHECK(std::abs(wald_test(a, {kind, {0}}).statistic - wald_test(b, {kind, {0}}).statistic) < 1e-6);
  }
}

TEST_CASE("confidence interval from a fit") {
  const Dataset d = testing::scenario_dataset("b", 150, 3);
  const FitResult f = fit(d, Constraint::none());
  const auto ci = confidence_interval(f, 1, 0.95);
  CHECK(ci.estimate == f.theta_hat.gamma(0));
  CHECK(ci.se == doctest::Approx(std::sqrt(f.covariance_theta(1, 1))));
  CHECK(ci.low < ci.estimate);
  CHECK_THROWS_AS(confidence_interval(f, 2, 0.95), StructuralError);
}

TEST_CASE("hypothesis names round-trip") {
  for (const char* n : {"H1", "H2", "H3", "H4", "H5"}) CHECK(Hypothesis{Hypothesis::parse_kind(n), {0}}.name() == n);
  CHECK_THROWS_AS(Hypothesis::parse_kind("H6"), StructuralError);
}
