#include "helpers.hpp"
#include "stlhr/diagnostics.hpp"
#include "stlhr/error.hpp"
#include "stlhr/model.hpp"

#include <doctest.h>

using namespace stlhr;
using testing::record;

TEST_CASE("Kaplan-Meier by hand") {
  const std::vector<std::pair<double, bool>> two{{1.0, true}, {2.0, true}};
  const auto a = kaplan_meier(two);
  CHECK(a.at(0.5) == 1.0);
  CHECK(a.at(1.0) == 0.5);
  CHECK(a.at(1.5) == 0.5);
  CHECK(a.at(2.0) == 0.0);

  const std::vector<std::pair<double, bool>> cens{{1.0, false}, {3.0, false}};
  const auto b = kaplan_meier(cens);
  CHECK(b.values == std::vector<double>{1.0});
  CHECK(b.at(10.0) == 1.0);

  const std::vector<std::pair<double, bool>> four{{1.0, false}, {2.0, true}, {3.0, false}, {4.0, true}};
  const auto c = kaplan_meier(four);
  CHECK(c.times == std::vector<double>{0.0, 2.0, 4.0});
  REQUIRE(c.values.size() == 3);
  CHECK(c.values[0] == 1.0);
  CHECK(c.values[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(c.values[2] == 0.0);
  CHECK_THROWS_AS(kaplan_meier(std::vector<std::pair<double, bool>>{}), StructuralError);
}

TEST_CASE("Nelson-Aalen survival dominates Kaplan-Meier and the gap shrinks with n") {
  double prev_gap = 1.0;
  for (std::size_t n : {100, 1000, 5000}) {
    const Dataset d = testing::scenario_dataset("a", n, 6);
    const auto km = kaplan_meier(d);
    const auto na = BaselineHazard::nelson_aalen(d);
    double gap = 0.0;
    for (double t : na.times()) {
      const double s_na = std::exp(-na.cumulative(t));
      CHECK(s_na >= km.at(t) - 1e-15);
      gap = std::max(gap, s_na - km.at(t));
    }
    CHECK(gap <= prev_gap);
    prev_gap = gap;
  }
  CHECK(prev_gap < 0.01);
}

TEST_CASE("model-fitted curves") {
  const Dataset d = testing::scenario_dataset("a", 200, 1);
  const FitResult f = fit(d, Constraint::none());
  REQUIRE(f.converged);
  const std::vector<double> grid{0.0, 0.3, 0.8, 1.5};
  const std::vector<CovariatePath> one{d.records()[3].covariates};
  const auto c1 = model_fitted_curve(f, one, grid);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    CHECK(c1.values[g] == predicted_survival(f.theta_hat, f.lambda_hat, one[0], grid[g]));
  }
  FitResult zero = f;
  zero.theta_hat = Theta::zeros(1);
  std::vector<CovariatePath> all;
  for (const auto& r : d.records()) all.push_back(r.covariates);
  const auto c0 = model_fitted_curve(zero, all, grid);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    CHECK(c0.values[g] == doctest::Approx(std::exp(-f.lambda_hat.cumulative(grid[g]))).epsilon(1e-14));
  }
  CHECK_THROWS_AS(model_fitted_curve(f, std::vector<CovariatePath>{}, grid), StructuralError);
}

TEST_CASE("group-wise fitted curves track group Kaplan-Meier at large n") {
  ScenarioSpec spec = ScenarioSpec::named("a");
  spec.n = 2000;
  spec.covariate_law = CovariateLaw::binary;
  spec.seed = 77;
  const Dataset d = generate_dataset(spec, 0);
  const FitResult f = fit(d, Constraint::none(), {});
  REQUIRE(f.converged);
  for (double level : {-0.5, 0.5}) {
    std::vector<CovariatePath> paths;
    std::vector<std::pair<double, bool>> km_in;
    for (const auto& r : d.records()) {
      if (r.covariates.at(0.0)(0) != level) continue;
      paths.push_back(r.covariates);
      km_in.emplace_back(r.time, r.event);
    }
    const auto km = kaplan_meier(km_in);
    std::vector<double> grid(f.lambda_hat.times().begin(), f.lambda_hat.times().end());
    const auto fitted = model_fitted_curve(f, paths, grid);
    double gap = 0.0;
    for (std::size_t g = 0; g < grid.size(); ++g) gap = std::max(gap, std::abs(fitted.values[g] - km.at(grid[g])));
    MESSAGE("group " << level << " sup gap " << gap);
    CHECK(gap < 0.05);
  }
}

TEST_CASE("martingale residuals") {
  const Dataset d = testing::scenario_dataset("b", 100, 3);
  const FitResult f = fit(d, Constraint::none());
  CHECK(martingale_residuals(f, d, 0.0).lpNorm<Eigen::Infinity>() == 0.0);
  const auto na = BaselineHazard::nelson_aalen(d);
  const double t = 0.6;
  const Vector m = martingale_residuals(Theta::zeros(1), na, d, t);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& r = d.records()[i];
    if (!r.event && r.time > t) CHECK(m(static_cast<Eigen::Index>(i)) == doctest::Approx(-na.cumulative(t)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(martingale_residuals(f, d, -1.0), StructuralError);
}

TEST_CASE("score process") {
  const Dataset d = testing::mixed_dataset(150, 4);
  const FitResult f = fit(d, Constraint::none());
  REQUIRE(f.converged);
  const std::vector<double> grid{0.0, f.lambda_hat.times()[0] * 0.5, 1.0, d.tau()};
  const auto U = score_process(f, d, grid);
  CHECK(U[0].lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(U[1].lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(U[3].lpNorm<Eigen::Infinity>() < 1e-6);
  const Vector s = score(f.theta_hat, f.lambda_hat, d);
  CHECK((U[3] - s.head(2)).lpNorm<Eigen::Infinity>() < 1e-10);

  // beta = gamma: the two blocks add up to the Cox score process
  const Theta ph = Theta::scalar(0.4, 0.4);
  const auto na = BaselineHazard::nelson_aalen(d);
  const auto V = score_process(ph, na, d, grid);
  const double t = 1.0;
  double cox = 0.0;
  const auto times = na.times();
  for (const auto& r : d.records()) {
    for (std::size_t k = 0; k < times.size() && times[k] <= std::min(t, r.time); ++k) {
      const double x = r.covariates.at(times[k])(0);
      const double dN = (r.event && r.time == times[k]) ? 1.0 : 0.0;
      cox += x * (dN - std::exp(0.4 * x) * na.jumps()[k]);
    }
  }
  CHECK(V[2](0) + V[2](1) == doctest::Approx(cox).epsilon(1e-12));
}

TEST_CASE("K_j statistic properties") {
  const Dataset d = testing::scenario_dataset("a", 150, 21);
  const FitResult f = fit(d, Constraint::none());
  REQUIRE(f.converged);
  KjOptions opts;
  opts.resamples = 200;
  const auto r = kj_statistic(f, d, 0, opts);
  CHECK(r.statistic >= 0.0);
  CHECK(r.p_value >= 0.0);
  CHECK(r.p_value <= 1.0);
  CHECK(r.grid_points > 0);
  CHECK(r.resamples == 200);
  CHECK(kj_statistic(f, d, 0, opts).p_value == r.p_value);

  const Dataset scaled = d.scaled(0, 4.0);
  const FitResult g = fit(scaled, Constraint::none());
  const auto rs = kj_statistic(g, scaled, 0, opts);
  CHECK(rs.statistic == doctest::Approx(r.statistic).epsilon(1e-4));

  CHECK_THROWS_AS(kj_statistic(f, d, 1, opts), StructuralError);
  const FitResult ph = fit(d, Constraint::proportional_hazards());
  CHECK_THROWS_AS(kj_statistic(ph, d, 0, opts), StructuralError);
}

TEST_CASE("K_j with one event time in the window equals the single quadratic form") {
  const Dataset d = testing::scenario_dataset("a", 120, 5);
  const FitResult f = fit(d, Constraint::none());
  REQUIRE(f.converged);
  const auto times = f.lambda_hat.times();
  const double tau = d.tau();
  double closest = times[0];
  for (double t : times) {
    if (std::abs(t - 0.5 * tau) < std::abs(closest - 0.5 * tau)) closest = t;
  }
  KjOptions opts;
  opts.resamples = 50;
  const auto wide = kj_statistic(f, d, 0, opts);
  CHECK(wide.statistic == *std::max_element(wide.forms.begin(), wide.forms.end()));
  opts.delta = std::min(closest, tau - closest);
  const auto r = kj_statistic(f, d, 0, opts);
  REQUIRE(r.grid_points == 1);
  REQUIRE(r.forms.size() == 1);
  CHECK(r.form_times[0] == closest);
  CHECK(r.statistic == r.forms[0]);
  // the same time point evaluated inside the wide window gives the same form
  const auto it = std::find(wide.form_times.begin(), wide.form_times.end(), closest);
  REQUIRE(it != wide.form_times.end());
  CHECK(r.forms[0] == doctest::Approx(wide.forms[static_cast<std::size_t>(it - wide.form_times.begin())]));
}
