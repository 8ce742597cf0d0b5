#include "helpers.hpp"
#include "stlhr/error.hpp"

#include <doctest.h>

using namespace stlhr;
using testing::record;

TEST_CASE("covariate path evaluates right-continuously") {
  const CovariatePath path({0.0, 1.0, 2.5}, {Vector::Constant(1, 3.0), Vector::Constant(1, -1.0), Vector::Constant(1, 4.0)});
  CHECK(path.at(0.0)(0) == 3.0);
  CHECK(path.at(0.999)(0) == 3.0);
  CHECK(path.at(1.0)(0) == -1.0);
  CHECK(path.at(2.5)(0) == 4.0);
  CHECK(path.at(100.0)(0) == 4.0);
  CHECK_FALSE(path.time_invariant());
  CHECK(path.pieces() == 3);
}

TEST_CASE("covariate path rejects malformed breakpoints") {
  const Vector v = Vector::Zero(2);
  CHECK_THROWS_AS(CovariatePath({0.5}, {v}), StructuralError);
  CHECK_THROWS_AS(CovariatePath({0.0, 1.0, 1.0}, {v, v, v}), StructuralError);
  CHECK_THROWS_AS(CovariatePath({0.0, 1.0}, {v}), StructuralError);
  CHECK_THROWS_AS(CovariatePath({0.0, 1.0}, {v, Vector::Zero(3)}), StructuralError);
  CHECK_THROWS_AS(CovariatePath::constant(Vector()), StructuralError);
}

TEST_CASE("dataset validation") {
  CHECK_THROWS_AS(Dataset({record(1.0, false, 0.0), record(2.0, false, 1.0)}), StructuralError);
  CHECK_THROWS_AS(Dataset({record(-1.0, true, 0.0)}), StructuralError);
  CHECK_THROWS_AS(Dataset({record(1.0, true, 0.0)}, 0.5), StructuralError);
  std::vector<SurvivalRecord> mixed{record(1.0, true, 0.0),
                                    {2.0, false, CovariatePath::constant(Vector::Zero(2))}};
  CHECK_THROWS_AS(Dataset{mixed}, StructuralError);

  const Dataset d({record(1.0, true, 0.0), record(3.0, false, 1.0)});
  CHECK(d.tau() == 3.0);
  CHECK(Dataset({record(1.0, true, 0.0)}, 5.0).tau() == 5.0);
}

TEST_CASE("event times aggregate ties") {
  const Dataset d = testing::small_dataset();
  const auto ev = d.event_times();
  REQUIRE(ev.size() == 3);
  CHECK(ev.times == std::vector<double>{0.4, 1.3, 2.5});
  CHECK(ev.deaths == std::vector<double>{1.0, 2.0, 1.0});
}

TEST_CASE("centering subtracts time-0 means and records offsets") {
  const Dataset d({record(1.0, true, 1.0), record(2.0, true, 3.0), record(3.0, false, 5.0)});
  const Dataset c = d.centered();
  CHECK(c.centering_offsets()(0) == doctest::Approx(3.0));
  CHECK(c.records()[0].covariates.at(0.0)(0) == doctest::Approx(-2.0));
  CHECK(c.records()[2].covariates.at(0.0)(0) == doctest::Approx(2.0));
  CHECK(d.centering_offsets()(0) == 0.0);
}

TEST_CASE("baseline hazard step function") {
  const BaselineHazard h({1.0, 2.0, 4.0}, {0.5, 0.25, 1.0});
  CHECK(h.cumulative(0.0) == 0.0);
  CHECK(h.cumulative(1.0) == 0.5);
  CHECK(h.cumulative_left(1.0) == 0.0);
  CHECK(h.cumulative(3.0) == 0.75);
  CHECK(h.cumulative_left(4.0) == 0.75);
  CHECK(h.survival_left(4.0) == doctest::Approx(std::exp(-0.75)));
  CHECK(h.survival_left(0.5) == 1.0);
  CHECK_THROWS_AS(BaselineHazard({1.0, 1.0}, {1.0, 1.0}), StructuralError);
  CHECK_THROWS_AS(BaselineHazard({1.0}, {0.0}), StructuralError);
  CHECK_THROWS_AS(BaselineHazard({1.0, 2.0}, {1.0}), StructuralError);
}

TEST_CASE("nelson-aalen jumps d_k / n_k with censored-at-event records at risk") {
  const Dataset d({record(1.0, true, 0.0), record(1.0, false, 0.0), record(2.0, true, 0.0), record(2.0, true, 0.0),
                   record(3.0, false, 0.0)});
  const auto na = BaselineHazard::nelson_aalen(d);
  REQUIRE(na.size() == 2);
  CHECK(na.jumps()[0] == 1.0 / 5.0);
  CHECK(na.jumps()[1] == 2.0 / 3.0);
}

TEST_CASE("theta validation") {
  CHECK_NOTHROW(Theta::zeros(2).validate(2));
  CHECK_THROWS_AS(Theta::zeros(2).validate(1), StructuralError);
  Theta t = Theta::scalar(std::nan(""), 0.0);
  CHECK_THROWS_AS(t.validate(1), StructuralError);
}
