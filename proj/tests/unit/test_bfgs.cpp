#include "stlhr/bfgs.hpp"

#include <doctest.h>

using namespace stlhr;
using namespace stlhr::optim;

TEST_CASE("BFGS minimizes a convex quadratic") {
  Matrix A(3, 3);
  A << 4, 1, 0, 1, 3, 0.5, 0, 0.5, 2;
  Vector b(3);
  b << 1, -2, 0.5;
  const Objective f = [&](const Vector& x, Vector& g) {
    g = A * x - b;
    return 0.5 * x.dot(A * x) - b.dot(x);
  };
  const auto r = minimize_bfgs(f, Vector::Zero(3), Vector());
  CHECK(r.converged);
  CHECK((r.x - A.ldlt().solve(b)).norm() < 1e-6);
}

TEST_CASE("BFGS solves Rosenbrock with a monotone trace") {
  const Objective f = [](const Vector& x, Vector& g) {
    const double a = 1.0 - x(0);
    const double b = x(1) - x(0) * x(0);
    g.resize(2);
    g(0) = -2.0 * a - 400.0 * x(0) * b;
    g(1) = 200.0 * b;
    return a * a + 100.0 * b * b;
  };
  Vector x0(2);
  x0 << -1.2, 1.0;
  const auto r = minimize_bfgs(f, x0, Vector());
  CHECK(r.converged);
  CHECK(r.x(0) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(r.x(1) == doctest::Approx(1.0).epsilon(1e-5));
  for (std::size_t k = 1; k < r.trace.size(); ++k) CHECK(r.trace[k] <= r.trace[k - 1]);
}

TEST_CASE("BFGS reports non-convergence within the iteration budget") {
  const Objective f = [](const Vector& x, Vector& g) {
    const double a = 1.0 - x(0);
    const double b = x(1) - x(0) * x(0);
    g.resize(2);
    g(0) = -2.0 * a - 400.0 * x(0) * b;
    g(1) = 200.0 * b;
    return a * a + 100.0 * b * b;
  };
  Vector x0(2);
  x0 << -1.2, 1.0;
  BfgsOptions opts;
  opts.max_iterations = 3;
  const auto r = minimize_bfgs(f, x0, Vector(), opts);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations <= 3);
  CHECK_FALSE(r.message.empty());
}
