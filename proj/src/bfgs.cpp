#include "stlhr/bfgs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stlhr::optim {
namespace {

struct LinePoint {
  double alpha;
  double f;
  double slope;  // directional derivative
  Vector g;
};

// Cubic interpolation minimizer on [lo, hi], safeguarded to the interior.
double interpolate(const LinePoint& a, const LinePoint& b) {
  const double d1 = a.slope + b.slope - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
  const double disc = d1 * d1 - a.slope * b.slope;
  double t;
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
    t = b.alpha - (b.alpha - a.alpha) * (b.slope + d2 - d1) / (b.slope - a.slope + 2.0 * d2);
  } else {
    t = 0.5 * (a.alpha + b.alpha);
  }
  const double lo = std::min(a.alpha, b.alpha);
  const double hi = std::max(a.alpha, b.alpha);
  const double margin = 0.1 * (hi - lo);
  if (!std::isfinite(t) || t < lo + margin || t > hi - margin) t = 0.5 * (lo + hi);
  return t;
}

}  // namespace

BfgsResult minimize_bfgs(const Objective& objective, Vector x0, const Vector& initial_inverse_diagonal,
                         const BfgsOptions& options) {
  const auto d = x0.size();
  BfgsResult res;
  res.x = std::move(x0);
  res.gradient.resize(d);
  res.value = objective(res.x, res.gradient);
  res.evaluations = 1;
  res.trace.push_back(res.value);

  Matrix H = Matrix::Identity(d, d);
  if (initial_inverse_diagonal.size() == d) H = initial_inverse_diagonal.asDiagonal();

  auto eval = [&](double alpha, const Vector& dir) {
    LinePoint pt{alpha, 0.0, 0.0, Vector(d)};
    const Vector x = res.x + alpha * dir;
    pt.f = objective(x, pt.g);
    ++res.evaluations;
    if (!std::isfinite(pt.f)) pt.f = std::numeric_limits<double>::infinity();
    pt.slope = pt.g.dot(dir);
    return pt;
  };

  int stalled = 0;
  for (res.iterations = 0; res.iterations < options.max_iterations; ++res.iterations) {
    if (res.gradient.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) {
      res.converged = true;
      res.message = "gradient tolerance reached";
      return res;
    }
    Vector dir = -H * res.gradient;
    double slope0 = dir.dot(res.gradient);
    if (!(slope0 < 0.0)) {
      H = Matrix::Identity(d, d);
      if (initial_inverse_diagonal.size() == d) H = initial_inverse_diagonal.asDiagonal();
      dir = -H * res.gradient;
      slope0 = dir.dot(res.gradient);
    }

    const LinePoint start{0.0, res.value, slope0, res.gradient};
    LinePoint prev = start;
    double alpha = 1.0;
    bool found = false;
    LinePoint accepted{};
    // Bracketing phase followed by zoom, as in Nocedal & Wright Alg. 3.5/3.6.
    for (int step = 0; step < options.max_line_search_steps && !found; ++step) {
      LinePoint cur = eval(alpha, dir);
      if (cur.f > start.f + options.c1 * alpha * slope0 || (step > 0 && cur.f >= prev.f)) {
        LinePoint lo = prev, hi = cur;
        for (int z = 0; z < options.max_line_search_steps; ++z) {
          const double a = interpolate(lo, hi);
          LinePoint mid = eval(a, dir);
          if (mid.f > start.f + options.c1 * a * slope0 || mid.f >= lo.f) {
            hi = mid;
          } else {
            if (std::abs(mid.slope) <= -options.c2 * slope0) {
              accepted = mid;
              found = true;
              break;
            }
            if (mid.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
            lo = mid;
          }
          if (std::abs(hi.alpha - lo.alpha) < 1e-16 * std::max(1.0, lo.alpha)) break;
        }
        if (!found && lo.alpha > 0.0 && lo.f < start.f) {
          accepted = lo;  // sufficient decrease holds; curvature may not
          found = true;
        }
        break;
      }
      if (std::abs(cur.slope) <= -options.c2 * slope0) {
        accepted = cur;
        found = true;
        break;
      }
      if (cur.slope >= 0.0) {
        LinePoint lo = cur, hi = prev;
        for (int z = 0; z < options.max_line_search_steps; ++z) {
          const double a = interpolate(lo, hi);
          LinePoint mid = eval(a, dir);
          if (mid.f > start.f + options.c1 * a * slope0 || mid.f >= lo.f) {
            hi = mid;
          } else {
            if (std::abs(mid.slope) <= -options.c2 * slope0) {
              accepted = mid;
              found = true;
              break;
            }
            if (mid.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
            lo = mid;
          }
          if (std::abs(hi.alpha - lo.alpha) < 1e-16 * std::max(1.0, lo.alpha)) break;
        }
        if (!found && lo.f < start.f) {
          accepted = lo;
          found = true;
        }
        break;
      }
      prev = cur;
      alpha *= 2.0;
    }

    if (!found || !(accepted.f <= start.f)) {
      res.message = "line search failed to find an acceptable step";
      return res;
    }

    const Vector s = accepted.alpha * dir;
    const Vector y = accepted.g - res.gradient;
    const double f_old = res.value;
    res.x += s;
    res.value = accepted.f;
    res.gradient = accepted.g;
    res.trace.push_back(res.value);

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (res.iterations == 0 && initial_inverse_diagonal.size() != d) {
        H *= sy / y.dot(y);
      }
      const double rho = 1.0 / sy;
      const Vector Hy = H * y;
      const double yHy = y.dot(Hy);
      // H+ = (I - rho s y')H(I - rho y s') + rho s s'
      H += ((1.0 + rho * yHy) * rho) * (s * s.transpose()) - rho * (Hy * s.transpose() + s * Hy.transpose());
    }

    if (res.gradient.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) {
      ++res.iterations;
      res.converged = true;
      res.message = "gradient tolerance reached";
      return res;
    }
    // A single tiny decrease is often a short line-search step; only a run of
    // them counts as a stall.
    stalled = std::abs(f_old - res.value) / std::max(1.0, std::abs(f_old)) < options.relative_tolerance ? stalled + 1 : 0;
    if (stalled >= options.stall_iterations) {
      ++res.iterations;
      res.message = "relative objective change below tolerance";
      return res;
    }
  }
  res.exhausted = true;
  res.message = "iteration limit reached";
  return res;
}

}  // namespace stlhr::optim
