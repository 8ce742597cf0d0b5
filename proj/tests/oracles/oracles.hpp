#pragma once

// Reference computations used only by the tests. They share data types with
// the library but none of its numerical code.

#include "stlhr/types.hpp"

#include <vector>

namespace oracle {

using stlhr::Dataset;
using stlhr::SurvivalRecord;
using stlhr::Vector;

struct CoxFit {
  Vector beta;
  std::vector<double> times;
  std::vector<double> jumps;  // Breslow
  double partial_loglik = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Newton-Raphson on the Cox partial likelihood with Breslow ties.
CoxFit cox_newton(const Dataset& data, double tolerance = 1e-12, int max_iterations = 100);

/// Nonparametric log-likelihood written out term by term with plain
/// exponentials: F and S at each event time are recomputed from the jumps
/// strictly before it.
double direct_loglik(const Dataset& data, const Vector& beta, const Vector& gamma,
                     const std::vector<double>& times, const std::vector<double>& jumps);

/// Q(y, O) with the three terms written in the original exponentials. The
/// event term counts only for y < Y because F, S at Y are left limits and
/// do not involve the jump at Y itself.
double direct_q(double y, const SurvivalRecord& record, const Vector& beta, const Vector& gamma,
                const std::vector<double>& times, const std::vector<double>& jumps);

struct BruteForce {
  double beta = 0.0;
  double gamma = 0.0;
  std::vector<double> jumps;
  double loglik = 0.0;
  bool interior = false;  // maximizer away from the grid boundary
};

/// p = 1 only: grid over (beta, gamma) in [-2, 2]^2 with the jumps profiled
/// out by simplex search, then a joint simplex polish from the best cell.
BruteForce brute_force_npmle(const Dataset& data, double grid_step = 0.1);

/// Lambda(t | x) = int_0^t e^{(b+g)x} / (e^{bx}F(s) + e^{gx}S(s)) ds with
/// baseline Lambda(s) = s, by adaptive Gauss-Kronrod quadrature.
double quadrature_cumulative_hazard(double beta, double gamma, double x, double t);

/// Distinct event times with the number of events at each.
void event_table(const Dataset& data, std::vector<double>& times, std::vector<double>& deaths);

}  // namespace oracle
