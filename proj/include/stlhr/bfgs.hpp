#pragma once

#include "stlhr/types.hpp"

#include <functional>
#include <string>
#include <vector>

namespace stlhr::optim {

/// Objective returning f(x) and writing its gradient. Minimized.
using Objective = std::function<double(const Vector& x, Vector& gradient)>;

struct BfgsOptions {
  double gradient_tolerance = 1e-6;   // on the infinity norm
  double relative_tolerance = 1e-10;  // on |f_k - f_{k+1}| / max(1, |f_k|)
  int stall_iterations = 5;           // consecutive small changes before giving up
  int max_iterations = 500;
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_line_search_steps = 40;
};

struct BfgsResult {
  Vector x;
  double value = 0.0;
  Vector gradient;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  bool exhausted = false;  // stopped at max_iterations
  std::string message;
  std::vector<double> trace;  // accepted objective values, starting with f(x0)
};

/// Quasi-Newton minimization with the standard BFGS inverse-Hessian update
/// and a strong-Wolfe line search. `initial_inverse_diagonal` seeds H_0;
/// pass an empty vector for the identity.
BfgsResult minimize_bfgs(const Objective& objective, Vector x0, const Vector& initial_inverse_diagonal,
                         const BfgsOptions& options = {});

}  // namespace stlhr::optim
