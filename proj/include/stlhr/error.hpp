#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace stlhr {

/// Input violates a structural requirement (shape, ordering, missing event time).
class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A model quantity could not be evaluated to a finite value.
class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(const std::string& what, double linear_predictor)
      : std::runtime_error(what), linear_predictor_(linear_predictor) {}
  double linear_predictor() const noexcept { return linear_predictor_; }

 private:
  double linear_predictor_;
};

/// Matrix that had to be inverted is (numerically) singular.
class SingularMatrixError : public std::runtime_error {
 public:
  SingularMatrixError(const std::string& what, double smallest_eigenvalue,
                      std::vector<std::size_t> dominant_coordinates)
      : std::runtime_error(what),
        smallest_eigenvalue_(smallest_eigenvalue),
        dominant_coordinates_(std::move(dominant_coordinates)) {}
  double smallest_eigenvalue() const noexcept { return smallest_eigenvalue_; }
  const std::vector<std::size_t>& dominant_coordinates() const noexcept {
    return dominant_coordinates_;
  }

 private:
  double smallest_eigenvalue_;
  std::vector<std::size_t> dominant_coordinates_;
};

/// An iterative computation did not reach its stopping rule.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file contents.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace stlhr
