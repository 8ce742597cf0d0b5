#pragma once

// Likelihood/gradient kernel over the stacked parameter vector
// (beta[p], gamma[p], log_jump[m]). Two implementations are kept:
// evaluate_serial is the reference used in tests; evaluate_parallel splits
// subjects into fixed-size blocks whose partial sums are reduced in block
// order, so its result does not depend on the thread count.

#include "stlhr/types.hpp"

#include <cstdint>
#include <span>

namespace stlhr {

/// Linear predictors are clamped to [-kPredictorClamp, kPredictorClamp].
inline constexpr double kPredictorClamp = 500.0;

/// Precomputed index structure for one dataset.
struct EvalLayout {
  struct Segment {
    std::uint32_t k_begin;  // first event index covered
    std::uint32_t k_end;    // one past the last event index covered
    std::uint32_t value;    // column of `values`
  };

  std::size_t n = 0;
  std::size_t p = 0;
  std::size_t m = 0;
  std::vector<double> times;
  std::vector<double> deaths;
  std::vector<std::uint32_t> at_risk_end;  // K_i: number of event times <= Y_i
  std::vector<std::int32_t> event_index;   // index of Y_i among event times, -1 if censored
  std::vector<std::uint32_t> segment_offset;  // n + 1 offsets into segments
  std::vector<Segment> segments;
  Matrix values;  // p x (number of distinct covariate pieces)

  std::size_t parameter_count() const noexcept { return 2 * p + m; }
};

EvalLayout build_layout(const Dataset& data);

struct Evaluation {
  double loglik = 0.0;
  Vector gradient;            // empty unless requested
  std::size_t clamped = 0;    // linear predictors that hit the clamp
};

Evaluation evaluate_serial(const EvalLayout& layout, std::span<const double> params, bool with_gradient);
Evaluation evaluate_parallel(const EvalLayout& layout, std::span<const double> params, bool with_gradient);

enum class Backend { serial, parallel };

inline Evaluation evaluate(Backend backend, const EvalLayout& layout, std::span<const double> params,
                           bool with_gradient) {
  return backend == Backend::parallel ? evaluate_parallel(layout, params, with_gradient)
                                      : evaluate_serial(layout, params, with_gradient);
}

inline std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

inline Evaluation evaluate(Backend backend, const EvalLayout& layout, const Vector& params, bool with_gradient) {
  return evaluate(backend, layout, as_span(params), with_gradient);
}

/// Stack (theta, log jumps) into the kernel parameter layout.
Vector stack_parameters(const Theta& theta, const BaselineHazard& lambda);

}  // namespace stlhr
