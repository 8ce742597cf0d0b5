#pragma once

#include "stlhr/kernel.hpp"

#include <algorithm>
#include <cmath>

namespace stlhr::detail {

/// Jump sizes plus left-limit survival S(t_k-) and F(t_k-) at each jump.
struct BaselineGrid {
  std::vector<double> jump;
  std::vector<double> surv;
  std::vector<double> cdf;
};

inline BaselineGrid baseline_grid(std::span<const double> log_jumps) {
  BaselineGrid g;
  const auto m = log_jumps.size();
  g.jump.resize(m);
  g.surv.resize(m);
  g.cdf.resize(m);
  double cum = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    g.jump[k] = std::exp(log_jumps[k]);
    g.surv[k] = std::exp(-cum);
    g.cdf[k] = -std::expm1(-cum);
    cum += g.jump[k];
  }
  return g;
}

inline double clamp_predictor(double eta, std::size_t& clamped) {
  if (eta > kPredictorClamp) {
    ++clamped;
    return kPredictorClamp;
  }
  if (eta < -kPredictorClamp) {
    ++clamped;
    return -kPredictorClamp;
  }
  return eta;
}

}  // namespace stlhr::detail
