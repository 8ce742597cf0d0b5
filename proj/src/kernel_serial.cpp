#include "stlhr/kernel.hpp"

#include "kernel_common.hpp"
#include "stlhr/error.hpp"

#include <algorithm>
#include <cmath>

namespace stlhr {

EvalLayout build_layout(const Dataset& data) {
  EvalLayout L;
  const auto ev = data.event_times();
  L.n = data.size();
  L.p = data.dimension();
  L.m = ev.size();
  L.times = ev.times;
  L.deaths = ev.deaths;
  L.at_risk_end.resize(L.n);
  L.event_index.resize(L.n);
  L.segment_offset.resize(L.n + 1);

  std::size_t pieces = 0;
  for (const auto& r : data.records()) pieces += r.covariates.pieces();
  L.values.resize(static_cast<Eigen::Index>(L.p), static_cast<Eigen::Index>(pieces));

  std::uint32_t column = 0;
  const auto& T = L.times;
  for (std::size_t i = 0; i < L.n; ++i) {
    const auto& rec = data.records()[i];
    const auto K = static_cast<std::uint32_t>(std::upper_bound(T.begin(), T.end(), rec.time) - T.begin());
    L.at_risk_end[i] = K;
    if (rec.event) {
      L.event_index[i] = static_cast<std::int32_t>(K) - 1;  // rec.time is itself an event time
    } else {
      L.event_index[i] = -1;
    }
    L.segment_offset[i] = static_cast<std::uint32_t>(L.segments.size());
    const auto bp = rec.covariates.breakpoints();
    const auto& vals = rec.covariates.values();
    for (std::size_t j = 0; j < bp.size(); ++j) {
      const auto kb = static_cast<std::uint32_t>(std::lower_bound(T.begin(), T.end(), bp[j]) - T.begin());
      auto ke = j + 1 < bp.size()
                    ? static_cast<std::uint32_t>(std::lower_bound(T.begin(), T.end(), bp[j + 1]) - T.begin())
                    : K;
      ke = std::min(ke, K);
      L.values.col(column) = vals[j];
      if (kb < ke) L.segments.push_back({kb, ke, column});
      ++column;
    }
  }
  L.segment_offset[L.n] = static_cast<std::uint32_t>(L.segments.size());
  return L;
}

Vector stack_parameters(const Theta& theta, const BaselineHazard& lambda) {
  const auto p = static_cast<Eigen::Index>(theta.dimension());
  Vector out(2 * p + static_cast<Eigen::Index>(lambda.size()));
  out.head(p) = theta.beta;
  out.segment(p, p) = theta.gamma;
  const auto lj = lambda.log_jumps();
  for (std::size_t k = 0; k < lj.size(); ++k) out(2 * p + static_cast<Eigen::Index>(k)) = lj[k];
  return out;
}

Evaluation evaluate_serial(const EvalLayout& L, std::span<const double> params, bool with_gradient) {
  if (params.size() != L.parameter_count()) throw StructuralError("parameter vector has wrong length");
  const auto p = static_cast<Eigen::Index>(L.p);
  const Eigen::Map<const Vector> beta(params.data(), p);
  const Eigen::Map<const Vector> gamma(params.data() + p, p);
  const auto log_jump = params.subspan(2 * L.p);
  const auto base = detail::baseline_grid(log_jump);

  Evaluation out;
  std::vector<double> risk_sum, cum_term, event_term;
  Vector g_beta, g_gamma;
  if (with_gradient) {
    risk_sum.assign(L.m, 0.0);
    cum_term.assign(L.m, 0.0);
    event_term.assign(L.m, 0.0);
    g_beta = Vector::Zero(p);
    g_gamma = Vector::Zero(p);
  }

  double ll = 0.0;
  for (std::size_t i = 0; i < L.n; ++i) {
    const auto ev = L.event_index[i];
    for (auto s = L.segment_offset[i]; s < L.segment_offset[i + 1]; ++s) {
      const auto& seg = L.segments[s];
      const auto x = L.values.col(seg.value);
      const double eta_a = detail::clamp_predictor(beta.dot(x), out.clamped);
      const double eta_b = detail::clamp_predictor(gamma.dot(x), out.clamped);
      const double ia = std::exp(-eta_a);
      const double ib = std::exp(-eta_b);
      double w_short = 0.0;
      double w_long = 0.0;
      for (auto k = seg.k_begin; k < seg.k_end; ++k) {
        const double S = base.surv[k];
        const double F = base.cdf[k];
        const double r = 1.0 / (F * ib + S * ia);
        const double rl = r * base.jump[k];
        ll -= rl;
        if (with_gradient) {
          risk_sum[k] += r;
          w_short += rl * S * ia * r;
          w_long += rl * F * ib * r;
          cum_term[k] += rl * S * (ib - ia) * r;
        }
      }
      if (ev >= 0 && static_cast<std::uint32_t>(ev) >= seg.k_begin && static_cast<std::uint32_t>(ev) < seg.k_end) {
        const auto k = static_cast<std::size_t>(ev);
        const double S = base.surv[k];
        const double F = base.cdf[k];
        const double D = F * ib + S * ia;
        ll += log_jump[k] - std::log(D);
        if (with_gradient) {
          w_short -= S * ia / D;
          w_long -= F * ib / D;
          event_term[k] += S * (ib - ia) / D;
        }
      }
      if (with_gradient) {
        g_beta.noalias() -= w_short * x;
        g_gamma.noalias() -= w_long * x;
      }
    }
  }
  out.loglik = ll;
  if (!std::isfinite(ll)) throw EvaluationError("log-likelihood is not finite", ll);

  if (with_gradient) {
    out.gradient.resize(static_cast<Eigen::Index>(L.parameter_count()));
    out.gradient.head(p) = g_beta;
    out.gradient.segment(p, p) = g_gamma;
    double suffix = 0.0;
    for (std::size_t j = L.m; j-- > 0;) {
      out.gradient(2 * p + static_cast<Eigen::Index>(j)) = L.deaths[j] - base.jump[j] * (risk_sum[j] + suffix);
      suffix += event_term[j] - cum_term[j];
    }
  }
  return out;
}

}  // namespace stlhr
