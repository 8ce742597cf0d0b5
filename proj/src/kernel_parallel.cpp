#include "stlhr/kernel.hpp"

#include "kernel_common.hpp"
#include "stlhr/error.hpp"

#include <omp.h>

#include <cmath>

namespace stlhr {
namespace {

constexpr std::size_t kBlockSize = 64;

struct BlockPartial {
  double loglik = 0.0;
  std::size_t clamped = 0;
  Vector g_beta, g_gamma;
  std::vector<double> risk_sum, cum_term, event_term;
};

void accumulate_block(const EvalLayout& L, const Eigen::Map<const Vector>& beta,
                      const Eigen::Map<const Vector>& gamma, std::span<const double> log_jump,
                      const detail::BaselineGrid& base, std::size_t first, std::size_t last,
                      bool with_gradient, BlockPartial& acc) {
  const auto p = static_cast<Eigen::Index>(L.p);
  if (with_gradient) {
    acc.g_beta = Vector::Zero(p);
    acc.g_gamma = Vector::Zero(p);
    acc.risk_sum.assign(L.m, 0.0);
    acc.cum_term.assign(L.m, 0.0);
    acc.event_term.assign(L.m, 0.0);
  }
  for (std::size_t i = first; i < last; ++i) {
    const auto ev = L.event_index[i];
    for (auto s = L.segment_offset[i]; s < L.segment_offset[i + 1]; ++s) {
      const auto& seg = L.segments[s];
      const auto x = L.values.col(seg.value);
      const double ia = std::exp(-detail::clamp_predictor(beta.dot(x), acc.clamped));
      const double ib = std::exp(-detail::clamp_predictor(gamma.dot(x), acc.clamped));
      double w_short = 0.0, w_long = 0.0, cum = 0.0;
      // Locals and raw pointers keep the accumulators in registers.
      const double* surv = base.surv.data();
      const double* cdf = base.cdf.data();
      const double* jump = base.jump.data();
      if (with_gradient) {
        double* risk = acc.risk_sum.data();
        double* cterm = acc.cum_term.data();
        for (auto k = seg.k_begin; k < seg.k_end; ++k) {
          const double S = surv[k], F = cdf[k];
          const double r = 1.0 / (F * ib + S * ia);
          const double rl = r * jump[k];
          cum += rl;
          risk[k] += r;
          w_short += rl * S * ia * r;
          w_long += rl * F * ib * r;
          cterm[k] += rl * S * (ib - ia) * r;
        }
      } else {
        for (auto k = seg.k_begin; k < seg.k_end; ++k) cum += jump[k] / (cdf[k] * ib + surv[k] * ia);
      }
      acc.loglik -= cum;
      if (ev >= 0 && static_cast<std::uint32_t>(ev) >= seg.k_begin && static_cast<std::uint32_t>(ev) < seg.k_end) {
        const auto k = static_cast<std::size_t>(ev);
        const double S = base.surv[k], F = base.cdf[k];
        const double D = F * ib + S * ia;
        acc.loglik += log_jump[k] - std::log(D);
        if (with_gradient) {
          w_short -= S * ia / D;
          w_long -= F * ib / D;
          acc.event_term[k] += S * (ib - ia) / D;
        }
      }
      if (with_gradient) {
        acc.g_beta.noalias() -= w_short * x;
        acc.g_gamma.noalias() -= w_long * x;
      }
    }
  }
}

}  // namespace

Evaluation evaluate_parallel(const EvalLayout& L, std::span<const double> params, bool with_gradient) {
  if (params.size() != L.parameter_count()) throw StructuralError("parameter vector has wrong length");
  const auto p = static_cast<Eigen::Index>(L.p);
  const Eigen::Map<const Vector> beta(params.data(), p);
  const Eigen::Map<const Vector> gamma(params.data() + p, p);
  const auto log_jump = params.subspan(2 * L.p);
  const auto base = detail::baseline_grid(log_jump);

  const std::size_t blocks = (L.n + kBlockSize - 1) / kBlockSize;
  std::vector<BlockPartial> partial(blocks);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(blocks); ++b) {
    const auto first = static_cast<std::size_t>(b) * kBlockSize;
    accumulate_block(L, beta, gamma, log_jump, base, first, std::min(L.n, first + kBlockSize), with_gradient,
                     partial[static_cast<std::size_t>(b)]);
  }

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
  for (const auto& part : partial) {
    out.loglik += part.loglik;
    out.clamped += part.clamped;
    if (!with_gradient) continue;
    g_beta += part.g_beta;
    g_gamma += part.g_gamma;
    for (std::size_t k = 0; k < L.m; ++k) {
      risk_sum[k] += part.risk_sum[k];
      cum_term[k] += part.cum_term[k];
      event_term[k] += part.event_term[k];
    }
  }
  if (!std::isfinite(out.loglik)) throw EvaluationError("log-likelihood is not finite", out.loglik);

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
