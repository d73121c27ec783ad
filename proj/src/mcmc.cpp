#include "samplan/mcmc.hpp"

#include <cmath>
#include <limits>

#include "samplan/summation.hpp"

namespace samplan {

namespace {

double log_normal_pdf(double x, double variance) {
  return -0.5 * (std::log(2.0 * 3.14159265358979323846 * variance) + x * x / variance);
}

double log_laplace_pdf(double x, double scale) {
  return -std::log(2.0 * scale) - std::abs(x) / scale;
}

}  // namespace

double log_prior_coefficients(const std::vector<double>& coef, double lambda2,
                              const PriorSpec& prior) {
  double lp = log_normal_pdf(coef[0], prior.intercept_variance);
  for (std::size_t j = 1; j < coef.size(); ++j) {
    if (prior.flat_slope_variance) {
      lp += log_normal_pdf(coef[j], *prior.flat_slope_variance);
    } else if (prior.family == PriorFamily::ridge) {
      lp += log_normal_pdf(coef[j], lambda2);
    } else {
      lp += log_laplace_pdf(coef[j], std::sqrt(1.0 / lambda2));
    }
  }
  return lp;
}

double log_hyperprior_lambda2(double lambda2, const PriorSpec& prior) {
  if (lambda2 <= 0.0) return -std::numeric_limits<double>::infinity();
  if (prior.family == PriorFamily::ridge) {
    // inverse-gamma(0.01, 0.01)
    const double a = 0.01, b = 0.01;
    return a * std::log(b) - std::lgamma(a) - (a + 1.0) * std::log(lambda2) - b / lambda2;
  }
  // gamma(shape 1, rate 1/1.78)
  const double rate = 1.0 / 1.78;
  return std::log(rate) - rate * lambda2;
}

McmcResult run_metropolis(const std::function<double(const std::vector<double>&)>& log_target,
                          std::vector<double> init, const McmcConfig& config,
                          std::uint64_t rng_seed, int n_coef_for_diag) {
  config.validate();
  auto stream = make_stream(rng_seed, 0, Role::mcmc);
  const std::size_t dim = init.size();

  std::vector<double> state = std::move(init);
  double lt = log_target(state);

  std::vector<double> step(dim, config.proposal.initial_step);
  std::vector<int> window_accepts(dim, 0);
  int window_count = 0;

  McmcResult result;
  result.samples.reserve(static_cast<std::size_t>(config.draws));
  long long post_accepts = 0, post_proposals = 0;

  const long long total_sweeps =
      static_cast<long long>(config.burn_in) + static_cast<long long>(config.thin) * config.draws;
  for (long long sweep = 0; sweep < total_sweeps; ++sweep) {
    const bool in_burn = sweep < config.burn_in;
    for (std::size_t c = 0; c < dim; ++c) {
      double old = state[c];
      state[c] = old + step[c] * stream.normal();
      double lt_new = log_target(state);
      bool accept = std::log(stream.uniform_pos()) < lt_new - lt;
      if (accept) {
        lt = lt_new;
        if (in_burn) ++window_accepts[c];
        if (!in_burn) ++post_accepts;
      } else {
        state[c] = old;
      }
      if (!in_burn) ++post_proposals;
    }
    if (in_burn) {
      ++window_count;
      if (window_count == config.proposal.adapt_window) {
        for (std::size_t c = 0; c < dim; ++c) {
          double rate = static_cast<double>(window_accepts[c]) / window_count;
          step[c] *= std::exp(rate - config.proposal.target_acceptance);
          step[c] = std::min(std::max(step[c], 1e-6), 50.0);
          window_accepts[c] = 0;
        }
        window_count = 0;
      }
    } else if ((sweep - config.burn_in + 1) % config.thin == 0) {
      result.samples.push_back(state);
    }
  }

  result.acceptance =
      post_proposals > 0 ? static_cast<double>(post_accepts) / static_cast<double>(post_proposals)
                         : 0.0;
  result.low_acceptance = result.acceptance < 0.05;

  // Split-chain check on coefficient components: halves within 4 MC-SE.
  const std::size_t kept = result.samples.size();
  if (kept >= 4) {
    const std::size_t half = kept / 2;
    for (int c = 0; c < n_coef_for_diag; ++c) {
      std::vector<double> a, b;
      for (std::size_t i = 0; i < half; ++i) a.push_back(result.samples[i][static_cast<std::size_t>(c)]);
      for (std::size_t i = half; i < kept; ++i) b.push_back(result.samples[i][static_cast<std::size_t>(c)]);
      double se = std::sqrt(mc_se(a) * mc_se(a) + mc_se(b) * mc_se(b));
      if (se > 0.0 && std::abs(mean(a) - mean(b)) > 4.0 * se) {
        result.split_chain_flag = true;
        break;
      }
    }
  }
  return result;
}

}  // namespace samplan
