#include "sda/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sda/errors.hpp"

namespace sda {

std::vector<std::size_t> bh(std::span<const double> pvalues, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("bh: alpha must be in (0,1)");
  const std::size_t m = pvalues.size();
  for (double p : pvalues)
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("bh: p-value outside [0,1]");

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pvalues[a] < pvalues[b];
  });

  std::size_t k_hat = 0;
  for (std::size_t k = 1; k <= m; ++k) {
    if (pvalues[order[k - 1]] <= static_cast<double>(k) * alpha / static_cast<double>(m))
      k_hat = k;
  }

  std::vector<std::size_t> rejected(order.begin(), order.begin() + k_hat);
  std::sort(rejected.begin(), rejected.end());
  return rejected;
}

double normal_two_sided_p(double z) {
  if (!std::isfinite(z)) throw InvalidInput("normal_two_sided_p: non-finite z");
  return std::erfc(std::abs(z) / 1.4142135623730950488);
}

std::vector<std::size_t> bh_marginal(const Matrix& data, std::span<const double> sigma_diag,
                                     double alpha) {
  const std::size_t n = data.rows();
  const std::size_t p = data.cols();
  if (n < 2) throw InvalidInput("bh_marginal: need at least two samples");
  if (!sigma_diag.empty() && sigma_diag.size() != p)
    throw InvalidInput("bh_marginal: diagonal length mismatch");

  std::vector<double> mean(p, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) mean[j] += data(i, j);
  for (double& m : mean) m /= static_cast<double>(n);

  std::vector<double> variance(p);
  if (sigma_diag.empty()) {
    std::vector<double> ss(p, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < p; ++j) {
        const double d = data(i, j) - mean[j];
        ss[j] += d * d;
      }
    for (std::size_t j = 0; j < p; ++j) variance[j] = ss[j] / static_cast<double>(n - 1);
  } else {
    variance.assign(sigma_diag.begin(), sigma_diag.end());
  }

  const double root_n = std::sqrt(static_cast<double>(n));
  std::vector<double> pvalues(p);
  for (std::size_t j = 0; j < p; ++j) {
    if (!(variance[j] > 0.0)) throw InvalidInput("bh_marginal: nonpositive variance");
    pvalues[j] = normal_two_sided_p(root_n * mean[j] / std::sqrt(variance[j]));
  }
  return bh(pvalues, alpha);
}

std::vector<std::size_t> ss_procedure(const Matrix& data, const PrecisionSpec& spec,
                                      double alpha, const SdaOptions& options, Rng& rng) {
  detail::ScreenRefitOutcome outcome = detail::screen_and_refit(data, spec, options, rng);
  if (outcome.empty) return {};

  const std::size_t m = outcome.refit.subset.size();
  const double root_n2 = std::sqrt(static_cast<double>(outcome.problem.n2));
  std::vector<double> pvalues(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double z = root_n2 * outcome.refit.mu2[outcome.refit.subset[k]] / outcome.refit.sigma[k];
    pvalues[k] = normal_two_sided_p(z);
  }
  const std::vector<std::size_t> local = bh(pvalues, alpha);
  std::vector<std::size_t> features;
  features.reserve(local.size());
  for (std::size_t k : local) features.push_back(outcome.refit.subset[k]);
  return features;
}

}  // namespace sda
