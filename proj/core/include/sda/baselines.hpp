#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sda/filter.hpp"
#include "sda/linalg.hpp"
#include "sda/rng.hpp"

namespace sda {

// Benjamini-Hochberg step-up rule; rejects the indices of the k-hat smallest
// p-values (ties kept in original-index order). Entries outside [0,1] throw
// InvalidInput.
std::vector<std::size_t> bh(std::span<const double> pvalues, double alpha);

// 2 * (1 - Phi(|z|)) through the complementary error function.
double normal_two_sided_p(double z);

// Marginal z-test BH baseline: z_j = sqrt(n) * mean_j / sqrt(s_jj). Pass the
// known diagonal of Sigma, or empty to use per-feature sample variances.
std::vector<std::size_t> bh_marginal(const Matrix& data, std::span<const double> sigma_diag,
                                     double alpha);

// Sample-splitting baseline: screen with LASSO, then BH over normal p-values
// of the refit z-statistics sqrt(n2) * mu2_j / sigma_{S,j}. Returns feature
// indices (always a subset of the screened set).
std::vector<std::size_t> ss_procedure(const Matrix& data, const PrecisionSpec& spec,
                                      double alpha, const SdaOptions& options, Rng& rng);

}  // namespace sda
