#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "sda/estimation.hpp"
#include "sda/lasso.hpp"
#include "sda/linalg.hpp"
#include "sda/rng.hpp"

namespace sda {

// Random partition of sample indices; the first n1 entries of `assignment`
// form the screening split.
struct SplitPlan {
  int n1 = 0;
  int n2 = 0;
  std::vector<std::size_t> assignment;
};

// Default rule n1 = ceil(2n/3); frac_override replaces the 2/3 fraction,
// clamped so both splits stay non-empty.
SplitPlan split(std::size_t n, Rng& rng, std::optional<double> frac_override = {});

enum class T1Mode { Scaled, RawCoefficient };

// Per-feature statistics restricted to the screened subset.
struct RankingResult {
  std::vector<double> t1;
  std::vector<double> t2;
  std::vector<double> w;  // w[k] = t1[k] * t2[k]
  std::vector<std::size_t> subset;
  T1Mode t1_mode = T1Mode::Scaled;
};

RankingResult ranking_stats(const ScreeningResult& screen, const RefitResult& refit, int n1,
                            int n2, T1Mode mode);

struct RunFlags {
  bool ridge_fallback = false;
  bool empty_selection = false;
  bool lasso_nonconvergence = false;
};

// Threshold decision. `rejected` holds positions into the w vector handed to
// sda_threshold; pipeline entry points translate to feature indices.
struct SelectionResult {
  double threshold = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> rejected;
  double fdp_hat_at_l = 0.0;
  std::size_t n_candidates = 0;
  RunFlags flags;
};

// Data-driven threshold over the candidate set {|w_j| : w_j != 0}. plus=false
// uses neg/max(pos,1); plus=true uses (1+neg)/max(pos,1).
SelectionResult sda_threshold(std::span<const double> w, double alpha, bool plus);

struct SdaOptions {
  bool plus = false;
  T1Mode t1_mode = T1Mode::Scaled;
  std::optional<double> split_frac;
  std::optional<std::size_t> cap;  // default floor(p/3), at least 1
  int grid_points = 50;
  double grid_min_ratio = 1e-3;
  double lasso_tol = -1.0;  // <= 0 resolves to 1e-7 * p
  int lasso_max_sweeps = 10000;
  std::optional<double> glasso_penalty;
  // Cached whitening data for a fixed precision matrix (Known mode); both
  // must refer to objects that outlive the call.
  const SymMatrix* cached_sqrt = nullptr;
};

// Full single-split run. `selection.rejected` holds feature indices; w_full
// carries W per feature with NaN outside the screened subset.
struct SdaRun {
  SelectionResult selection;
  RankingResult ranking;
  std::vector<std::size_t> selected_set;
  SplitPlan plan;
  std::vector<double> w_full;
  double penalty_used = 0.0;
  double aic_value = 0.0;
};

SdaRun run_sda(const Matrix& data, const PrecisionSpec& spec, double alpha,
               const SdaOptions& options, Rng& rng);

// Majority-vote aggregation over B independent splits; the final answer is
// the run with the largest overlap score against the majority set, ties to
// the smallest run index.
struct AggregationResult {
  std::vector<SdaRun> runs;
  std::vector<std::size_t> majority_set;
  std::size_t chosen_run = 0;

  const SdaRun& final() const { return runs[chosen_run]; }
};

AggregationResult run_rsda(const Matrix& data, const PrecisionSpec& spec, double alpha, int b,
                           const SdaOptions& options, Rng& rng);

// The aggregation rule on its own: majority set from counts > ceil(B/2),
// then the run matching the majority on the most features wins.
AggregationResult aggregate_runs(std::vector<SdaRun> runs, std::size_t p);

struct TwoSampleSpecs {
  PrecisionSpec a;
  PrecisionSpec b;
};

SdaRun run_two_sample(const Matrix& data_a, const Matrix& data_b, const TwoSampleSpecs& specs,
                      double alpha, const SdaOptions& options, Rng& rng);

AggregationResult run_rsda_two_sample(const Matrix& data_a, const Matrix& data_b,
                                      const TwoSampleSpecs& specs, double alpha, int b,
                                      const SdaOptions& options, Rng& rng);

// Tail-count comparison along a nonnegative ascending grid; ratio is
// undefined (flagged) when the negative-tail count is zero.
struct SymmetryPoint {
  double t = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  double ratio = 0.0;
  bool defined = false;
};

std::vector<SymmetryPoint> symmetry_diagnostic(std::span<const double> w,
                                               std::span<const double> t_grid);

namespace detail {

// Shared pipeline front end: split, precision, whiten, screen, cap, refit.
struct ScreenRefitOutcome {
  SplitPlan plan;
  WhitenedProblem problem;
  ScreeningResult screen;
  RefitResult refit;
  RunFlags flags;
  bool empty = false;  // screening selected nothing
  double penalty_used = 0.0;
  double aic_value = 0.0;
};

ScreenRefitOutcome screen_and_refit(const Matrix& data, const PrecisionSpec& spec,
                                    const SdaOptions& options, Rng& rng);

std::vector<double> column_mean(const Matrix& data, std::span<const std::size_t> rows);

}  // namespace detail

}  // namespace sda
