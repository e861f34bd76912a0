#include "sda/filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sda/errors.hpp"

namespace sda {

SplitPlan split(std::size_t n, Rng& rng, std::optional<double> frac_override) {
  if (n < 3) throw InvalidInput("split: need n >= 3");
  std::size_t n1;
  if (frac_override) {
    n1 = static_cast<std::size_t>(std::ceil(*frac_override * static_cast<double>(n)));
  } else {
    n1 = (2 * n + 2) / 3;  // ceil(2n/3) in exact arithmetic
  }
  n1 = std::clamp<std::size_t>(n1, 1, n - 1);

  SplitPlan plan;
  plan.n1 = static_cast<int>(n1);
  plan.n2 = static_cast<int>(n - n1);
  plan.assignment.resize(n);
  std::iota(plan.assignment.begin(), plan.assignment.end(), std::size_t{0});
  rng.shuffle(plan.assignment);
  return plan;
}

RankingResult ranking_stats(const ScreeningResult& screen, const RefitResult& refit, int n1,
                            int n2, T1Mode mode) {
  if (screen.selected != refit.subset)
    throw InvalidInput("ranking_stats: screening and refit subsets disagree");
  const std::size_t m = refit.subset.size();
  const double root_n1 = std::sqrt(static_cast<double>(n1));
  const double root_n2 = std::sqrt(static_cast<double>(n2));

  RankingResult out;
  out.subset = refit.subset;
  out.t1_mode = mode;
  out.t1.resize(m);
  out.t2.resize(m);
  out.w.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t j = refit.subset[k];
    const double sigma = refit.sigma[k];
    if (!(sigma > 0.0)) throw std::logic_error("ranking_stats: nonpositive sigma");
    out.t1[k] = mode == T1Mode::Scaled ? root_n1 * screen.coefficients[j] / sigma
                                       : screen.coefficients[j];
    out.t2[k] = root_n2 * refit.mu2[j] / sigma;
    out.w[k] = out.t1[k] * out.t2[k];
  }
  return out;
}

SelectionResult sda_threshold(std::span<const double> w, double alpha, bool plus) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("sda_threshold: alpha must be in (0,1)");
  for (double v : w)
    if (!std::isfinite(v)) throw InvalidInput("sda_threshold: non-finite statistic");

  std::vector<double> sorted(w.begin(), w.end());
  std::sort(sorted.begin(), sorted.end());

  std::vector<double> candidates;
  candidates.reserve(w.size());
  for (double v : w)
    if (v != 0.0) candidates.push_back(std::abs(v));
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  SelectionResult out;
  out.n_candidates = candidates.size();

  for (double t : candidates) {
    const auto pos = static_cast<std::size_t>(
        sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), t));
    const auto neg = static_cast<std::size_t>(
        std::upper_bound(sorted.begin(), sorted.end(), -t) - sorted.begin());
    const double numerator = static_cast<double>(neg) + (plus ? 1.0 : 0.0);
    const double ratio = numerator / static_cast<double>(std::max<std::size_t>(pos, 1));
    if (ratio <= alpha) {
      out.threshold = t;
      out.fdp_hat_at_l = ratio;
      for (std::size_t j = 0; j < w.size(); ++j)
        if (w[j] >= t) out.rejected.push_back(j);
      return out;
    }
  }
  return out;  // threshold = +inf, no rejections
}

std::vector<SymmetryPoint> symmetry_diagnostic(std::span<const double> w,
                                               std::span<const double> t_grid) {
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (t_grid[i] < 0.0) throw InvalidInput("symmetry_diagnostic: grid must be nonnegative");
    if (i > 0 && t_grid[i] < t_grid[i - 1])
      throw InvalidInput("symmetry_diagnostic: grid must be ascending");
  }
  std::vector<SymmetryPoint> out;
  out.reserve(t_grid.size());
  for (double t : t_grid) {
    SymmetryPoint pt;
    pt.t = t;
    for (double v : w) {
      if (v >= t) ++pt.n_pos;
      if (v <= -t) ++pt.n_neg;
    }
    if (pt.n_neg > 0) {
      pt.ratio = static_cast<double>(pt.n_pos) / static_cast<double>(pt.n_neg);
      pt.defined = true;
    }
    out.push_back(pt);
  }
  return out;
}

namespace detail {

std::vector<double> column_mean(const Matrix& data, std::span<const std::size_t> rows) {
  const std::size_t p = data.cols();
  std::vector<double> mean(p, 0.0);
  for (std::size_t r : rows) {
    const double* row = data.data() + r * p;
    for (std::size_t j = 0; j < p; ++j) mean[j] += row[j];
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  for (double& m : mean) m *= inv;
  return mean;
}

namespace {

Matrix extract_rows(const Matrix& data, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), data.cols());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t j = 0; j < data.cols(); ++j) out(r, j) = data(rows[r], j);
  return out;
}

std::size_t default_cap(std::size_t p) { return std::max<std::size_t>(1, p / 3); }

// Screen on y1 and refit on y2, given whitened data and its Gram matrix.
ScreenRefitOutcome screen_refit_whitened(WhitenedProblem&& problem, const SymMatrix& gram,
                                         SplitPlan&& plan, const SdaOptions& options) {
  ScreenRefitOutcome out;
  out.plan = std::move(plan);
  out.problem = std::move(problem);

  const std::size_t p = gram.dim();
  const std::vector<double> xty = matvec(out.problem.x, out.problem.y1);
  double y_sq = 0.0;
  for (double v : out.problem.y1) y_sq += v * v;

  const std::vector<double> grid =
      default_lambda_grid(xty, options.grid_points, options.grid_min_ratio);
  if (grid.empty()) {  // X'y1 is exactly zero: no evidence at all
    out.screen.coefficients.assign(p, 0.0);
    out.empty = true;
    out.flags.empty_selection = true;
    return out;
  }

  out.screen = lasso_path_aic_gram(gram, xty, y_sq, grid, out.problem.n1, options.lasso_tol,
                                   options.lasso_max_sweeps);
  out.screen = cap_selection(std::move(out.screen), options.cap.value_or(default_cap(p)));
  out.flags.lasso_nonconvergence = out.screen.skipped_grid_points > 0;
  out.penalty_used = out.screen.penalty_used;
  out.aic_value = out.screen.aic_value;

  if (out.screen.selected.empty()) {
    out.empty = true;
    out.flags.empty_selection = true;
    return out;
  }

  try {
    out.refit = refit_lse(out.problem, out.screen.selected);
  } catch (const SingularSystem&) {
    out.refit = refit_lse(out.problem, out.screen.selected, 1e-8);
    out.flags.ridge_fallback = true;
  }
  return out;
}

SdaRun finish_run(ScreenRefitOutcome&& outcome, double alpha, const SdaOptions& options,
                  std::size_t p) {
  SdaRun run;
  run.plan = std::move(outcome.plan);
  run.penalty_used = outcome.penalty_used;
  run.aic_value = outcome.aic_value;
  run.w_full.assign(p, std::numeric_limits<double>::quiet_NaN());

  if (outcome.empty) {
    run.selection.flags = outcome.flags;
    return run;
  }

  run.ranking = ranking_stats(outcome.screen, outcome.refit, outcome.problem.n1,
                              outcome.problem.n2, options.t1_mode);
  run.selected_set = run.ranking.subset;
  for (std::size_t k = 0; k < run.ranking.subset.size(); ++k)
    run.w_full[run.ranking.subset[k]] = run.ranking.w[k];

  SelectionResult sel = sda_threshold(run.ranking.w, alpha, options.plus);
  std::vector<std::size_t> features;
  features.reserve(sel.rejected.size());
  for (std::size_t pos : sel.rejected) features.push_back(run.ranking.subset[pos]);
  sel.rejected = std::move(features);
  sel.flags = outcome.flags;
  run.selection = std::move(sel);
  return run;
}

}  // namespace

}  // namespace detail

AggregationResult aggregate_runs(std::vector<SdaRun> runs, std::size_t p) {
  const std::size_t b = runs.size();
  std::vector<std::size_t> counts(p, 0);
  for (const SdaRun& run : runs)
    for (std::size_t j : run.selection.rejected) ++counts[j];

  const std::size_t need = (b + 1) / 2;  // ceil(b/2)
  std::vector<std::size_t> majority;
  std::vector<char> in_majority(p, 0);
  for (std::size_t j = 0; j < p; ++j) {
    if (counts[j] > need) {
      majority.push_back(j);
      in_majority[j] = 1;
    }
  }

  std::size_t best = 0;
  std::size_t best_score = 0;
  for (std::size_t k = 0; k < b; ++k) {
    std::vector<char> in_run(p, 0);
    for (std::size_t j : runs[k].selection.rejected) in_run[j] = 1;
    std::size_t score = 0;
    for (std::size_t j = 0; j < p; ++j)
      if (in_run[j] == in_majority[j]) ++score;
    if (k == 0 || score > best_score) {
      best = k;
      best_score = score;
    }
  }

  AggregationResult out;
  out.runs = std::move(runs);
  out.majority_set = std::move(majority);
  out.chosen_run = best;
  return out;
}

namespace detail {

namespace {

void validate_data(const Matrix& data) {
  if (data.rows() < 3) throw InvalidInput("pipeline: need at least 3 samples");
  if (data.cols() < 2) throw InvalidInput("pipeline: need at least 2 features");
}

SymMatrix group_covariance(const Matrix& d1_rows, const PrecisionSpec& spec) {
  switch (spec.mode) {
    case PrecisionSpec::Mode::Known:
      return inverse_psd(spec.known);
    case PrecisionSpec::Mode::IdentityWorking:
      return SymMatrix::identity(d1_rows.cols());
    case PrecisionSpec::Mode::GraphicalLasso:
      return inverse_psd(estimate_precision(d1_rows, spec));
  }
  throw InvalidInput("group_covariance: unknown mode");
}

}  // namespace

ScreenRefitOutcome screen_and_refit(const Matrix& data, const PrecisionSpec& spec,
                                    const SdaOptions& options, Rng& rng) {
  validate_data(data);
  SplitPlan plan = split(data.rows(), rng, options.split_frac);
  const std::span<const std::size_t> rows1(plan.assignment.data(),
                                           static_cast<std::size_t>(plan.n1));
  const std::span<const std::size_t> rows2(plan.assignment.data() + plan.n1,
                                           static_cast<std::size_t>(plan.n2));
  const std::vector<double> xi_bar_1 = column_mean(data, rows1);
  const std::vector<double> xi_bar_2 = column_mean(data, rows2);

  if (options.cached_sqrt != nullptr) {
    if (spec.mode != PrecisionSpec::Mode::Known)
      throw InvalidInput("screen_and_refit: cached square root requires Known precision");
    WhitenedProblem problem =
        whiten_with_sqrt(*options.cached_sqrt, xi_bar_1, xi_bar_2, plan.n1, plan.n2);
    return screen_refit_whitened(std::move(problem), spec.known, std::move(plan), options);
  }

  SymMatrix omega;
  if (spec.mode == PrecisionSpec::Mode::GraphicalLasso) {
    PrecisionSpec resolved = spec;
    if (!resolved.glasso_penalty)
      resolved.glasso_penalty = options.glasso_penalty;
    omega = estimate_precision(extract_rows(data, rows1), resolved);
  } else {
    omega = estimate_precision(data, spec);
  }
  WhitenedProblem problem = whiten(omega, xi_bar_1, xi_bar_2, plan.n1, plan.n2);
  return screen_refit_whitened(std::move(problem), omega, std::move(plan), options);
}

}  // namespace detail

SdaRun run_sda(const Matrix& data, const PrecisionSpec& spec, double alpha,
               const SdaOptions& options, Rng& rng) {
  detail::ScreenRefitOutcome outcome = detail::screen_and_refit(data, spec, options, rng);
  return detail::finish_run(std::move(outcome), alpha, options, data.cols());
}

AggregationResult run_rsda(const Matrix& data, const PrecisionSpec& spec, double alpha, int b,
                           const SdaOptions& options, Rng& rng) {
  if (b < 1) throw InvalidInput("run_rsda: B must be >= 1");
  const std::uint64_t base = rng.next_u64();
  std::vector<SdaRun> runs;
  runs.reserve(b);
  for (int k = 0; k < b; ++k) {
    Rng run_rng(mix_seed({base, static_cast<std::uint64_t>(k)}));
    runs.push_back(run_sda(data, spec, alpha, options, run_rng));
  }
  return aggregate_runs(std::move(runs), data.cols());
}

SdaRun run_two_sample(const Matrix& data_a, const Matrix& data_b, const TwoSampleSpecs& specs,
                      double alpha, const SdaOptions& options, Rng& rng) {
  detail::validate_data(data_a);
  detail::validate_data(data_b);
  if (data_a.cols() != data_b.cols())
    throw InvalidInput("run_two_sample: groups must share the feature dimension");
  const std::size_t p = data_a.cols();

  // Both groups draw their split from the same derived stream, so equal-size
  // groups receive identical permutations and swapping the groups negates the
  // statistics exactly.
  const std::uint64_t split_seed = rng.next_u64();
  Rng rng_a(split_seed);
  Rng rng_b(split_seed);
  SplitPlan plan_a = split(data_a.rows(), rng_a, options.split_frac);
  SplitPlan plan_b = split(data_b.rows(), rng_b, options.split_frac);

  const std::span<const std::size_t> a1(plan_a.assignment.data(),
                                        static_cast<std::size_t>(plan_a.n1));
  const std::span<const std::size_t> a2(plan_a.assignment.data() + plan_a.n1,
                                        static_cast<std::size_t>(plan_a.n2));
  const std::span<const std::size_t> b1(plan_b.assignment.data(),
                                        static_cast<std::size_t>(plan_b.n1));
  const std::span<const std::size_t> b2(plan_b.assignment.data() + plan_b.n1,
                                        static_cast<std::size_t>(plan_b.n2));

  const int n1 = plan_a.n1 + plan_b.n1;
  const int n2 = plan_a.n2 + plan_b.n2;

  const SymMatrix sigma_a = detail::group_covariance(
      [&] {
        Matrix rows(a1.size(), p);
        for (std::size_t r = 0; r < a1.size(); ++r)
          for (std::size_t j = 0; j < p; ++j) rows(r, j) = data_a(a1[r], j);
        return rows;
      }(),
      specs.a);
  const SymMatrix sigma_b = detail::group_covariance(
      [&] {
        Matrix rows(b1.size(), p);
        for (std::size_t r = 0; r < b1.size(); ++r)
          for (std::size_t j = 0; j < p; ++j) rows(r, j) = data_b(b1[r], j);
        return rows;
      }(),
      specs.b);

  const double ca = static_cast<double>(n1) / static_cast<double>(plan_a.n1);
  const double cb = static_cast<double>(n1) / static_cast<double>(plan_b.n1);
  SymMatrix combined(p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i; j < p; ++j)
      combined.set(i, j, ca * sigma_a(i, j) + cb * sigma_b(i, j));
  const SymMatrix omega = inverse_psd(combined);
  const SymMatrix x = sqrt_psd(omega);

  const std::vector<double> mean_a1 = detail::column_mean(data_a, a1);
  const std::vector<double> mean_a2 = detail::column_mean(data_a, a2);
  const std::vector<double> mean_b1 = detail::column_mean(data_b, b1);
  const std::vector<double> mean_b2 = detail::column_mean(data_b, b2);
  std::vector<double> diff1(p), diff2(p);
  for (std::size_t j = 0; j < p; ++j) {
    diff1[j] = mean_a1[j] - mean_b1[j];
    diff2[j] = mean_a2[j] - mean_b2[j];
  }

  WhitenedProblem problem = whiten_with_sqrt(x, diff1, diff2, n1, n2);
  SplitPlan merged;  // bookkeeping only: combined sizes, group-a assignment
  merged.n1 = n1;
  merged.n2 = n2;
  merged.assignment = plan_a.assignment;
  detail::ScreenRefitOutcome outcome = detail::screen_refit_whitened(
      std::move(problem), omega, std::move(merged), options);
  return detail::finish_run(std::move(outcome), alpha, options, p);
}

AggregationResult run_rsda_two_sample(const Matrix& data_a, const Matrix& data_b,
                                      const TwoSampleSpecs& specs, double alpha, int b,
                                      const SdaOptions& options, Rng& rng) {
  if (b < 1) throw InvalidInput("run_rsda_two_sample: B must be >= 1");
  const std::uint64_t base = rng.next_u64();
  std::vector<SdaRun> runs;
  runs.reserve(b);
  for (int k = 0; k < b; ++k) {
    Rng run_rng(mix_seed({base, static_cast<std::uint64_t>(k)}));
    runs.push_back(run_two_sample(data_a, data_b, specs, alpha, options, run_rng));
  }
  return aggregate_runs(std::move(runs), data_a.cols());
}

}  // namespace sda
