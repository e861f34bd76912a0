#include <benchmark/benchmark.h>

#include "sda/estimation.hpp"
#include "sda/filter.hpp"
#include "sda/lasso.hpp"
#include "sda/linalg.hpp"
#include "sda/rng.hpp"
#include "sda/simulate.hpp"

namespace {

sda::SymMatrix ar_matrix(double rho, std::size_t p) {
  sda::SymMatrix s(p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i; j < p; ++j) s.set(i, j, std::pow(rho, double(j - i)));
  return s;
}

void BM_sym_eigen(benchmark::State& state) {
  const auto a = ar_matrix(0.8, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sda::sym_eigen(a));
}
BENCHMARK(BM_sym_eigen)->Arg(50)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_sqrt_psd(benchmark::State& state) {
  const auto a = ar_matrix(0.8, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sda::sqrt_psd(a));
}
BENCHMARK(BM_sqrt_psd)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_lasso_path(benchmark::State& state) {
  const std::size_t p = state.range(0);
  const sda::SymMatrix sigma = ar_matrix(0.8, p);
  const sda::SymMatrix omega = sda::inverse_psd(sigma);
  sda::Rng rng(1);
  std::vector<double> xty(p);
  for (double& v : xty) v = 0.3 * rng.normal();
  double y_sq = 0.0;
  for (double v : xty) y_sq += v * v;
  const std::vector<double> grid = sda::default_lambda_grid(xty);
  for (auto _ : state)
    benchmark::DoNotOptimize(sda::lasso_path_aic_gram(omega, xty, y_sq, grid, 60));
}
BENCHMARK(BM_lasso_path)->Arg(200)->Arg(500)->Unit(benchmark::kMillisecond);

void BM_sda_threshold(benchmark::State& state) {
  sda::Rng rng(2);
  std::vector<double> w(state.range(0));
  for (double& v : w) v = rng.normal() * rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(sda::sda_threshold(w, 0.2, false));
}
BENCHMARK(BM_sda_threshold)->Arg(1000)->Arg(5000);

void BM_graphical_lasso(benchmark::State& state) {
  const std::size_t p = state.range(0);
  sda::Rng rng(3);
  sda::TruthVector truth;
  truth.theta.assign(p, 0);
  truth.mu.assign(p, 0.0);
  const sda::Matrix root = sda::sqrt_psd(ar_matrix(0.6, p)).dense();
  const sda::Matrix data = sda::gen_sample_with_sqrt(truth, root, sda::ErrorLaw::Normal, 60, rng);
  const sda::SymMatrix s = sda::sample_covariance(data);
  sda::SymMatrix ridged = s;
  for (std::size_t i = 0; i < p; ++i) ridged.set(i, i, s(i, i) + 1e-3);
  for (auto _ : state)
    benchmark::DoNotOptimize(sda::graphical_lasso(ridged, sda::default_glasso_penalty(p, 60)));
}
BENCHMARK(BM_graphical_lasso)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_run_sda(benchmark::State& state) {
  const std::size_t p = state.range(0);
  const sda::SymMatrix sigma = ar_matrix(0.8, p);
  const sda::SymMatrix omega = sda::inverse_psd(sigma);
  const sda::SymMatrix omega_sqrt = sda::sqrt_psd(omega);
  const sda::Matrix sigma_sqrt = sda::sqrt_psd(sigma).dense();
  sda::Rng rng(4);
  const sda::TruthVector truth = sda::gen_signal(p, {0.1, 0.3, 0.1, true}, rng);
  const sda::Matrix data =
      sda::gen_sample_with_sqrt(truth, sigma_sqrt, sda::ErrorLaw::Normal, 90, rng);
  const sda::PrecisionSpec spec = sda::PrecisionSpec::known_matrix(omega);
  sda::SdaOptions options;
  options.cached_sqrt = &omega_sqrt;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    sda::Rng run_rng(++seed);
    benchmark::DoNotOptimize(sda::run_sda(data, spec, 0.2, options, run_rng));
  }
}
BENCHMARK(BM_run_sda)->Arg(100)->Arg(500)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
