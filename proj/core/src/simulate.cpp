#include "sda/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "sda/baselines.hpp"
#include "sda/errors.hpp"

namespace sda {

SymMatrix build_covariance(const CovarianceKind& kind, std::size_t p, Rng& rng) {
  if (p < 2) throw InvalidInput("build_covariance: need p >= 2");
  SymMatrix sigma(p);
  switch (kind.type) {
    case CovarianceKind::Type::AR: {
      if (!(std::abs(kind.rho) < 1.0)) throw InvalidInput("build_covariance: AR needs |rho| < 1");
      for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i; j < p; ++j)
          sigma.set(i, j, std::pow(kind.rho, static_cast<double>(j - i)));
      return sigma;
    }
    case CovarianceKind::Type::CompoundSymmetry: {
      if (!(kind.rho >= 0.0 && kind.rho < 1.0))
        throw InvalidInput("build_covariance: compound symmetry needs rho in [0,1)");
      for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i; j < p; ++j) sigma.set(i, j, i == j ? 1.0 : kind.rho);
      return sigma;
    }
    case CovarianceKind::Type::SparseFactor: {
      Rng local = kind.seed != 0 ? Rng(kind.seed) : rng.derive(0x5fac);
      // One nonzero per row of the factor loading matrix, then Gamma Gamma' + I
      // rescaled to unit diagonal.
      std::vector<std::size_t> position(p);
      std::vector<double> loading(p);
      for (std::size_t i = 0; i < p; ++i) {
        position[i] = static_cast<std::size_t>(local.below(p));
        loading[i] = local.uniform(1.0, 2.0);
      }
      Matrix raw(p, p, 0.0);
      for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i; j < p; ++j) {
          double value = (i == j) ? 1.0 : 0.0;
          if (position[i] == position[j]) value += loading[i] * loading[j];
          raw(i, j) = value;
          raw(j, i) = value;
        }
      }
      std::vector<double> scale(p);
      for (std::size_t i = 0; i < p; ++i) scale[i] = 1.0 / std::sqrt(raw(i, i));
      for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i; j < p; ++j) sigma.set(i, j, raw(i, j) * scale[i] * scale[j]);
      return sigma;
    }
  }
  throw InvalidInput("build_covariance: unknown kind");
}

TruthVector gen_signal(std::size_t p, const SignalSpec& spec, Rng& rng) {
  if (!(spec.pi1 >= 0.0 && spec.pi1 < 1.0)) throw InvalidInput("gen_signal: pi1 must be in [0,1)");
  if (!(spec.mu0 > 0.0)) throw InvalidInput("gen_signal: mu0 must be positive");
  TruthVector out;
  out.theta.assign(p, 0);
  out.mu.assign(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    if (rng.uniform01() >= spec.pi1) continue;
    double value = rng.uniform(spec.mu0 - spec.band, spec.mu0 + spec.band);
    if (spec.flip_sign && rng.uniform01() < 0.5) value = -value;
    out.mu[j] = value;
    out.theta[j] = value != 0.0 ? 1 : 0;
  }
  return out;
}

double standardized_noise(ErrorLaw law, Rng& rng) {
  switch (law) {
    case ErrorLaw::Normal:
      return rng.normal();
    case ErrorLaw::StudentT3:
      return rng.student_t3() / 1.7320508075688772935;  // sd of t(3) is sqrt(3)
    case ErrorLaw::Exponential2:
      return (rng.exponential(2.0) - 2.0) / 2.0;
  }
  throw InvalidInput("standardized_noise: unknown law");
}

Matrix gen_sample_with_sqrt(const TruthVector& truth, const Matrix& sigma_sqrt, ErrorLaw law,
                            std::size_t n, Rng& rng) {
  const std::size_t p = truth.mu.size();
  if (sigma_sqrt.rows() != p || sigma_sqrt.cols() != p)
    throw InvalidInput("gen_sample: dimension mismatch");
  Matrix data(n, p);
  std::vector<double> eps(p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) eps[j] = standardized_noise(law, rng);
    double* row = data.data() + i * p;
    for (std::size_t j = 0; j < p; ++j) {
      const double* srow = sigma_sqrt.data() + j * p;
      double acc = truth.mu[j];
      for (std::size_t k = 0; k < p; ++k) acc += srow[k] * eps[k];
      row[j] = acc;
    }
  }
  return data;
}

Matrix gen_sample(const TruthVector& truth, const SymMatrix& sigma, ErrorLaw law, std::size_t n,
                  Rng& rng) {
  return gen_sample_with_sqrt(truth, sqrt_psd(sigma).dense(), law, n, rng);
}

std::pair<double, double> fdp_tdp(const std::vector<std::size_t>& rejected,
                                  const TruthVector& truth) {
  const std::size_t p = truth.theta.size();
  std::size_t false_count = 0;
  std::size_t true_count = 0;
  for (std::size_t j : rejected) {
    if (j >= p) throw InvalidInput("fdp_tdp: rejected index out of range");
    if (truth.theta[j])
      ++true_count;
    else
      ++false_count;
  }
  std::size_t signals = 0;
  for (int t : truth.theta) signals += t;

  const double fdp = static_cast<double>(false_count) /
                     static_cast<double>(std::max<std::size_t>(rejected.size(), 1));
  const double tdp =
      static_cast<double>(true_count) / static_cast<double>(std::max<std::size_t>(signals, 1));
  return {fdp, tdp};
}

std::string procedure_name(Procedure p) {
  switch (p) {
    case Procedure::SDA: return "SDA";
    case Procedure::SDAPlus: return "SDA+";
    case Procedure::RSDA: return "R-SDA";
    case Procedure::BH: return "BH";
    case Procedure::SS: return "SS";
  }
  return "?";
}

namespace {

struct CellContext {
  SymMatrix sigma;
  Matrix sigma_sqrt;
  SymMatrix omega;       // Known mode only
  SymMatrix omega_sqrt;  // Known mode only
  std::vector<double> sigma_diag;
};

struct RepOutcome {
  // Per procedure: fdp, tdp, ok.
  std::vector<double> fdp;
  std::vector<double> tdp;
  std::vector<char> ok;
};

RepOutcome run_replication(const SimulationConfig& config, const SettingCell& cell,
                           const CellContext& ctx, std::size_t cell_index, int rep) {
  const std::size_t n_proc = config.procedures.size();
  RepOutcome out;
  out.fdp.assign(n_proc, 0.0);
  out.tdp.assign(n_proc, 0.0);
  out.ok.assign(n_proc, 0);

  const auto cell_id = static_cast<std::uint64_t>(cell_index);
  const auto rep_id = static_cast<std::uint64_t>(rep);
  Rng truth_rng(mix_seed({config.seed, cell_id, rep_id, 0}));
  Rng data_rng(mix_seed({config.seed, cell_id, rep_id, 1}));

  const TruthVector truth = gen_signal(cell.p, {cell.pi1, cell.mu0, 0.1, true}, truth_rng);
  const Matrix data = gen_sample_with_sqrt(truth, ctx.sigma_sqrt, cell.law, cell.n, data_rng);

  PrecisionSpec spec;
  SdaOptions options = config.sda;
  options.glasso_penalty = config.glasso_penalty;
  switch (config.precision) {
    case PrecisionSpec::Mode::Known:
      spec = PrecisionSpec::known_matrix(ctx.omega);
      options.cached_sqrt = &ctx.omega_sqrt;
      break;
    case PrecisionSpec::Mode::IdentityWorking:
      spec = PrecisionSpec::identity_working();
      options.cached_sqrt = nullptr;
      break;
    case PrecisionSpec::Mode::GraphicalLasso:
      spec = PrecisionSpec::graphical_lasso(config.glasso_penalty);
      options.cached_sqrt = nullptr;
      break;
  }

  for (std::size_t k = 0; k < n_proc; ++k) {
    Rng proc_rng(mix_seed({config.seed, cell_id, rep_id, 2 + static_cast<std::uint64_t>(k)}));
    try {
      std::vector<std::size_t> rejected;
      switch (config.procedures[k]) {
        case Procedure::SDA: {
          SdaOptions o = options;
          o.plus = false;
          rejected = run_sda(data, spec, config.alpha, o, proc_rng).selection.rejected;
          break;
        }
        case Procedure::SDAPlus: {
          SdaOptions o = options;
          o.plus = true;
          rejected = run_sda(data, spec, config.alpha, o, proc_rng).selection.rejected;
          break;
        }
        case Procedure::RSDA: {
          SdaOptions o = options;
          o.plus = false;
          rejected = run_rsda(data, spec, config.alpha, config.rsda_b, o, proc_rng)
                         .final()
                         .selection.rejected;
          break;
        }
        case Procedure::BH: {
          // Known diagonal when the covariance is known, sample variances
          // otherwise.
          if (config.precision == PrecisionSpec::Mode::Known)
            rejected = bh_marginal(data, ctx.sigma_diag, config.alpha);
          else
            rejected = bh_marginal(data, {}, config.alpha);
          break;
        }
        case Procedure::SS:
          rejected = ss_procedure(data, spec, config.alpha, options, proc_rng);
          break;
      }
      const auto [fdp, tdp] = fdp_tdp(rejected, truth);
      out.fdp[k] = fdp;
      out.tdp[k] = tdp;
      out.ok[k] = 1;
    } catch (const std::exception&) {
      out.ok[k] = 0;  // dropped replication for this procedure
    }
  }
  return out;
}

}  // namespace

std::vector<MetricsRecord> run_experiment(const SimulationConfig& config) {
  if (config.reps < 1) throw InvalidInput("run_experiment: reps must be >= 1");
  if (config.cells.empty()) throw InvalidInput("run_experiment: no cells");
  if (config.procedures.empty()) throw InvalidInput("run_experiment: no procedures");

  std::vector<MetricsRecord> records;
  const std::size_t n_proc = config.procedures.size();

  for (std::size_t cell_index = 0; cell_index < config.cells.size(); ++cell_index) {
    const SettingCell& cell = config.cells[cell_index];

    CellContext ctx;
    Rng sigma_rng(mix_seed({config.seed, static_cast<std::uint64_t>(cell_index), 0x516}));
    ctx.sigma = build_covariance(cell.cov, cell.p, sigma_rng);
    ctx.sigma_sqrt = sqrt_psd(ctx.sigma).dense();
    ctx.sigma_diag.resize(cell.p);
    for (std::size_t j = 0; j < cell.p; ++j) ctx.sigma_diag[j] = ctx.sigma(j, j);
    if (config.precision == PrecisionSpec::Mode::Known) {
      ctx.omega = inverse_psd(ctx.sigma);
      ctx.omega_sqrt = sqrt_psd(ctx.omega);
    }

    std::vector<RepOutcome> outcomes(config.reps);
    const int workers = std::max(1, config.workers);
    if (workers == 1) {
      for (int rep = 0; rep < config.reps; ++rep)
        outcomes[rep] = run_replication(config, cell, ctx, cell_index, rep);
    } else {
      std::atomic<int> next{0};
      auto worker = [&] {
        for (;;) {
          const int rep = next.fetch_add(1);
          if (rep >= config.reps) return;
          outcomes[rep] = run_replication(config, cell, ctx, cell_index, rep);
        }
      };
      std::vector<std::thread> pool;
      pool.reserve(workers);
      for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
      for (std::thread& t : pool) t.join();
    }

    // Deterministic reduce in replication order.
    for (std::size_t k = 0; k < n_proc; ++k) {
      double sum_fdp = 0.0, sum_fdp2 = 0.0, sum_tdp = 0.0, sum_tdp2 = 0.0;
      int kept = 0;
      for (int rep = 0; rep < config.reps; ++rep) {
        const RepOutcome& o = outcomes[rep];
        if (!o.ok[k]) continue;
        sum_fdp += o.fdp[k];
        sum_fdp2 += o.fdp[k] * o.fdp[k];
        sum_tdp += o.tdp[k];
        sum_tdp2 += o.tdp[k] * o.tdp[k];
        ++kept;
      }
      MetricsRecord rec;
      rec.procedure = config.procedures[k];
      rec.cell = cell;
      rec.alpha = config.alpha;
      rec.reps = config.reps;
      rec.dropped = config.reps - kept;
      rec.unreliable = rec.dropped * 20 > config.reps;  // > 5% dropped
      if (kept > 0) {
        const double inv = 1.0 / kept;
        rec.fdr = sum_fdp * inv;
        rec.ap = sum_tdp * inv;
        if (kept > 1) {
          rec.fdp_sd = std::sqrt(std::max(0.0, (sum_fdp2 - kept * rec.fdr * rec.fdr) / (kept - 1)));
          rec.ap_sd = std::sqrt(std::max(0.0, (sum_tdp2 - kept * rec.ap * rec.ap) / (kept - 1)));
          rec.fdr_se = rec.fdp_sd / std::sqrt(static_cast<double>(kept));
          rec.ap_se = rec.ap_sd / std::sqrt(static_cast<double>(kept));
        }
      }
      records.push_back(std::move(rec));
    }
  }
  return records;
}

}  // namespace sda
