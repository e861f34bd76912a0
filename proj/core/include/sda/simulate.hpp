#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sda/estimation.hpp"
#include "sda/filter.hpp"
#include "sda/linalg.hpp"
#include "sda/rng.hpp"

namespace sda {

// Population covariance families used by the synthetic designs. All three
// produce unit-diagonal positive definite matrices.
struct CovarianceKind {
  enum class Type { AR, CompoundSymmetry, SparseFactor };
  Type type = Type::AR;
  double rho = 0.0;       // AR / CompoundSymmetry
  std::uint64_t seed = 0; // SparseFactor: reseeds the factor draw when nonzero
};

SymMatrix build_covariance(const CovarianceKind& kind, std::size_t p, Rng& rng);

// Sparse mixture of point mass at zero and a uniform band around mu0, with an
// optional random sign flip.
struct SignalSpec {
  double pi1 = 0.1;
  double mu0 = 0.2;
  double band = 0.1;
  bool flip_sign = true;
};

struct TruthVector {
  std::vector<int> theta;  // 1 iff mu != 0
  std::vector<double> mu;
};

TruthVector gen_signal(std::size_t p, const SignalSpec& spec, Rng& rng);

enum class ErrorLaw { Normal, StudentT3, Exponential2 };

// Rows mu + Sigma^{1/2} eps with componentwise standardized errors, so the
// population covariance equals Sigma for every law.
Matrix gen_sample(const TruthVector& truth, const SymMatrix& sigma, ErrorLaw law, std::size_t n,
                  Rng& rng);
Matrix gen_sample_with_sqrt(const TruthVector& truth, const Matrix& sigma_sqrt, ErrorLaw law,
                            std::size_t n, Rng& rng);

// Standardized draw from the given law (mean 0, variance 1).
double standardized_noise(ErrorLaw law, Rng& rng);

std::pair<double, double> fdp_tdp(const std::vector<std::size_t>& rejected,
                                  const TruthVector& truth);

enum class Procedure { SDA, SDAPlus, RSDA, BH, SS };

std::string procedure_name(Procedure p);

// One grid cell of the experiment.
struct SettingCell {
  CovarianceKind cov;
  ErrorLaw law = ErrorLaw::Normal;
  std::size_t n = 90;
  std::size_t p = 500;
  double pi1 = 0.1;
  double mu0 = 0.2;
};

struct SimulationConfig {
  std::vector<SettingCell> cells;
  std::vector<Procedure> procedures = {Procedure::SDA, Procedure::BH, Procedure::SS};
  double alpha = 0.2;
  int reps = 200;
  std::uint64_t seed = 1;
  PrecisionSpec::Mode precision = PrecisionSpec::Mode::Known;  // Known = true Sigma^{-1}
  std::optional<double> glasso_penalty;
  int rsda_b = 11;
  int workers = 1;
  SdaOptions sda;  // plus flag ignored; SDA+ is its own procedure
};

struct MetricsRecord {
  Procedure procedure = Procedure::SDA;
  SettingCell cell;
  double alpha = 0.2;
  double fdr = 0.0;
  double fdp_sd = 0.0;
  double fdr_se = 0.0;
  double ap = 0.0;
  double ap_sd = 0.0;
  double ap_se = 0.0;
  int reps = 0;     // configured replications
  int dropped = 0;  // replications lost to per-rep failures
  bool unreliable = false;  // more than 5% dropped
};

// Runs every (cell, replication, procedure) combination. Within a replication
// all procedures see the same data; replication streams derive from
// (seed, cell index, rep). Failures drop the replication for that procedure
// only. Deterministic for a fixed config, independent of worker count.
std::vector<MetricsRecord> run_experiment(const SimulationConfig& config);

}  // namespace sda
