#pragma once

#include "cocolasso/crossval.hpp"
#include "cocolasso/lasso.hpp"
#include "cocolasso/psd_projection.hpp"
#include "cocolasso/surrogate.hpp"

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace cocolasso {

/// Sigma_X(i, j) = phi^|i - j|
struct Autoregressive {
  double phi = 0.5;
};

/// Sigma_X(i, j) = c for i != j, 1 on the diagonal
struct CompoundSymmetry {
  double c = 0.5;
};

using Design = std::variant<Autoregressive, CompoundSymmetry>;

/// Z = X + A, rows of A iid N(0, tau^2 I).
struct AdditiveGaussian {
  double tau = 0.75;
};

/// Z = X (.) M, log(m_ij) iid N(0, tau^2).
struct MultiplicativeLognormal {
  double tau = 0.25;
};

/// Each x_ij observed independently with probability 1 - r.
struct MissingBernoulli {
  double r = 0.1;
};

using Corruption = std::variant<AdditiveGaussian, MultiplicativeLognormal, MissingBernoulli>;

/// Coefficients (3, 1.5, 0, 0, 2, 0, ..., 0) of length p.
Vector default_beta_star(Index p);

struct SimConfig {
  Index n = 100;
  Index p = 250;
  Vector beta_star = default_beta_star(250);
  double sigma_noise = 3.0;
  Design design = Autoregressive{0.5};
  Corruption corruption = AdditiveGaussian{0.75};
  int replications = 100;
  std::uint64_t seed = 20240601;
  int bootstrap_samples = 1000;

  int folds = 5;
  int grid_size = 100;
  double lambda_min_ratio = 1e-3;
  AdmmConfig admm = bench_admm();
  SolveOptions solver;
  // Missing-data runs plug in the true rate unless this is set.
  bool estimate_missing_rates = false;
  int threads = 1;  // replications processed concurrently; 0 = default_thread_count()

  /// ADMM settings used by the bench: looser than the library default, since
  /// every replication projects 2K + 1 matrices. Iterates are PSD throughout,
  /// so early stopping only costs max-norm optimality.
  static AdmmConfig bench_admm();
};

/// Throws InvalidInput for out-of-domain settings.
void validate(const SimConfig& cfg);

/// Population covariance of the rows of X.
Matrix design_covariance(const Design& design, Index p);

struct SimInstance {
  Matrix x;                // clean design, retained for oracle checks only
  Vector y;
  CorruptedDataset data;   // what an analyst observes
  ErrorModel model;        // error model handed to the estimator
};

/// Deterministic in (cfg.seed, rep_index); replications use independent
/// substreams.
SimInstance generate_instance(const SimConfig& cfg, int rep_index);

struct Metrics {
  double pe = 0.0;   // (beta* - beta)' Sigma_X (beta* - beta)
  double mse = 0.0;  // ||beta* - beta||^2
  int correct = 0;   // true nonzeros selected
  int incorrect = 0; // true zeros selected
};

/// A coefficient counts as selected when |beta_j| > 1e-10.
Metrics metrics(const Vector& beta_hat, const Vector& beta_star, const Matrix& sigma_x);

/// sign(beta_hat) == sign(beta_star) coordinatewise, with the same threshold.
bool signed_support_recovered(const Vector& beta_hat, const Vector& beta_star);

struct ReplicationRecord {
  int rep = 0;
  bool failed = false;
  std::string error;
  Metrics m;
  double lambda_selected = 0.0;
  bool sign_recovered = false;       // at the CV-selected lambda
  bool sign_recovered_path = false;  // at some lambda of the grid
  double gram_error_surrogate = 0.0; // ||Sigma_hat - X'X/n||_max
  double gram_error_projected = 0.0; // ||Sigma_tilde - X'X/n||_max
  bool factor_two_holds = false;
  int psd_iterations = 0;            // full-data projection
  bool psd_converged = false;        // every projection of the replication
};

struct ExperimentReport {
  SimConfig config;
  std::vector<ReplicationRecord> records;
  int failures = 0;
  Metrics median;  // medians; C and IC may be half-integers
  double median_c = 0.0;
  double median_ic = 0.0;
  double se_pe = 0.0;
  double se_mse = 0.0;
  double se_c = 0.0;
  double se_ic = 0.0;
  double sign_recovery_rate = 0.0;
  double sign_recovery_rate_path = 0.0;
  double snr = 0.0;  // beta*' Sigma_X beta* / sigma^2
  bool factor_two_all = true;
  double runtime_seconds = 0.0;  // not part of serialized reports

  /// At most 10% of the replications failed.
  bool acceptable() const { return 10 * failures <= config.replications; }
};

/// Generates, tunes by corrected CV, fits at the selected lambda and scores
/// every replication. Failed replications are counted and left out of the
/// aggregates.
ExperimentReport run_experiment(const SimConfig& cfg);

/// Runs one replication; never throws for numerical failures (the record is
/// marked failed instead).
ReplicationRecord run_replication(const SimConfig& cfg, int rep_index);

double median(std::vector<double> values);

/// Standard deviation of medians over `samples` bootstrap resamples.
double bootstrap_median_se(const std::vector<double>& values, int samples, std::uint64_t seed);

struct ConditionDiagnostics {
  double gamma = 0.0;  // 1 - ||Sigma_{S^c,S} Sigma_{S,S}^{-1}||_inf
  double c_min = 0.0;  // smallest eigenvalue of Sigma_{S,S}
};

/// Throws InvalidInput for an empty/out-of-range support and NumericalError
/// when Sigma_{S,S} is singular.
ConditionDiagnostics condition_diagnostics(const Matrix& sigma, const std::vector<Index>& support);

/// Indices j with beta_j != 0.
std::vector<Index> support_of(const Vector& beta);

std::string describe(const Design& design);
std::string describe(const Corruption& corruption);

}  // namespace cocolasso
