#pragma once

#include "cocolasso/lasso.hpp"
#include "cocolasso/psd_projection.hpp"
#include "cocolasso/surrogate.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace cocolasso {

/// Random balanced partition of n observations into K folds.
struct FoldPlan {
  int k = 0;
  std::vector<int> assignment;  // fold index in [0, k) per observation
  std::uint64_t seed = 0;

  std::vector<Index> validation_rows(int fold) const;
  std::vector<Index> training_rows(int fold) const;
};

/// Throws InvalidInput unless 2 <= k <= n.
FoldPlan make_folds(Index n, int k, std::uint64_t seed);

struct CvOptions {
  int grid_size = 100;
  double lambda_min_ratio = 1e-3;
  AdmmConfig admm;
  SolveOptions solver;
  int threads = 1;  // folds processed concurrently; 0 = default_thread_count()
};

struct FoldDiagnostics {
  int fold = 0;
  Index n_train = 0;
  Index n_validation = 0;
  PsdResult train_psd;       // sigma_tilde dropped to keep reports small
  PsdResult validation_psd;  // likewise
  bool path_converged = true;
};

struct CvReport {
  std::vector<double> lambdas;
  // Mean over folds of beta_k' (Sigma_hat_k)_+ beta_k - 2 rho_k' beta_k;
  // +inf where some fold's training objective is unbounded.
  std::vector<double> corrected_loss;
  // Mean over folds of (1/n_k) ||y_k - Z_k beta_k||^2, when requested.
  std::optional<std::vector<double>> naive_loss;
  std::size_t selected_index = 0;
  double lambda_selected = 0.0;
  std::vector<FoldDiagnostics> folds;

  bool all_converged() const;
};

/// Index of the smallest loss; the first one on ties.
std::size_t argmin_first(const std::vector<double>& loss);

/// Runs both criteria from one set of per-fold fits. `select_naive` chooses
/// which loss determines lambda_selected. The grid is anchored at the
/// full-data ||rho_tilde||_inf and shared by all folds.
CvReport cross_validate(const CorruptedDataset& data, const ErrorModel& model,
                        const FoldPlan& folds, const CvOptions& opts, bool with_naive,
                        bool select_naive = false);

/// Same, on a caller-provided decreasing grid.
CvReport cross_validate(const CorruptedDataset& data, const ErrorModel& model,
                        const FoldPlan& folds, const std::vector<double>& lambdas,
                        const CvOptions& opts, bool with_naive, bool select_naive = false);

/// Corrected K-fold cross-validation.
CvReport corrected_cv(const CorruptedDataset& data, const ErrorModel& model,
                      const FoldPlan& folds, const CvOptions& opts = {});

/// Baseline that scores held-out residuals on the observed Z. Training-side
/// estimation is identical to corrected_cv, hence the error model.
CvReport naive_cv(const CorruptedDataset& data, const ErrorModel& model, const FoldPlan& folds,
                  const CvOptions& opts = {});

}  // namespace cocolasso
