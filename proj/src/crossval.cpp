#include "cocolasso/crossval.hpp"

#include "cocolasso/parallel.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace cocolasso {

std::vector<Index> FoldPlan::validation_rows(int fold) const {
  std::vector<Index> rows;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] == fold) rows.push_back(static_cast<Index>(i));
  return rows;
}

std::vector<Index> FoldPlan::training_rows(int fold) const {
  std::vector<Index> rows;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] != fold) rows.push_back(static_cast<Index>(i));
  return rows;
}

FoldPlan make_folds(Index n, int k, std::uint64_t seed) {
  if (k < 2) throw InvalidInput("number of folds must be at least 2");
  if (static_cast<Index>(k) > n)
    throw InvalidInput("number of folds (" + std::to_string(k) + ") exceeds sample size (" +
                       std::to_string(n) + ")");
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.assignment.assign(static_cast<std::size_t>(n), 0);
  const Index base = n / k;
  const Index extra = n % k;
  std::size_t pos = 0;
  for (int f = 0; f < k; ++f) {
    const Index size = base + (f < extra ? 1 : 0);
    for (Index i = 0; i < size; ++i) plan.assignment[static_cast<std::size_t>(perm[pos++])] = f;
  }
  return plan;
}

bool CvReport::all_converged() const {
  return std::all_of(folds.begin(), folds.end(), [](const FoldDiagnostics& d) {
    return d.train_psd.converged && d.validation_psd.converged && d.path_converged;
  });
}

std::size_t argmin_first(const std::vector<double>& loss) {
  if (loss.empty()) throw InvalidInput("cannot select from an empty loss curve");
  std::size_t best = 0;
  for (std::size_t i = 1; i < loss.size(); ++i)
    if (loss[i] < loss[best]) best = i;
  return best;
}

namespace {

struct FoldLosses {
  std::vector<double> corrected;
  std::vector<double> naive;
  FoldDiagnostics diag;
};

FoldLosses run_fold(const CorruptedDataset& data, const ErrorModel& model, const FoldPlan& plan,
                    int fold, const std::vector<double>& lambdas, const CvOptions& opts,
                    bool with_naive) {
  const auto train_rows = plan.training_rows(fold);
  const auto valid_rows = plan.validation_rows(fold);
  if (train_rows.size() < 2 || valid_rows.size() < 2)
    throw InvalidInput("fold " + std::to_string(fold) +
                       " leaves fewer than 2 rows for training or validation");
  const CorruptedDataset train = data.rows(train_rows);
  const CorruptedDataset valid = data.rows(valid_rows);

  FoldLosses out;
  out.diag.fold = fold;
  out.diag.n_train = train.n();
  out.diag.n_validation = valid.n();

  const SurrogatePair train_sur = build_surrogate(train, model);
  out.diag.train_psd = nearest_psd(train_sur.sigma_hat, opts.admm);
  SolveOptions solver = opts.solver;
  solver.check_psd = false;
  const SolutionPath path =
      solution_path(out.diag.train_psd.sigma_tilde, train_sur.rho_tilde, lambdas, solver);
  out.diag.path_converged = path.all_converged();
  out.diag.train_psd.sigma_tilde.resize(0, 0);

  const SurrogatePair valid_sur = build_surrogate(valid, model);
  out.diag.validation_psd = nearest_psd(valid_sur.sigma_hat, opts.admm);
  const Matrix& held_gram = out.diag.validation_psd.sigma_tilde;

  const double inv_nk = 1.0 / static_cast<double>(valid.n());
  out.corrected.resize(lambdas.size());
  if (with_naive) out.naive.resize(lambdas.size());
  constexpr double kUndefined = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < lambdas.size(); ++l) {
    if (path.unbounded[l]) {
      out.corrected[l] = kUndefined;
      if (with_naive) out.naive[l] = kUndefined;
      continue;
    }
    const Vector& beta = path.betas[l];
    out.corrected[l] = beta.dot(held_gram * beta) - 2.0 * valid_sur.rho_tilde.dot(beta);
    if (with_naive) out.naive[l] = (valid.y() - valid.z() * beta).squaredNorm() * inv_nk;
  }
  out.diag.validation_psd.sigma_tilde.resize(0, 0);
  return out;
}

}  // namespace

CvReport cross_validate(const CorruptedDataset& data, const ErrorModel& model,
                        const FoldPlan& folds, const CvOptions& opts, bool with_naive,
                        bool select_naive) {
  const SurrogatePair full = build_surrogate(data, model);
  const auto lambdas =
      lambda_grid(full.rho_tilde.lpNorm<Eigen::Infinity>(), opts.grid_size, opts.lambda_min_ratio);
  return cross_validate(data, model, folds, lambdas, opts, with_naive, select_naive);
}

CvReport cross_validate(const CorruptedDataset& data, const ErrorModel& model,
                        const FoldPlan& folds, const std::vector<double>& lambdas,
                        const CvOptions& opts, bool with_naive, bool select_naive) {
  validate(model, data.p());
  validate(opts.admm);
  if (static_cast<Index>(folds.assignment.size()) != data.n())
    throw InvalidInput("fold plan covers " + std::to_string(folds.assignment.size()) +
                       " rows but the dataset has " + std::to_string(data.n()));
  if (lambdas.empty()) throw InvalidInput("lambda grid is empty");

  std::vector<FoldLosses> per_fold(static_cast<std::size_t>(folds.k));
  parallel_for(per_fold.size(), opts.threads, [&](std::size_t f) {
    per_fold[f] = run_fold(data, model, folds, static_cast<int>(f), lambdas, opts, with_naive);
  });

  CvReport report;
  report.lambdas = lambdas;
  report.corrected_loss.assign(lambdas.size(), 0.0);
  if (with_naive) report.naive_loss.emplace(lambdas.size(), 0.0);
  const double inv_k = 1.0 / static_cast<double>(folds.k);
  for (auto& f : per_fold) {
    for (std::size_t l = 0; l < lambdas.size(); ++l) {
      report.corrected_loss[l] += f.corrected[l] * inv_k;
      if (with_naive) (*report.naive_loss)[l] += f.naive[l] * inv_k;
    }
    report.folds.push_back(std::move(f.diag));
  }
  report.selected_index =
      argmin_first(select_naive && with_naive ? *report.naive_loss : report.corrected_loss);
  report.lambda_selected = lambdas[report.selected_index];
  return report;
}

CvReport corrected_cv(const CorruptedDataset& data, const ErrorModel& model,
                      const FoldPlan& folds, const CvOptions& opts) {
  return cross_validate(data, model, folds, opts, false, false);
}

CvReport naive_cv(const CorruptedDataset& data, const ErrorModel& model, const FoldPlan& folds,
                  const CvOptions& opts) {
  return cross_validate(data, model, folds, opts, true, true);
}

}  // namespace cocolasso
