#pragma once

#include "cocolasso/common.hpp"

#include <vector>

namespace cocolasso {

/// min_beta (1/2) beta' Sigma beta - rho' beta + lambda ||beta||_1
struct QuadraticProblem {
  Eigen::Ref<const Matrix> sigma;
  Eigen::Ref<const Vector> rho;
  double lambda;
};

struct SolveOptions {
  double tol = 1e-7;       // max absolute coefficient change over a sweep
  int max_iter = 100000;   // full sweeps
  double psd_slack = 1e-8; // allowed negative eigenvalue of Sigma
  // Skip the eigenvalue check (callers that just projected Sigma).
  bool check_psd = true;
};

struct LassoFit {
  Vector beta;
  int sweeps = 0;
  double kkt_residual = 0.0;
  bool converged = false;
  // The objective has no minimizer: some v with Sigma v = 0 has
  // rho'v > lambda ||v||_1. beta and kkt_residual are then NaN.
  bool unbounded = false;
};

/// Orthonormal basis of the numerical null space of a PSD matrix
/// (eigenvalues <= 1e-10 * max(1, largest eigenvalue)).
Matrix null_space_basis(const Matrix& sigma);

/// Cyclic coordinate descent on the Gram form. Coordinates with a zero
/// diagonal stay at 0. On iteration exhaustion the last iterate is returned
/// with converged == false. Throws InvalidInput if Sigma is not PSD within
/// psd_slack or shapes disagree.
///
/// Unboundedness is tested against `null_basis` (see null_space_basis); when
/// it is null the basis is computed here if opts.check_psd is set, and the
/// test is skipped otherwise.
LassoFit solve(const QuadraticProblem& problem, const Vector& beta0, const SolveOptions& opts = {},
               const Matrix* null_basis = nullptr);

double objective(const QuadraticProblem& problem, const Vector& beta);

/// Largest violation of the subgradient optimality conditions:
/// |g_j| - lambda for beta_j = 0, |g_j + lambda sign(beta_j)| otherwise,
/// where g = Sigma beta - rho.
double kkt_residual(const QuadraticProblem& problem, const Vector& beta);

struct SolutionPath {
  std::vector<double> lambdas;  // strictly decreasing
  std::vector<Vector> betas;
  std::vector<double> kkt_residuals;
  std::vector<int> iterations;
  std::vector<bool> converged;
  std::vector<bool> unbounded;  // once set, set for every smaller lambda too

  /// Every entry converged or was certified unbounded.
  bool all_converged() const;
  bool any_unbounded() const;
};

/// grid_size log-spaced values from lambda_max down to lambda_max * min_ratio.
std::vector<double> lambda_grid(double lambda_max, int grid_size, double min_ratio);

/// Warm-started path on the log grid anchored at lambda_max = ||rho||_inf.
SolutionPath solution_path(const Matrix& sigma, const Vector& rho, int grid_size = 100,
                           double lambda_min_ratio = 1e-3, const SolveOptions& opts = {});

/// Warm-started path on a caller-provided decreasing grid. Entries below the
/// first unbounded lambda are marked unbounded without solving.
SolutionPath solution_path(const Matrix& sigma, const Vector& rho,
                           const std::vector<double>& lambdas, const SolveOptions& opts = {});

/// Z~ = sqrt(n) L' and y~ with Z~' y~ = n rho, where Sigma = L L'.
struct CholeskyReformulation {
  Matrix z_tilde;
  Vector y_tilde;
};

/// Throws NumericalError when Sigma is not numerically positive definite;
/// project with a positive eigenvalue floor first.
CholeskyReformulation cholesky_reformulate(const Matrix& sigma, const Vector& rho, Index n);

/// Ordinary least-squares Lasso on a design matrix:
/// min (1/(2m)) ||y - X beta||^2 + lambda ||beta||_1, m = rows(X),
/// by residual-updating coordinate descent.
LassoFit least_squares_lasso(const Matrix& x, const Vector& y, double lambda,
                             const Vector& beta0, const SolveOptions& opts = {});

}  // namespace cocolasso
