#pragma once

#include "cocolasso/common.hpp"

namespace cocolasso {

/// Settings for the max-norm nearest-PSD ADMM.
struct AdmmConfig {
  double mu = 10.0;         // augmented-Lagrangian penalty
  double eps_floor = 0.0;   // eigenvalue floor: the output satisfies A >= eps_floor * I
  double tol_primal = 1e-7; // relative: ||A - B - S||_F <= tol_primal * (1 + ||S||_F)
  double tol_dual = 1e-7;   // ||B_{k+1} - B_k||_F / mu <= tol_dual
  int max_iter = 20000;
  // On non-convergence, retry with the remaining penalties of {1, 10, 100}.
  bool restart = true;
};

/// Throws InvalidInput on an out-of-domain configuration.
void validate(const AdmmConfig& cfg);

struct PsdResult {
  Matrix sigma_tilde;
  int iterations = 0;  // summed over restarts
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double max_norm_distance = 0.0;  // ||sigma_tilde - sigma_hat||_max
  double mu = 0.0;                 // penalty of the run that produced sigma_tilde
  bool converged = false;
};

/// Euclidean projection of x onto {v : ||v||_1 <= radius}.
Vector l1_ball_project(const Vector& x, double radius);

/// Spectral clamp: sum_j max(lambda_j, eps) p_j p_j'. Throws on asymmetric
/// or non-finite input.
Matrix eigen_clamp(const Matrix& m, double eps);

/// Nearest matrix to sigma_hat in elementwise max-norm among {A : A >= eps I},
/// computed by ADMM on A - B = sigma_hat. Non-convergence is reported via
/// `converged`, never thrown. Throws InvalidInput for non-square, asymmetric
/// or non-finite input.
PsdResult nearest_psd(const Matrix& sigma_hat, const AdmmConfig& cfg = {});

/// Lower-triangular (column-major, diagonal included) vectorization and its
/// inverse for symmetric matrices.
Vector vec_lower(const Matrix& m);
Matrix mat_lower(const Vector& v, Index p);

}  // namespace cocolasso
