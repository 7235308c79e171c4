#include "cocolasso/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace cocolasso {

namespace {

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

void check_problem(const QuadraticProblem& pb, const Vector& beta0) {
  const Index p = pb.sigma.rows();
  if (pb.sigma.cols() != p) throw InvalidInput("Gram matrix must be square");
  if (pb.rho.size() != p || beta0.size() != p)
    throw InvalidInput("coefficient and linear-term lengths must equal " + std::to_string(p));
  if (!(pb.lambda >= 0.0) || !std::isfinite(pb.lambda))
    throw InvalidInput("lambda must be a finite non-negative number");
  if (!pb.sigma.allFinite() || !pb.rho.allFinite() || !beta0.allFinite())
    throw InvalidInput("problem data must be finite");
}

void check_psd(const Eigen::Ref<const Matrix>& sigma, double slack) {
  const double lmin = min_eigenvalue(sigma);
  if (lmin < -slack)
    throw InvalidInput("Gram matrix is not positive semi-definite (min eigenvalue " +
                       std::to_string(lmin) + "); project it first");
}

// Coordinates whose curvature is numerically zero are pinned at 0.
double pin_threshold(const Eigen::Ref<const Matrix>& sigma) {
  const double top = sigma.size() ? sigma.diagonal().cwiseAbs().maxCoeff() : 0.0;
  return 1e-14 * std::max(1.0, top);
}

constexpr int kActiveBurst = 25;
constexpr int kPolishStart = 64;

// Certifies that the objective decreases without bound along v = N N' x:
// Sigma v = 0, so f(beta + t v) <= f(beta) - t (rho'v - lambda ||v||_1).
bool unbounded_along(const QuadraticProblem& pb, const Matrix& null_basis, const Vector& x) {
  if (null_basis.cols() == 0) return false;
  const Vector v = null_basis * (null_basis.transpose() * x);
  const double l1 = v.lpNorm<1>();
  if (!(l1 > 0.0)) return false;
  const double margin = 1e-10 * pb.rho.lpNorm<Eigen::Infinity>() * l1;
  return pb.rho.dot(v) > pb.lambda * l1 + margin;
}

enum class FaceStep { kNone, kMoved, kUnbounded };

// Minimizes the objective over the current face (signs of the support fixed,
// every other coordinate 0) by moving straight towards the face minimizer,
// or along a flat descent direction when the support Gram block is
// singular. A coordinate that reaches 0 on the way is dropped and the step
// repeated, so the objective never increases. A flat descent direction that
// never reaches a sign change is an exact unboundedness certificate.
FaceStep minimize_on_face(const QuadraticProblem& pb, Vector& beta) {
  const double margin = 1e-10 * pb.rho.lpNorm<Eigen::Infinity>();
  bool moved = false;
  std::vector<Index> act;
  for (Index round = 0; round < beta.size(); ++round) {
    act.clear();
    for (Index j = 0; j < beta.size(); ++j)
      if (beta(j) != 0.0) act.push_back(j);
    const auto a = static_cast<Index>(act.size());
    if (a == 0) break;
    Matrix saa(a, a);
    Vector c(a), cur(a);
    for (Index u = 0; u < a; ++u) {
      for (Index v = 0; v < a; ++v) saa(u, v) = pb.sigma(act[u], act[v]);
      cur(u) = beta(act[u]);
      c(u) = pb.rho(act[u]) - pb.lambda * (cur(u) > 0 ? 1.0 : -1.0);
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(saa);
    if (es.info() != Eigen::Success) break;
    const Vector& w = es.eigenvalues();
    const Matrix& q = es.eigenvectors();
    const double cut = 1e-10 * std::max(1.0, w(a - 1));
    Index k = 0;
    while (k < a && w(k) <= cut) ++k;
    const Vector qc = q.transpose() * c;

    Vector dir;
    bool flat = false;
    if (k > 0) {
      dir = q.leftCols(k) * qc.head(k);
      // c'dir is the linear decrease rate along dir.
      flat = c.dot(dir) > margin * dir.lpNorm<1>();
    }
    if (!flat) {
      const Vector target =
          q.rightCols(a - k) * (qc.tail(a - k).array() / w.tail(a - k).array()).matrix();
      dir = target - cur;
    }

    double t = flat ? std::numeric_limits<double>::infinity() : 1.0;
    Index block = -1;
    for (Index u = 0; u < a; ++u) {
      if (cur(u) * dir(u) < 0.0) {
        const double tu = -cur(u) / dir(u);
        if (tu < t) {
          t = tu;
          block = u;
        }
      }
    }
    if (block < 0 && flat) return FaceStep::kUnbounded;
    if (!(t > 0.0) || !std::isfinite(t)) break;
    cur += t * dir;
    if (block >= 0) cur(block) = 0.0;
    if (!cur.allFinite()) break;
    for (Index u = 0; u < a; ++u) beta(act[u]) = cur(u);
    moved = true;
    if (block < 0) break;
  }
  return moved ? FaceStep::kMoved : FaceStep::kNone;
}

void mark_unbounded(LassoFit& fit) {
  fit.unbounded = true;
  fit.converged = false;
  fit.beta.setConstant(std::numeric_limits<double>::quiet_NaN());
  fit.kkt_residual = std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

double objective(const QuadraticProblem& pb, const Vector& beta) {
  return 0.5 * beta.dot(pb.sigma * beta) - pb.rho.dot(beta) + pb.lambda * beta.lpNorm<1>();
}

Matrix null_space_basis(const Matrix& sigma) {
  if (sigma.size() == 0) return Matrix(0, 0);
  Eigen::SelfAdjointEigenSolver<Matrix> es(sigma);
  if (es.info() != Eigen::Success) throw NumericalError("symmetric eigendecomposition failed");
  const auto& ev = es.eigenvalues();
  const double cut = 1e-10 * std::max(1.0, ev(ev.size() - 1));
  Index k = 0;
  while (k < ev.size() && ev(k) <= cut) ++k;
  return es.eigenvectors().leftCols(k);
}

double kkt_residual(const QuadraticProblem& pb, const Vector& beta) {
  const Vector g = pb.sigma * beta - pb.rho;
  double worst = 0.0;
  for (Index j = 0; j < beta.size(); ++j) {
    const double v = beta(j) == 0.0 ? std::abs(g(j)) - pb.lambda
                                    : std::abs(g(j) + pb.lambda * (beta(j) > 0 ? 1.0 : -1.0));
    worst = std::max(worst, v);
  }
  return worst;
}

LassoFit solve(const QuadraticProblem& pb, const Vector& beta0, const SolveOptions& opts,
               const Matrix* null_basis) {
  check_problem(pb, beta0);
  Matrix own_basis;
  if (opts.check_psd) {
    check_psd(pb.sigma, opts.psd_slack);
    if (null_basis == nullptr) {
      own_basis = null_space_basis(pb.sigma);
      null_basis = &own_basis;
    }
  }

  const Index p = pb.sigma.rows();
  const double pin = pin_threshold(pb.sigma);
  const double lambda = pb.lambda;

  LassoFit fit;
  fit.beta = beta0;
  for (Index j = 0; j < p; ++j)
    if (pb.sigma(j, j) <= pin) fit.beta(j) = 0.0;

  if (null_basis != nullptr && unbounded_along(pb, *null_basis, pb.rho)) {
    mark_unbounded(fit);
    return fit;
  }

  Vector grad(p);
  std::vector<Index> active;
  active.reserve(static_cast<std::size_t>(p));

  // One coordinate update; returns |change|.
  auto update = [&](Index j) {
    const double d = pb.sigma(j, j);
    if (d <= pin) return 0.0;
    const double old = fit.beta(j);
    const double next = soft_threshold(d * old - grad(j), lambda) / d;
    const double delta = next - old;
    if (delta != 0.0) {
      fit.beta(j) = next;
      grad.noalias() += delta * pb.sigma.col(j);
    }
    return std::abs(delta);
  };

  int next_polish = kPolishStart;
  while (fit.sweeps < opts.max_iter) {
    // Full sweep over all coordinates with a freshly computed gradient.
    grad.noalias() = pb.sigma * fit.beta - pb.rho;
    double change = 0.0;
    for (Index j = 0; j < p; ++j) change = std::max(change, update(j));
    ++fit.sweeps;
    if (change <= opts.tol) {
      fit.converged = true;
      break;
    }
    if (null_basis != nullptr && unbounded_along(pb, *null_basis, fit.beta)) {
      mark_unbounded(fit);
      return fit;
    }
    // Ill-conditioned problems converge slowly under coordinate descent;
    // jump to the exact solution once the signed support settles.
    if (fit.sweeps >= next_polish) {
      next_polish *= 2;
      const FaceStep step = minimize_on_face(pb, fit.beta);
      if (step == FaceStep::kUnbounded) {
        mark_unbounded(fit);
        return fit;
      }
      if (step == FaceStep::kMoved) continue;
    }
    // Then iterate on the current support for a while.
    active.clear();
    for (Index j = 0; j < p; ++j)
      if (fit.beta(j) != 0.0) active.push_back(j);
    for (int burst = 0; burst < kActiveBurst && fit.sweeps < opts.max_iter; ++burst) {
      double inner = 0.0;
      for (Index j : active) inner = std::max(inner, update(j));
      ++fit.sweeps;
      if (inner <= opts.tol) break;
    }
  }
  fit.kkt_residual = kkt_residual(pb, fit.beta);
  if (fit.converged) {
    // Sharpen the converged iterate to the exact face minimizer.
    Vector sharp = fit.beta;
    if (minimize_on_face(pb, sharp) == FaceStep::kMoved) {
      const double res = kkt_residual(pb, sharp);
      if (res <= fit.kkt_residual) {
        fit.beta = std::move(sharp);
        fit.kkt_residual = res;
      }
    }
  }
  return fit;
}

bool SolutionPath::all_converged() const {
  for (std::size_t l = 0; l < converged.size(); ++l)
    if (!converged[l] && !unbounded[l]) return false;
  return true;
}

bool SolutionPath::any_unbounded() const {
  return std::any_of(unbounded.begin(), unbounded.end(), [](bool u) { return u; });
}

std::vector<double> lambda_grid(double lambda_max, int grid_size, double min_ratio) {
  if (grid_size < 1) throw InvalidInput("grid size must be at least 1");
  if (!(lambda_max > 0.0) || !std::isfinite(lambda_max))
    throw InvalidInput("lambda_max must be positive (is rho identically zero?)");
  if (grid_size == 1) return {lambda_max};
  if (!(min_ratio > 0.0 && min_ratio < 1.0))
    throw InvalidInput("lambda_min_ratio must lie in (0, 1)");
  std::vector<double> grid(static_cast<std::size_t>(grid_size));
  const double step = std::log(min_ratio) / static_cast<double>(grid_size - 1);
  for (int k = 0; k < grid_size; ++k) grid[k] = lambda_max * std::exp(step * k);
  grid.back() = lambda_max * min_ratio;
  return grid;
}

SolutionPath solution_path(const Matrix& sigma, const Vector& rho, int grid_size,
                           double lambda_min_ratio, const SolveOptions& opts) {
  if (grid_size < 2) throw InvalidInput("grid size must be at least 2");
  if (rho.size() == 0) throw InvalidInput("empty problem");
  return solution_path(sigma, rho, lambda_grid(rho.lpNorm<Eigen::Infinity>(), grid_size,
                                               lambda_min_ratio),
                       opts);
}

SolutionPath solution_path(const Matrix& sigma, const Vector& rho,
                           const std::vector<double>& lambdas, const SolveOptions& opts) {
  for (std::size_t k = 1; k < lambdas.size(); ++k)
    if (!(lambdas[k] < lambdas[k - 1])) throw InvalidInput("lambda grid must be strictly decreasing");
  if (sigma.rows() != sigma.cols() || rho.size() != sigma.rows())
    throw InvalidInput("Gram matrix and linear term dimensions disagree");
  if (opts.check_psd && sigma.size() > 0) check_psd(sigma, opts.psd_slack);
  const Matrix basis = null_space_basis(sigma);
  SolveOptions inner = opts;
  inner.check_psd = false;

  SolutionPath path;
  path.lambdas = lambdas;
  Vector beta = Vector::Zero(rho.size());
  bool unbounded = false;
  for (double lambda : lambdas) {
    LassoFit fit;
    if (unbounded) {
      fit.beta = beta;
      mark_unbounded(fit);
    } else {
      fit = solve({sigma, rho, lambda}, beta, inner, &basis);
      unbounded = fit.unbounded;
      if (!unbounded) beta = fit.beta;
    }
    path.betas.push_back(std::move(fit.beta));
    path.kkt_residuals.push_back(fit.kkt_residual);
    path.iterations.push_back(fit.sweeps);
    path.converged.push_back(fit.converged);
    path.unbounded.push_back(fit.unbounded);
  }
  return path;
}

CholeskyReformulation cholesky_reformulate(const Matrix& sigma, const Vector& rho, Index n) {
  if (n <= 0) throw InvalidInput("sample size must be positive");
  if (sigma.rows() != sigma.cols() || rho.size() != sigma.rows())
    throw InvalidInput("Gram matrix and linear term dimensions disagree");
  Eigen::LLT<Matrix> llt(sigma);
  const double top = sigma.diagonal().cwiseAbs().maxCoeff();
  if (llt.info() != Eigen::Success ||
      Matrix(llt.matrixL()).diagonal().array().square().minCoeff() <= 1e-12 * std::max(top, 1e-300)) {
    throw NumericalError(
        "Gram matrix is not numerically positive definite; project it with a positive "
        "eigenvalue floor before the Cholesky reformulation");
  }
  const double root_n = std::sqrt(static_cast<double>(n));
  CholeskyReformulation out;
  out.z_tilde = root_n * Matrix(llt.matrixU());
  // sqrt(n) L y~ = n rho
  out.y_tilde = root_n * llt.matrixL().solve(rho);
  return out;
}

LassoFit least_squares_lasso(const Matrix& x, const Vector& y, double lambda,
                             const Vector& beta0, const SolveOptions& opts) {
  const Index m = x.rows();
  const Index p = x.cols();
  if (y.size() != m || beta0.size() != p) throw InvalidInput("design and response shapes disagree");
  if (!(lambda >= 0.0)) throw InvalidInput("lambda must be non-negative");
  const double inv_m = 1.0 / static_cast<double>(m);
  const Vector curvature = x.colwise().squaredNorm().transpose() * inv_m;

  LassoFit fit;
  fit.beta = beta0;
  Vector resid = y - x * fit.beta;
  for (; fit.sweeps < opts.max_iter;) {
    double change = 0.0;
    for (Index j = 0; j < p; ++j) {
      const double d = curvature(j);
      if (d <= 0.0) {
        fit.beta(j) = 0.0;
        continue;
      }
      const double old = fit.beta(j);
      const double next = soft_threshold(x.col(j).dot(resid) * inv_m + d * old, lambda) / d;
      if (next != old) {
        resid.noalias() -= (next - old) * x.col(j);
        fit.beta(j) = next;
        change = std::max(change, std::abs(next - old));
      }
    }
    ++fit.sweeps;
    if (change <= opts.tol) {
      fit.converged = true;
      break;
    }
  }
  const Matrix gram = x.transpose() * x * inv_m;
  const Vector cross = x.transpose() * y * inv_m;
  fit.kkt_residual = kkt_residual({gram, cross, lambda}, fit.beta);
  return fit;
}

}  // namespace cocolasso
