#include "cocolasso/psd_projection.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace cocolasso {

namespace {

void require_symmetric(const Matrix& m, const char* what) {
  if (m.rows() != m.cols())
    throw InvalidInput(std::string(what) + " must be square, got " + std::to_string(m.rows()) +
                       "x" + std::to_string(m.cols()));
  if (!m.allFinite()) throw InvalidInput(std::string(what) + " has non-finite entries");
  const double scale = std::max(1.0, max_norm(m));
  if (m.size() > 0 && (m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw InvalidInput(std::string(what) + " must be symmetric");
}

// Soft-threshold level theta of the projection onto the l1 ball, or nullopt
// when the input already lies inside. `mags` holds |x_i| and is reordered.
//
// Entries at or below the lower bound (||x||_1 - r) / m can never survive the
// threshold, so they are dropped before the sort-based search.
std::optional<double> l1_threshold(std::vector<double>& mags, double radius) {
  double total = 0.0;
  for (double a : mags) total += a;
  if (total <= radius) return std::nullopt;
  const double lower = (total - radius) / static_cast<double>(mags.size());
  auto keep_end = std::partition(mags.begin(), mags.end(), [lower](double a) { return a > lower; });
  std::sort(mags.begin(), keep_end, std::greater<>());
  double cumsum = 0.0;
  double theta = 0.0;
  std::size_t k = 0;
  for (auto it = mags.begin(); it != keep_end; ++it) {
    ++k;
    cumsum += *it;
    const double candidate = (cumsum - radius) / static_cast<double>(k);
    if (*it > candidate) theta = candidate;
    else break;
  }
  return std::max(theta, 0.0);
}

// (M)_eps written as a low-rank correction of whichever spectral side is
// smaller, then symmetrized.
Matrix clamp_symmetric(const Matrix& m, double eps) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.info() != Eigen::Success)
    throw NumericalError("symmetric eigendecomposition failed");
  const Vector& w = es.eigenvalues();  // ascending
  const Matrix& v = es.eigenvectors();
  const Index p = m.rows();
  Index below = 0;
  while (below < p && w(below) < eps) ++below;
  if (below == 0) return m;
  Matrix out;
  if (below <= p - below) {
    const auto vb = v.leftCols(below);
    const Vector shift = (eps - w.head(below).array()).matrix();
    out = m + vb * shift.asDiagonal() * vb.transpose();
  } else {
    const Index above = p - below;
    out = Matrix::Identity(p, p) * eps;
    if (above > 0) {
      const auto va = v.rightCols(above);
      const Vector lift = (w.tail(above).array() - eps).matrix();
      out.noalias() += va * lift.asDiagonal() * va.transpose();
    }
  }
  return symmetrize(out);
}

PsdResult run_admm(const Matrix& s, const AdmmConfig& cfg, double mu) {
  const Index p = s.rows();
  const double s_norm = s.norm();
  const Index lower_count = p * (p + 1) / 2;

  Matrix b = Matrix::Zero(p, p);
  Matrix lambda = Matrix::Zero(p, p);
  Matrix a;
  Matrix v(p, p);
  std::vector<double> mags(static_cast<std::size_t>(lower_count));

  PsdResult res;
  res.mu = mu;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    a = clamp_symmetric(b + s + mu * lambda, cfg.eps_floor);
    v = a - s - mu * lambda;

    // B = mat_l(vec_l(V) - l1(vec_l(V), mu)), i.e. entries of V clipped at
    // the soft-threshold level of its lower triangle.
    std::size_t k = 0;
    for (Index j = 0; j < p; ++j)
      for (Index i = j; i < p; ++i) mags[k++] = std::abs(v(i, j));
    const auto theta = l1_threshold(mags, mu);
    Matrix b_next = theta ? Matrix(v.cwiseMax(-*theta).cwiseMin(*theta)) : Matrix::Zero(p, p);

    const Matrix gap = a - b_next - s;
    lambda -= gap / mu;
    res.primal_residual = gap.norm();
    res.dual_residual = (b_next - b).norm() / mu;
    b = std::move(b_next);
    res.iterations = it;
    if (res.primal_residual <= cfg.tol_primal * (1.0 + s_norm) &&
        res.dual_residual <= cfg.tol_dual) {
      res.converged = true;
      break;
    }
  }
  res.sigma_tilde = std::move(a);
  res.max_norm_distance = max_norm(res.sigma_tilde - s);
  return res;
}

}  // namespace

void validate(const AdmmConfig& cfg) {
  if (!(cfg.mu > 0.0) || !std::isfinite(cfg.mu)) throw InvalidInput("ADMM mu must be positive");
  if (!(cfg.eps_floor >= 0.0) || !std::isfinite(cfg.eps_floor))
    throw InvalidInput("ADMM eigenvalue floor must be non-negative");
  if (!(cfg.tol_primal > 0.0) || !(cfg.tol_dual > 0.0))
    throw InvalidInput("ADMM tolerances must be positive");
  if (cfg.max_iter < 1) throw InvalidInput("ADMM max_iter must be at least 1");
}

Vector l1_ball_project(const Vector& x, double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius))
    throw InvalidInput("l1 ball radius must be positive");
  if (!x.allFinite()) throw InvalidInput("l1 ball projection input must be finite");
  std::vector<double> mags(x.data(), x.data() + x.size());
  for (double& a : mags) a = std::abs(a);
  const auto theta = l1_threshold(mags, radius);
  if (!theta) return x;
  const double t = *theta;
  return x.unaryExpr([t](double xi) {
    const double shrunk = std::max(std::abs(xi) - t, 0.0);
    return xi < 0.0 ? -shrunk : shrunk;
  });
}

Matrix eigen_clamp(const Matrix& m, double eps) {
  require_symmetric(m, "matrix");
  if (m.size() == 0) return m;
  return clamp_symmetric(symmetrize(m), eps);
}

PsdResult nearest_psd(const Matrix& sigma_hat, const AdmmConfig& cfg) {
  validate(cfg);
  require_symmetric(sigma_hat, "sigma_hat");
  const Matrix s = symmetrize(sigma_hat);
  const Index p = s.rows();

  if (p == 1) {
    PsdResult res;
    res.sigma_tilde = s.cwiseMax(cfg.eps_floor);
    res.max_norm_distance = max_norm(res.sigma_tilde - s);
    res.mu = cfg.mu;
    res.converged = true;
    return res;
  }

  PsdResult best = run_admm(s, cfg, cfg.mu);
  if (best.converged || !cfg.restart) return best;

  int total_iterations = best.iterations;
  for (double mu : std::array<double, 3>{1.0, 10.0, 100.0}) {
    if (mu == cfg.mu) continue;
    PsdResult attempt = run_admm(s, cfg, mu);
    total_iterations += attempt.iterations;
    if (attempt.converged || attempt.max_norm_distance < best.max_norm_distance)
      best = std::move(attempt);
    if (best.converged) break;
  }
  best.iterations = total_iterations;
  return best;
}

Vector vec_lower(const Matrix& m) {
  const Index p = m.rows();
  Vector out(p * (p + 1) / 2);
  Index k = 0;
  for (Index j = 0; j < p; ++j)
    for (Index i = j; i < p; ++i) out(k++) = m(i, j);
  return out;
}

Matrix mat_lower(const Vector& v, Index p) {
  if (v.size() != p * (p + 1) / 2)
    throw InvalidInput("vector length does not match a lower triangle of order " +
                       std::to_string(p));
  Matrix out(p, p);
  Index k = 0;
  for (Index j = 0; j < p; ++j)
    for (Index i = j; i < p; ++i) {
      out(i, j) = v(k);
      out(j, i) = v(k);
      ++k;
    }
  return out;
}

double min_eigenvalue(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("symmetric eigendecomposition failed");
  return es.eigenvalues()(0);
}

}  // namespace cocolasso
