#include "cocolasso/lasso.hpp"
#include "cocolasso/psd_projection.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace cocolasso;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST_CASE("solve examples") {
  SUBCASE("lambda above ||rho||_inf gives zero") {
    const Vector rho = vec({1.0, -2.0});
    const auto f = solve({Matrix::Identity(2, 2), rho, 2.0}, Vector::Zero(2));
    CHECK(f.beta.isZero(0.0));
    CHECK(f.converged);
  }
  SUBCASE("orthonormal design soft-thresholds") {
    const auto f = solve({Matrix::Identity(2, 2), vec({1.0, 0.2}), 0.5}, Vector::Zero(2));
    CHECK(f.beta(0) == doctest::Approx(0.5));
    CHECK(f.beta(1) == 0.0);
  }
  SUBCASE("correlated pair") {
    Matrix s(2, 2);
    s << 1, 0.5, 0.5, 1;
    const auto f = solve({s, vec({1.0, 1.0}), 0.25}, Vector::Zero(2));
    CHECK(f.beta(0) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(f.beta(1) == doctest::Approx(0.5).epsilon(1e-6));
    const auto o = oracle::lasso_by_enumeration(s, vec({1.0, 1.0}), 0.25);
    REQUIRE(o);
    CHECK((f.beta - *o).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("ties at |gradient| = lambda stay at zero") {
  const auto f = solve({Matrix::Identity(2, 2), vec({0.5, -0.5}), 0.5}, Vector::Zero(2));
  CHECK(f.beta.isZero(0.0));
}

TEST_CASE("zero-diagonal coordinates are pinned") {
  Matrix s = Matrix::Zero(2, 2);
  s(0, 0) = 1.0;
  const auto f = solve({s, vec({1.0, 0.05}), 0.1}, vec({0.0, 3.0}));
  CHECK(f.beta(1) == 0.0);
  CHECK(f.beta(0) == doctest::Approx(0.9));
}

TEST_CASE("solve rejects bad input") {
  Matrix s(2, 2);
  s << 1, 2, 2, 1;  // indefinite
  CHECK_THROWS_AS(solve({s, vec({1, 1}), 0.1}, Vector::Zero(2)), InvalidInput);
  CHECK_THROWS_AS(solve({Matrix::Identity(2, 2), vec({1, 1}), -1.0}, Vector::Zero(2)), InvalidInput);
  CHECK_THROWS_AS(solve({Matrix::Identity(2, 2), vec({1, 1, 1}), 0.1}, Vector::Zero(2)), InvalidInput);
}

TEST_CASE("solve matches sign-pattern enumeration and certifies KKT") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.05, 0.9);
  for (int c = 0; c < 60; ++c) {
    const Index p = 1 + c % 8;
    const Matrix s = oracle::random_pd(p, 0.05, rng);
    Vector r(p);
    for (auto& v : r) v = normal(rng);
    const double lambda = unif(rng) * r.lpNorm<Eigen::Infinity>();
    SolveOptions opts;
    const QuadraticProblem pb{s, r, lambda};
    const auto f = solve(pb, Vector::Zero(p), opts);
    REQUIRE(f.converged);
    CHECK(f.kkt_residual <= 1e-6);
    CHECK(f.kkt_residual == kkt_residual(pb, f.beta));
    const auto o = oracle::lasso_by_enumeration(s, r, lambda);
    REQUIRE(o);
    CHECK((f.beta - *o).cwiseAbs().maxCoeff() <= 1e-6);
  }
}

TEST_CASE("objective does not increase across sweeps") {
  std::mt19937_64 rng(32);
  std::normal_distribution<double> normal;
  const Index p = 12;
  const Matrix s = oracle::random_pd(p, 0.01, rng);
  Vector r(p);
  for (auto& v : r) v = normal(rng);
  const QuadraticProblem pb{s, r, 0.05};
  SolveOptions one;
  one.max_iter = 1;
  Vector beta = Vector::Zero(p);
  double prev = objective(pb, beta);
  for (int k = 0; k < 50; ++k) {
    beta = solve(pb, beta, one).beta;
    const double now = objective(pb, beta);
    CHECK(now <= prev + 1e-12);
    prev = now;
  }
}

TEST_CASE("lambda grid") {
  const auto g = lambda_grid(2.0, 2, 0.01);
  REQUIRE(g.size() == 2);
  CHECK(g[0] == 2.0);
  CHECK(g[1] == 2.0 * 0.01);
  const auto h = lambda_grid(1.0, 50, 1e-3);
  for (std::size_t k = 1; k < h.size(); ++k) CHECK(h[k] < h[k - 1]);
  CHECK(lambda_grid(3.0, 1, 0.5) == std::vector<double>{3.0});
  CHECK_THROWS_AS(lambda_grid(1.0, 5, 1.0), InvalidInput);
  CHECK_THROWS_AS(lambda_grid(0.0, 5, 0.1), InvalidInput);
}

TEST_CASE("solution path") {
  std::mt19937_64 rng(33);
  std::normal_distribution<double> normal;
  const Index p = 15;
  const Matrix s = oracle::random_pd(p, 0.02, rng);
  Vector r(p);
  for (auto& v : r) v = normal(rng);
  SolveOptions opts;
  const auto path = solution_path(s, r, 30, 1e-2, opts);
  REQUIRE(path.lambdas.size() == 30);
  CHECK(path.lambdas.front() == r.lpNorm<Eigen::Infinity>());
  CHECK(path.betas.front().isZero(0.0));
  CHECK(path.all_converged());
  CHECK_FALSE(path.any_unbounded());
  for (std::size_t l = 0; l < path.lambdas.size(); ++l) {
    CHECK(path.kkt_residuals[l] <= 1e-6);
    // Warm and cold starts agree.
    const auto cold = solve({s, r, path.lambdas[l]}, Vector::Zero(p), opts);
    CHECK((cold.beta - path.betas[l]).cwiseAbs().maxCoeff() <= 10 * opts.tol);
  }
  CHECK_THROWS_AS(solution_path(s, r, std::vector<double>{1.0, 1.0}, opts), InvalidInput);
}

TEST_CASE("unbounded objective is certified") {
  // Sigma = diag(1, 0) and rho_2 = 1: the objective falls along e_2 for
  // every lambda < 1.
  Matrix s = Matrix::Zero(2, 2);
  s(0, 0) = 1.0;
  const Vector r = vec({2.0, 1.0});
  const auto f = solve({s, r, 0.5}, Vector::Zero(2));
  CHECK(f.unbounded);
  CHECK_FALSE(f.converged);
  CHECK(std::isnan(f.beta(0)));
  const auto g = solve({s, r, 1.5}, Vector::Zero(2));
  CHECK_FALSE(g.unbounded);
  CHECK(g.beta(0) == doctest::Approx(0.5));
  CHECK(g.beta(1) == 0.0);

  const auto path = solution_path(s, r, std::vector<double>{2.0, 1.5, 0.9, 0.5}, {});
  CHECK(path.unbounded == std::vector<bool>{false, false, true, true});
  CHECK(path.all_converged());
  CHECK(path.any_unbounded());
}

TEST_CASE("unboundedness found along the iterate") {
  // rho lies in the range of Sigma's complement only through a mixed
  // direction: null space spanned by (1, -1, 0) / sqrt 2.
  Matrix s(3, 3);
  s << 1, 1, 0, 1, 1, 0, 0, 0, 1;
  const Vector r = vec({1.0, -0.2, 0.3});
  // rho'v / ||v||_1 = 0.6 for v = (1, -1, 0).
  const auto below = solve({s, r, 0.5}, Vector::Zero(3));
  CHECK(below.unbounded);
  const auto above = solve({s, r, 0.7}, Vector::Zero(3));
  CHECK_FALSE(above.unbounded);
  CHECK(above.converged);
  CHECK(above.kkt_residual <= 1e-6);
}

TEST_CASE("null space basis") {
  Matrix s = Matrix::Zero(3, 3);
  s(0, 0) = 2.0;
  s(1, 1) = 1e-13;
  const Matrix n = null_space_basis(s);
  CHECK(n.cols() == 2);
  CHECK((s * n).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(null_space_basis(Matrix::Identity(4, 4)).cols() == 0);
}

TEST_CASE("Cholesky reformulation") {
  SUBCASE("identity") {
    const Vector r = vec({1.0, -2.0, 0.5});
    const auto c = cholesky_reformulate(Matrix::Identity(3, 3), r, 4);
    CHECK((c.z_tilde - 2.0 * Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((c.y_tilde - 2.0 * r).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("reconstruction on random PD matrices") {
    std::mt19937_64 rng(34);
    std::normal_distribution<double> normal;
    for (int k = 0; k < 10; ++k) {
      const Index p = 3 + k;
      const Index n = 50;
      const Matrix s = oracle::random_pd(p, 0.1, rng);
      Vector r(p);
      for (auto& v : r) v = normal(rng);
      const auto c = cholesky_reformulate(s, r, n);
      CHECK((c.z_tilde.transpose() * c.z_tilde / double(n) - s).cwiseAbs().maxCoeff() <= 1e-8);
      CHECK((c.z_tilde.transpose() * c.y_tilde - double(n) * r).cwiseAbs().maxCoeff() <= 1e-6 * n);
    }
  }
  SUBCASE("singular input is refused") {
    Matrix s = Matrix::Ones(2, 2);
    CHECK_THROWS_AS(cholesky_reformulate(s, vec({1, 1}), 5), NumericalError);
  }
}

TEST_CASE("Cholesky route agrees with the direct solve") {
  std::mt19937_64 rng(35);
  std::normal_distribution<double> normal;
  const Index p = 10, n = 40;
  Matrix s = oracle::random_symmetric(p, 0.3, rng);
  s.diagonal().array() += 0.8;
  AdmmConfig cfg;
  cfg.eps_floor = 1e-3;  // strictly PD output so the factorization exists
  const Matrix st = nearest_psd(s, cfg).sigma_tilde;
  Vector r(p);
  for (auto& v : r) v = normal(rng);
  const auto c = cholesky_reformulate(st, r, n);
  for (double frac : {0.8, 0.3, 0.05}) {
    const double lambda = frac * r.lpNorm<Eigen::Infinity>();
    SolveOptions opts;
    opts.tol = 1e-10;
    const auto direct = solve({st, r, lambda}, Vector::Zero(p), opts);
    // (1/(2p)) ||y~ - Z~ b||^2 = (n/p) [ (1/2) b' S b - r' b ] + const.
    const auto ls = least_squares_lasso(c.z_tilde, c.y_tilde, lambda * double(n) / double(p),
                                        Vector::Zero(p), opts);
    REQUIRE(ls.converged);
    CHECK((direct.beta - ls.beta).cwiseAbs().maxCoeff() <= 1e-6);
  }
}
