#include "cocolasso/psd_projection.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace cocolasso;

TEST_CASE("l1 ball projection examples") {
  Vector x(2);
  x << 1.0, 0.5;
  CHECK(l1_ball_project(x, 2.0) == x);
  x << 3.0, 1.0;
  const Vector v = l1_ball_project(x, 2.0);
  CHECK(v(0) == 2.0);
  CHECK(v(1) == 0.0);
  x << -3.0, 0.0;
  const Vector w = l1_ball_project(x, 2.0);
  CHECK(w(0) == -2.0);
  CHECK(w(1) == 0.0);
  CHECK_THROWS_AS(l1_ball_project(x, 0.0), InvalidInput);
  CHECK_THROWS_AS(l1_ball_project(x, -1.0), InvalidInput);
}

TEST_CASE("l1 ball projection matches the bisection oracle") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> dim(1, 40);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.01, 3.0);
  for (int c = 0; c < 500; ++c) {
    Vector x(dim(rng));
    for (auto& v : x) v = normal(rng) * (c % 3 == 0 ? 10.0 : 1.0);
    const double r = unif(rng) * (c % 2 ? 1.0 : x.lpNorm<1>());
    const Vector v = l1_ball_project(x, r);
    CHECK((v - oracle::l1_ball_bisection(x, r)).lpNorm<Eigen::Infinity>() <= 1e-9);
    CHECK(v.lpNorm<1>() <= r + 1e-12);
  }
}

TEST_CASE("l1 ball projection has the soft-threshold form") {
  std::mt19937_64 rng(22);
  std::normal_distribution<double> normal;
  Vector x(15);
  for (auto& v : x) v = normal(rng);
  const Vector v = l1_ball_project(x, 1.0);
  double theta = -1.0;
  for (Index i = 0; i < x.size(); ++i) {
    if (v(i) == 0.0) continue;
    CHECK(v(i) * x(i) > 0.0);
    const double t = std::abs(x(i)) - std::abs(v(i));
    if (theta < 0) theta = t;
    CHECK(t == doctest::Approx(theta).epsilon(1e-12));
  }
  for (Index i = 0; i < x.size(); ++i)
    if (v(i) == 0.0) CHECK(std::abs(x(i)) <= theta + 1e-12);
}

TEST_CASE("eigen_clamp examples") {
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 2.0, 3.0;
  CHECK(eigen_clamp(d, 0.0) == d);
  d.diagonal() << -1.0, 3.0;
  const Matrix c = eigen_clamp(d, 0.0);
  CHECK(c(0, 0) == doctest::Approx(0.0));
  CHECK(c(1, 1) == doctest::Approx(3.0));
  Matrix a(2, 2);
  a << 0, 1, 1, 0;
  CHECK((eigen_clamp(a, 0.0) - Matrix::Constant(2, 2, 0.5)).cwiseAbs().maxCoeff() < 1e-14);
  Matrix asym(2, 2);
  asym << 0, 1, 2, 0;
  CHECK_THROWS_AS(eigen_clamp(asym, 0.0), InvalidInput);
}

TEST_CASE("eigen_clamp floors the spectrum and keeps eigenvectors") {
  std::mt19937_64 rng(23);
  for (int c = 0; c < 20; ++c) {
    const Matrix m = oracle::random_symmetric(6, 1.0, rng);
    const double eps = c % 2 ? 0.0 : 0.1;
    const Matrix out = eigen_clamp(m, eps);
    CHECK((out - out.transpose()).cwiseAbs().maxCoeff() == 0.0);
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    const Vector target = es.eigenvalues().cwiseMax(eps);
    const Matrix expect = es.eigenvectors() * target.asDiagonal() * es.eigenvectors().transpose();
    CHECK((out - expect).cwiseAbs().maxCoeff() < 1e-12);
  }
  const Matrix pd = oracle::random_pd(5, 0.5, rng);
  CHECK((eigen_clamp(pd, 0.1) - pd).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("nearest_psd examples") {
  SUBCASE("identity is feasible") {
    for (int p : {1, 3, 7}) {
      const auto r = nearest_psd(Matrix::Identity(p, p));
      CHECK(r.max_norm_distance == 0.0);
      CHECK(r.converged);
    }
  }
  SUBCASE("[[1,2],[2,1]]") {
    Matrix k(2, 2);
    k << 1, 2, 2, 1;
    const auto r = nearest_psd(k);
    CHECK(r.converged);
    CHECK(r.max_norm_distance == doctest::Approx(0.5).epsilon(1e-6));
    CHECK((r.sigma_tilde - Matrix::Constant(2, 2, 1.5)).cwiseAbs().maxCoeff() < 1e-6);
  }
  SUBCASE("scalar clamp") {
    AdmmConfig cfg;
    cfg.eps_floor = 1e-4;
    const auto r = nearest_psd(Matrix::Constant(1, 1, -1.0), cfg);
    CHECK(r.sigma_tilde(0, 0) == 1e-4);
    CHECK(r.iterations == 0);
  }
}

TEST_CASE("nearest_psd validates input") {
  Matrix a(2, 2);
  a << 1, 0, 1, 1;
  CHECK_THROWS_AS(nearest_psd(a), InvalidInput);
  CHECK_THROWS_AS(nearest_psd(Matrix::Zero(2, 3)), InvalidInput);
  Matrix nan = Matrix::Identity(2, 2);
  nan(1, 1) = std::nan("");
  CHECK_THROWS_AS(nearest_psd(nan), InvalidInput);
  AdmmConfig bad;
  bad.mu = 0.0;
  CHECK_THROWS_AS(nearest_psd(Matrix::Identity(2, 2), bad), InvalidInput);
}

TEST_CASE("nearest_psd properties on a random corpus") {
  std::mt19937_64 rng(24);
  for (int c = 0; c < 12; ++c) {
    const Index p = 2 + c % 9;
    const Matrix k = oracle::random_symmetric(p, 1.0, rng);
    AdmmConfig cfg;
    cfg.eps_floor = c % 3 == 0 ? 0.05 : 0.0;
    const auto r = nearest_psd(k, cfg);
    CHECK(oracle::smallest_eigenvalue(r.sigma_tilde) >= cfg.eps_floor - 1e-8);
    CHECK(r.max_norm_distance == (r.sigma_tilde - k).cwiseAbs().maxCoeff());
    CHECK((r.sigma_tilde - r.sigma_tilde.transpose()).cwiseAbs().maxCoeff() == 0.0);
    // Any PSD matrix bounds the optimum; the Frobenius projection is one.
    Eigen::SelfAdjointEigenSolver<Matrix> es(k);
    const Matrix frob = es.eigenvectors() * es.eigenvalues().cwiseMax(cfg.eps_floor).asDiagonal() *
                        es.eigenvectors().transpose();
    CHECK(r.max_norm_distance <= (frob - k).cwiseAbs().maxCoeff() + 1e-6);
  }
}

TEST_CASE("nearest_psd is idempotent on feasible input") {
  std::mt19937_64 rng(25);
  for (int c = 0; c < 5; ++c) {
    const Matrix k = oracle::random_pd(6, 0.2, rng);
    const auto r = nearest_psd(k);
    CHECK(r.max_norm_distance <= 1e-7);
  }
}

TEST_CASE("nearest_psd is near-optimal on small matrices") {
  std::mt19937_64 rng(26);
  for (int c = 0; c < 16; ++c) {
    const Matrix k = oracle::random_symmetric(c % 2 ? 3 : 2, 2.0, rng);
    const auto r = nearest_psd(k);
    const double best = oracle::nearest_psd_distance_bruteforce(k, static_cast<std::uint64_t>(c));
    CHECK(r.max_norm_distance <= best + 1e-3);
    CHECK(r.max_norm_distance >= best - 1e-3);
  }
}

TEST_CASE("restart keeps the best run when nothing converges") {
  std::mt19937_64 rng(27);
  const Matrix k = oracle::random_symmetric(8, 1.0, rng);
  AdmmConfig cfg;
  cfg.max_iter = 3;
  const auto r = nearest_psd(k, cfg);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 9);
  CHECK(oracle::smallest_eigenvalue(r.sigma_tilde) >= -1e-8);
  cfg.restart = false;
  CHECK(nearest_psd(k, cfg).iterations == 3);
}

TEST_CASE("lower-triangle vectorization round trip") {
  Matrix m(3, 3);
  m << 1, 2, 3, 2, 4, 5, 3, 5, 6;
  const Vector v = vec_lower(m);
  REQUIRE(v.size() == 6);
  CHECK(v(0) == 1);
  CHECK(v(1) == 2);
  CHECK(v(2) == 3);
  CHECK(v(3) == 4);
  CHECK(mat_lower(v, 3) == m);
}
