#include "cocolasso/crossval.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace cocolasso;

namespace {

CorruptedDataset clean_data(Index n, Index p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix x(n, p);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
  Vector beta = Vector::Zero(p);
  beta(0) = 2.0;
  beta(p - 1) = -1.0;
  Vector y = x * beta;
  for (auto& v : y) v += 0.5 * normal(rng);
  return CorruptedDataset(x, y);
}

}  // namespace

TEST_CASE("fold plans") {
  SUBCASE("balanced sizes") {
    const auto f = make_folds(4, 2, 1);
    CHECK(f.validation_rows(0).size() == 2);
    CHECK(f.validation_rows(1).size() == 2);
    const auto g = make_folds(5, 2, 1);
    std::vector<std::size_t> sizes{g.validation_rows(0).size(), g.validation_rows(1).size()};
    std::sort(sizes.begin(), sizes.end());
    CHECK(sizes == std::vector<std::size_t>{2, 3});
  }
  SUBCASE("partition") {
    const auto f = make_folds(23, 5, 9);
    std::vector<int> seen(23, 0);
    for (int k = 0; k < 5; ++k) {
      for (Index i : f.validation_rows(k)) ++seen[static_cast<std::size_t>(i)];
      CHECK(f.training_rows(k).size() + f.validation_rows(k).size() == 23);
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
  }
  SUBCASE("deterministic in the seed") {
    CHECK(make_folds(50, 5, 3).assignment == make_folds(50, 5, 3).assignment);
    CHECK(make_folds(50, 5, 3).assignment != make_folds(50, 5, 4).assignment);
  }
  SUBCASE("domain") {
    CHECK_THROWS_AS(make_folds(4, 5, 1), InvalidInput);
    CHECK_THROWS_AS(make_folds(4, 1, 1), InvalidInput);
  }
}

TEST_CASE("argmin takes the first minimum") {
  CHECK(argmin_first({3.0, 1.0, 1.0, 2.0}) == 1);
  CHECK_THROWS_AS(argmin_first({}), InvalidInput);
}

TEST_CASE("single-lambda grid selects it") {
  const auto data = clean_data(30, 4, 1);
  const ErrorModel model = AdditiveError{Matrix::Zero(4, 4)};
  CvOptions opts;
  const auto rep = cross_validate(data, model, make_folds(30, 3, 2), std::vector<double>{0.3},
                                  opts, false);
  CHECK(rep.selected_index == 0);
  CHECK(rep.lambda_selected == 0.3);
}

TEST_CASE("zero corruption: corrected and naive losses differ by a constant") {
  const Index n = 40, p = 5;
  const auto data = clean_data(n, p, 2);
  const ErrorModel model = AdditiveError{Matrix::Zero(p, p)};
  const auto plan = make_folds(n, 5, 11);
  CvOptions opts;
  opts.grid_size = 30;
  const auto rep = cross_validate(data, model, plan, opts, true);
  REQUIRE(rep.naive_loss);
  double offset = 0.0;
  for (int k = 0; k < plan.k; ++k) {
    const auto rows = plan.validation_rows(k);
    double yy = 0.0;
    for (Index i : rows) yy += data.y()(i) * data.y()(i);
    offset += yy / static_cast<double>(rows.size()) / plan.k;
  }
  for (std::size_t l = 0; l < rep.lambdas.size(); ++l)
    CHECK((*rep.naive_loss)[l] - rep.corrected_loss[l] == doctest::Approx(offset).epsilon(1e-10));
  const auto naive = naive_cv(data, model, plan, opts);
  CHECK(naive.selected_index == rep.selected_index);
  CHECK(rep.all_converged());
}

TEST_CASE("loss at the null model is zero") {
  const auto data = clean_data(25, 3, 3);
  const ErrorModel model = AdditiveError{0.1 * Matrix::Identity(3, 3)};
  const auto plan = make_folds(25, 5, 1);
  const auto rep = cross_validate(data, model, plan, std::vector<double>{1e6}, {}, true);
  CHECK(rep.corrected_loss.front() == 0.0);
  double expected = 0.0;
  for (int k = 0; k < plan.k; ++k) {
    const auto rows = plan.validation_rows(k);
    for (Index i : rows) expected += data.y()(i) * data.y()(i) / double(rows.size()) / plan.k;
  }
  CHECK(rep.naive_loss->front() == doctest::Approx(expected).epsilon(1e-14));
  CHECK_FALSE(corrected_cv(data, model, plan).naive_loss);
}

TEST_CASE("unbounded folds are never selected") {
  // p > n_train with additive noise: projected fold matrices are singular.
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal;
  const Index n = 20, p = 30;
  Matrix z(n, p);
  for (Index i = 0; i < z.size(); ++i) z.data()[i] = normal(rng);
  Vector y = 2.0 * z.col(0);
  for (auto& v : y) v += normal(rng);
  const ErrorModel model = AdditiveError{0.25 * Matrix::Identity(p, p)};
  CvOptions opts;
  opts.grid_size = 40;
  opts.lambda_min_ratio = 1e-3;
  const auto rep = corrected_cv(CorruptedDataset(z, y), model, make_folds(n, 4, 5), opts);
  CHECK(std::isfinite(rep.corrected_loss[rep.selected_index]));
  CHECK(std::isinf(rep.corrected_loss.back()));
}

TEST_CASE("thread count does not change the result") {
  const auto data = clean_data(60, 8, 6);
  const ErrorModel model = MissingError{Vector::Constant(8, 0.0)};
  const auto plan = make_folds(60, 5, 8);
  CvOptions one, many;
  one.grid_size = many.grid_size = 25;
  many.threads = 3;
  const auto a = cross_validate(data, model, plan, one, true);
  const auto b = cross_validate(data, model, plan, many, true);
  CHECK(a.corrected_loss == b.corrected_loss);
  CHECK(*a.naive_loss == *b.naive_loss);
  CHECK(a.selected_index == b.selected_index);
}

TEST_CASE("input validation") {
  const auto data = clean_data(20, 3, 7);
  const ErrorModel wrong = AdditiveError{Matrix::Zero(4, 4)};
  CHECK_THROWS_AS(corrected_cv(data, wrong, make_folds(20, 4, 1)), InvalidInput);
  const ErrorModel ok = AdditiveError{Matrix::Zero(3, 3)};
  CHECK_THROWS_AS(corrected_cv(data, ok, make_folds(19, 4, 1)), InvalidInput);
}
