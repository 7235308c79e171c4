#include "cocolasso/io.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

using namespace cocolasso;

TEST_CASE("matrix CSV round trip is bitwise") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  Matrix m(7, 4);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = std::ldexp(normal(rng), static_cast<int>(i) - 14);
  m(0, 0) = std::numeric_limits<double>::denorm_min();
  m(1, 1) = -0.0;
  m(2, 2) = 1.0 / 3.0;
  std::stringstream ss;
  io::write_matrix(ss, m);
  const Matrix back = io::parse_matrix(ss);
  REQUIRE(back.rows() == 7);
  REQUIRE(back.cols() == 4);
  for (Index i = 0; i < m.size(); ++i)
    CHECK(std::memcmp(&m.data()[i], &back.data()[i], sizeof(double)) == 0);
}

TEST_CASE("tables with missing cells") {
  std::istringstream in("\xEF\xBB\xBF\"x1\",x2,y\n1,,3\n4,NA,6\n7,8.5,nan\n");
  const auto t = io::parse_table(in);
  CHECK(t.header == std::vector<std::string>{"x1", "x2", "y"});
  CHECK(t.values(0, 0) == 1.0);
  CHECK_FALSE(t.observed(0, 1));
  CHECK_FALSE(t.observed(1, 1));
  CHECK(t.observed(2, 1));
  CHECK(t.values(2, 1) == 8.5);
  CHECK_FALSE(t.observed(2, 2));
  CHECK(t.column("y") == 2);
  CHECK_THROWS_AS(t.column("z"), InvalidInput);
  // The response has a missing cell.
  CHECK_THROWS_AS(io::dataset_from_table(t, "y"), InvalidInput);
  std::vector<std::string> names;
  const auto d = io::dataset_from_table(t, "x1", &names);
  CHECK(names == std::vector<std::string>{"x2", "y"});
  CHECK(d.y()(1) == 4.0);
  CHECK_FALSE(d.mask()(0, 0));
}

TEST_CASE("malformed cells name the line and column") {
  std::istringstream in("a,b\n1,2\n3,abc\n");
  try {
    io::parse_table(in, "data.csv");
    FAIL("expected an error");
  } catch (const InvalidInput& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(msg.find("'b'") != std::string::npos);
    CHECK(msg.find("abc") != std::string::npos);
  }
  std::istringstream ragged("a,b\n1,2,3\n");
  CHECK_THROWS_AS(io::parse_table(ragged), InvalidInput);
  std::istringstream empty("a,b\n");
  CHECK_THROWS_AS(io::parse_table(empty), InvalidInput);
  std::istringstream gap("1,2\n3,\n");
  CHECK_THROWS_AS(io::parse_matrix(gap), InvalidInput);
}

TEST_CASE("simulation config from JSON") {
  SimConfig cfg;
  io::apply_json(nlohmann::json::parse(R"({"n": 50, "p": 20, "design": {"type": "cs", "c": 0.3},
      "corruption": {"type": "missing", "r": 0.2}, "admm": {"tol": 1e-5}})"),
                 cfg);
  CHECK(cfg.n == 50);
  CHECK(cfg.beta_star.size() == 20);
  CHECK(std::get<CompoundSymmetry>(cfg.design).c == 0.3);
  CHECK(std::get<MissingBernoulli>(cfg.corruption).r == 0.2);
  CHECK(cfg.admm.tol_primal == 1e-5);
  CHECK(cfg.admm.tol_dual == 1e-5);
  CHECK_THROWS_AS(io::apply_json(nlohmann::json::parse(R"({"bogus": 1})"), cfg), InvalidInput);
  // Config serialization round-trips through apply_json.
  SimConfig other;
  io::apply_json(io::to_json(cfg), other);
  CHECK(io::to_json(other) == io::to_json(cfg));
}
