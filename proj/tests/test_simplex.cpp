#include <cmath>
#include <random>

#include "doctest.h"
#include "evsite/simplex.hpp"
#include "lp_oracle.hpp"

using namespace evsite;

namespace {

LinearRow make_row(std::vector<int> idx, std::vector<double> coef, RowSense sense, double rhs) {
  LinearRow r;
  r.index = std::move(idx);
  r.coef = std::move(coef);
  r.sense = sense;
  r.rhs = rhs;
  return r;
}

bool within_rel(double a, double b, double rel) { return std::abs(a - b) <= rel * std::max(1.0, std::abs(b)); }

void check_kkt(const LpProblem& lp, const LpResult& res) {
  REQUIRE(res.status == LpStatus::Optimal);
  const std::size_t n = lp.num_variables();
  for (std::size_t j = 0; j < n; ++j) {
    CHECK(res.primal[j] >= lp.lower[j] - 1e-9);
    CHECK(res.primal[j] <= lp.upper[j] + 1e-9);
  }
  double dual_obj = 0.0;
  for (std::size_t i = 0; i < lp.rows.size(); ++i) {
    const auto& row = lp.rows[i];
    const double act = row.activity(res.primal);
    CHECK(row_satisfied(row, act, 1e-9));
    const double y = res.duals[i];
    // Maximization: <= rows carry y >= 0, >= rows y <= 0.
    if (row.sense == RowSense::LessEqual) CHECK(y >= -1e-9);
    if (row.sense == RowSense::GreaterEqual) CHECK(y <= 1e-9);
    if (std::abs(act - row.rhs) > 1e-7) CHECK(std::abs(y) <= 1e-7);  // complementary slackness
    dual_obj += y * row.rhs;
  }
  for (std::size_t j = 0; j < n; ++j) {
    const double d = res.reduced_costs[j];
    // Recompute d = c - A^T y independently of the solver's tableau.
    double expect = lp.objective[j];
    for (std::size_t i = 0; i < lp.rows.size(); ++i) {
      const auto& row = lp.rows[i];
      for (std::size_t q = 0; q < row.index.size(); ++q) {
        if (static_cast<std::size_t>(row.index[q]) == j) expect -= res.duals[i] * row.coef[q];
      }
    }
    CHECK(within_rel(d, expect, 1e-7));
    const bool at_lower = std::abs(res.primal[j] - lp.lower[j]) <= 1e-9;
    const bool at_upper = std::abs(res.primal[j] - lp.upper[j]) <= 1e-9;
    if (!at_lower && !at_upper) CHECK(std::abs(d) <= 1e-7);
    if (at_lower && !at_upper) CHECK(d <= 1e-7);
    if (at_upper && !at_lower) CHECK(d >= -1e-7);
    dual_obj += d * res.primal[j];
  }
  CHECK(within_rel(dual_obj, res.objective, 1e-7));
}

}  // namespace

TEST_CASE("bound-constrained maximum") {
  LpProblem lp{{1.0}, {0.0}, {1.0}, {}};
  auto res = solve_lp(lp);
  REQUIRE(res.status == LpStatus::Optimal);
  CHECK(res.objective == doctest::Approx(1.0));
  CHECK(res.primal[0] == doctest::Approx(1.0));
}

TEST_CASE("degenerate face: any vertex of x + y <= 1 is accepted") {
  LpProblem lp{{1.0, 1.0}, {0.0, 0.0}, {1.0, 1.0}, {make_row({0, 1}, {1, 1}, RowSense::LessEqual, 1)}};
  auto res = solve_lp(lp);
  REQUIRE(res.status == LpStatus::Optimal);
  CHECK(res.objective == doctest::Approx(1.0));
  CHECK(res.primal[0] + res.primal[1] == doctest::Approx(1.0));
  check_kkt(lp, res);
}

TEST_CASE("infeasible and unbounded problems") {
  SUBCASE("infeasible") {
    LpProblem lp{{1.0}, {0.0}, {kInfinity},
                 {make_row({0}, {1}, RowSense::LessEqual, 1), make_row({0}, {1}, RowSense::GreaterEqual, 2)}};
    auto res = solve_lp(lp);
    CHECK(res.status == LpStatus::Infeasible);
    REQUIRE(res.certificate.size() == 2);
  }
  SUBCASE("unbounded with ray") {
    LpProblem lp{{1.0, 1.0}, {0.0, 0.0}, {kInfinity, kInfinity}, {make_row({0, 1}, {1, -1}, RowSense::LessEqual, 1)}};
    auto res = solve_lp(lp);
    REQUIRE(res.status == LpStatus::Unbounded);
    REQUIRE(res.certificate.size() == 2);
    // Improving and feasible direction.
    CHECK(res.certificate[0] + res.certificate[1] > 0);
    CHECK(res.certificate[0] - res.certificate[1] <= 1e-12);
    CHECK(res.certificate[0] >= 0);
    CHECK(res.certificate[1] >= 0);
  }
}

TEST_CASE("free variables and equality rows") {
  // max -x - y s.t. x - y = 3, x free, y in [-inf, 10], x + y >= -4
  LpProblem lp{{-1.0, -1.0}, {-kInfinity, -kInfinity}, {kInfinity, 10.0},
               {make_row({0, 1}, {1, -1}, RowSense::Equal, 3), make_row({0, 1}, {1, 1}, RowSense::GreaterEqual, -4)}};
  auto res = solve_lp(lp);
  REQUIRE(res.status == LpStatus::Optimal);
  CHECK(res.objective == doctest::Approx(4.0));
  CHECK(res.primal[0] == doctest::Approx(-0.5));
  CHECK(res.primal[1] == doctest::Approx(-3.5));
}

TEST_CASE("Beale's cycling example terminates with the optimum") {
  // max 3/4 x1 - 20 x2 + 1/2 x3 - 6 x4
  LpProblem lp{{0.75, -20.0, 0.5, -6.0},
               {0, 0, 0, 0},
               {kInfinity, kInfinity, kInfinity, kInfinity},
               {make_row({0, 1, 2, 3}, {0.25, -8, -1, 9}, RowSense::LessEqual, 0),
                make_row({0, 1, 2, 3}, {0.5, -12, -0.5, 3}, RowSense::LessEqual, 0),
                make_row({2}, {1}, RowSense::LessEqual, 1)}};
  for (int threshold : {1, 5, 1000}) {
    SimplexOptions opts;
    opts.stall_threshold = threshold;
    auto res = solve_lp(lp, opts);
    REQUIRE(res.status == LpStatus::Optimal);
    CHECK(res.objective == doctest::Approx(1.25));
    check_kkt(lp, res);
  }
}

TEST_CASE("random LPs match basis enumeration") {
  std::mt19937_64 rng(20240611);
  int optimal = 0;
  for (int trial = 0; trial < 150; ++trial) {
    LpProblem lp = testing::random_lp(rng, 5, 4);
    auto oracle = testing::enumerate_vertices(lp);
    auto res = solve_lp(lp);
    if (!oracle.feasible) {
      CHECK(res.status == LpStatus::Infeasible);
      continue;
    }
    REQUIRE(res.status == LpStatus::Optimal);
    CHECK(within_rel(res.objective, oracle.objective, 1e-7));
    check_kkt(lp, res);
    ++optimal;
  }
  CHECK(optimal > 30);
}

TEST_CASE("warm start after a bound change matches a cold solve") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 60; ++trial) {
    LpProblem lp = testing::random_lp(rng, 6, 5);
    BoundedSimplex warm(lp);
    auto first = warm.solve();
    if (first.status != LpStatus::Optimal) continue;
    const std::size_t col = trial % lp.num_variables();
    const double mid = std::floor(first.primal[col]);
    const double new_upper = std::max(lp.lower[col], mid);
    warm.set_bounds(col, lp.lower[col], new_upper);
    auto second = warm.solve();
    LpProblem changed = lp;
    changed.upper[col] = new_upper;
    auto cold = solve_lp(changed);
    REQUIRE(second.status == cold.status);
    if (cold.status == LpStatus::Optimal) CHECK(within_rel(second.objective, cold.objective, 1e-7));

    // install_basis reproduces the same optimum.
    BoundedSimplex again(changed);
    if (cold.status == LpStatus::Optimal) {
      CHECK(again.install_basis(cold.basis));
      auto re = again.solve();
      REQUIRE(re.status == LpStatus::Optimal);
      CHECK(within_rel(re.objective, cold.objective, 1e-9));
      CHECK(re.iterations == 0);
    }
  }
}

TEST_CASE("identical input gives identical output") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    LpProblem lp = testing::random_lp(rng, 6, 5);
    auto a = solve_lp(lp);
    auto b = solve_lp(lp);
    CHECK(a.status == b.status);
    CHECK(a.objective == b.objective);
    CHECK(a.primal == b.primal);
    CHECK(a.basis.state == b.basis.state);
  }
}

TEST_CASE("malformed problems are rejected") {
  CHECK_THROWS_AS(BoundedSimplex(LpProblem{{1.0}, {2.0}, {1.0}, {}}), std::invalid_argument);
  CHECK_THROWS_AS(BoundedSimplex(LpProblem{{1.0}, {0.0}, {1.0}, {make_row({3}, {1}, RowSense::LessEqual, 1)}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(BoundedSimplex(LpProblem{{NAN}, {0.0}, {1.0}, {}}), std::invalid_argument);
}
