#pragma once

// Brute-force LP oracle for tests: enumerates every choice of n active
// constraints (rows or finite bounds), solves for the vertex and keeps the
// best feasible one. Only valid for bounded feasible regions (all bounds
// finite), which the random generators guarantee.

#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "evsite/simplex.hpp"

namespace evsite::testing {

struct OracleResult {
  bool feasible = false;
  double objective = 0.0;
  std::vector<double> x;
};

inline std::optional<std::vector<double>> solve_square(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
    }
    if (std::abs(a[p][c]) < 1e-10) return std::nullopt;
    std::swap(a[p], a[c]);
    std::swap(b[p], b[c]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      if (f == 0.0) continue;
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[i] / a[i][i];
  return x;
}

inline OracleResult enumerate_vertices(const LpProblem& lp, double tol = 1e-7) {
  const std::size_t n = lp.num_variables();
  // Candidate hyperplanes: every row, then lower and upper bound of each column.
  struct Plane {
    std::vector<double> a;
    double b;
  };
  std::vector<Plane> planes;
  for (const auto& row : lp.rows) {
    Plane p{std::vector<double>(n, 0.0), row.rhs};
    for (std::size_t q = 0; q < row.index.size(); ++q) p.a[row.index[q]] += row.coef[q];
    planes.push_back(p);
  }
  for (std::size_t j = 0; j < n; ++j) {
    Plane lo{std::vector<double>(n, 0.0), lp.lower[j]};
    lo.a[j] = 1.0;
    planes.push_back(lo);
    Plane hi{std::vector<double>(n, 0.0), lp.upper[j]};
    hi.a[j] = 1.0;
    planes.push_back(hi);
  }
  auto feasible = [&](const std::vector<double>& x) {
    for (std::size_t j = 0; j < n; ++j) {
      if (x[j] < lp.lower[j] - tol || x[j] > lp.upper[j] + tol) return false;
    }
    for (const auto& row : lp.rows) {
      const double act = row.activity(x);
      if (row.sense == RowSense::LessEqual && act > row.rhs + tol) return false;
      if (row.sense == RowSense::GreaterEqual && act < row.rhs - tol) return false;
      if (row.sense == RowSense::Equal && std::abs(act - row.rhs) > tol) return false;
    }
    return true;
  };

  OracleResult best;
  std::vector<std::size_t> pick;
  const std::size_t total = planes.size();
  auto recurse = [&](auto&& self, std::size_t start) -> void {
    if (pick.size() == n) {
      std::vector<std::vector<double>> a;
      std::vector<double> b;
      for (std::size_t idx : pick) {
        a.push_back(planes[idx].a);
        b.push_back(planes[idx].b);
      }
      auto x = solve_square(a, b);
      if (!x || !feasible(*x)) return;
      double obj = 0.0;
      for (std::size_t j = 0; j < n; ++j) obj += lp.objective[j] * (*x)[j];
      if (!best.feasible || obj > best.objective) {
        best.feasible = true;
        best.objective = obj;
        best.x = *x;
      }
      return;
    }
    for (std::size_t idx = start; idx < total; ++idx) {
      pick.push_back(idx);
      self(self, idx + 1);
      pick.pop_back();
    }
  };
  recurse(recurse, 0);
  return best;
}

// Random bounded LP with small integer data.
inline LpProblem random_lp(std::mt19937_64& rng, int max_vars, int max_rows) {
  std::uniform_int_distribution<int> nvar(1, max_vars), nrow(1, max_rows), coef(-5, 5), lo(-3, 1), width(0, 6),
      sense(0, 5), rhs(-8, 12);
  LpProblem lp;
  const int n = nvar(rng);
  const int m = nrow(rng);
  for (int j = 0; j < n; ++j) {
    lp.objective.push_back(coef(rng));
    const double l = lo(rng);
    lp.lower.push_back(l);
    lp.upper.push_back(l + width(rng));
  }
  for (int i = 0; i < m; ++i) {
    LinearRow r;
    for (int j = 0; j < n; ++j) r.add(j, coef(rng));
    const int s = sense(rng);
    r.sense = s <= 2 ? RowSense::LessEqual : (s <= 4 ? RowSense::GreaterEqual : RowSense::Equal);
    r.rhs = rhs(rng);
    lp.rows.push_back(r);
  }
  return lp;
}

}  // namespace evsite::testing
