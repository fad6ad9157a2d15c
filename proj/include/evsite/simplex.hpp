#pragma once

// Dense-tableau, bounded-variable primal simplex (two phases: composite
// infeasibility minimization, then the objective). Maximizes.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "evsite/linear.hpp"

namespace evsite {

class NumericalBreakdown : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LpProblem {
  std::vector<double> objective;  // maximize objective^T x
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<LinearRow> rows;

  std::size_t num_variables() const { return objective.size(); }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };
const char* to_string(LpStatus status);

enum class VarState : std::uint8_t { Basic, AtLower, AtUpper, FreeZero };

// Status of every structural column followed by every row slack.
struct Basis {
  std::vector<VarState> state;
  bool empty() const { return state.empty(); }
};

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  double objective = 0.0;
  std::vector<double> primal;
  std::vector<double> duals;           // one per row
  std::vector<double> reduced_costs;   // one per structural column
  // Unbounded: improving primal ray. Infeasible: row multipliers of the
  // phase-one infeasibility objective.
  std::vector<double> certificate;
  std::int64_t iterations = 0;
  Basis basis;
};

struct SimplexOptions {
  double feasibility_tolerance = 1e-9;
  double optimality_tolerance = 1e-9;
  double pivot_tolerance = 1e-9;
  // Degenerate pivots in a row before Bland's rule takes over.
  int stall_threshold = 1000;
  std::int64_t iteration_limit = 1'000'000;
  // Rebuild the tableau from the original rows every this many pivots.
  int refactor_interval = 200;
};

// Reusable solver state. Bounds may be changed between solves; the last
// basis is kept as a warm start.
class BoundedSimplex {
 public:
  explicit BoundedSimplex(const LpProblem& problem, SimplexOptions options = {});

  LpResult solve();

  void set_bounds(std::size_t column, double lower, double upper);
  double lower(std::size_t column) const { return lower_[column]; }
  double upper(std::size_t column) const { return upper_[column]; }

  Basis basis() const;
  // Rebuilds the tableau for `basis`. Returns false when the basis is
  // singular, in which case the slack basis is installed instead.
  bool install_basis(const Basis& basis);

  std::size_t num_columns() const { return n_; }
  std::size_t num_rows() const { return m_; }

 private:
  enum class Phase { One, Two };
  enum class StepResult { Pivoted, Flipped, Optimal, Unbounded, Degenerate };

  double& tab(std::size_t r, std::size_t c) { return tableau_[r * width_ + c]; }
  double tab(std::size_t r, std::size_t c) const { return tableau_[r * width_ + c]; }

  void reset_to_slack_basis();
  void recompute_basic_values();
  bool refactor();
  double nonbasic_value(std::size_t var) const;
  double infeasibility(std::size_t var, double value) const;
  double total_infeasibility() const;
  void compute_reduced_costs(Phase phase);
  void pivot(std::size_t row, std::size_t col);
  StepResult iterate(Phase phase, bool bland);
  LpStatus run_phase(Phase phase);
  void fill_result(LpResult& result, LpStatus status);

  SimplexOptions options_;
  std::size_t n_ = 0;  // structural columns
  std::size_t m_ = 0;  // rows (one slack each)
  std::size_t width_ = 0;
  std::vector<double> a_;        // scaled original [A | I], row-major
  std::vector<double> b_;        // scaled rhs
  std::vector<double> row_scale_;
  std::vector<double> cost_;     // scaled objective, length n + m
  double cost_scale_ = 1.0;
  std::vector<double> lower_, upper_;  // length n + m (slack bounds by sense)
  std::vector<double> tableau_;  // B^-1 [A | I]
  std::vector<double> beta_;     // basic values
  std::vector<std::size_t> head_;  // basic variable of each row
  std::vector<VarState> state_;
  std::vector<double> d_;        // reduced costs of the active phase
  std::vector<double> ray_;
  std::int64_t iterations_ = 0;
  int pivots_since_refactor_ = 0;
};

LpResult solve_lp(const LpProblem& problem, const SimplexOptions& options = {},
                  const std::optional<Basis>& hint = std::nullopt);

}  // namespace evsite
