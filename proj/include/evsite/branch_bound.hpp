#pragma once

// LP-based branch-and-bound over a MipProblem.

#include <cstdint>
#include <limits>
#include <vector>

#include "evsite/model.hpp"
#include "evsite/simplex.hpp"

namespace evsite {

struct SolveParams {
  double integrality_tolerance = 1e-6;
  double relative_gap = 0.0;
  double absolute_gap = 1e-6;
  double time_limit_seconds = std::numeric_limits<double>::infinity();
  std::int64_t node_limit = std::numeric_limits<std::int64_t>::max();
  // Keep the global bound after every node in MipResult::bound_trace.
  bool record_bound_trace = false;
};

struct MipResult {
  SolveStatus status = SolveStatus::Infeasible;
  bool has_incumbent = false;
  std::vector<double> incumbent;
  double objective = 0.0;
  double bound = 0.0;
  std::int64_t nodes = 0;
  double wall_seconds = 0.0;
  std::vector<double> bound_trace;
};

MipResult solve_mip(const MipProblem& problem, const SolveParams& params = {});

// Maps a flat result back onto the model blocks, recomputes money and
// audits. Throws AuditFailure if an incumbent fails the audit.
Solution extract_solution(const Instance& instance, const Scenario& scenario, const ModelLayout& layout,
                          const MipResult& result);

// build_mip + solve_mip + extract_solution.
Solution solve_with_branch_bound(const Instance& instance, const Scenario& scenario, const SolveParams& params = {});

}  // namespace evsite
