#pragma once

// Exact solver by open-set enumeration. Revenue is fixed by the demand, so
// the best solution is the cheapest feasible one: every admissible open set
// is checked for coverage and then solved for its fewest connectors.

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "evsite/model.hpp"

namespace evsite {

// Up to 63 stations, one bit each.
struct OpenSet {
  std::uint64_t bits = 0;
  Money station_cost;

  static OpenSet of(const Instance& instance, std::uint64_t bits);
  static OpenSet of_ids(const Instance& instance, std::span<const int> ids);

  bool contains(std::size_t j) const { return bits >> j & 1u; }
  int size() const;
  std::vector<int> ids() const;
};

struct InnerAssignment {
  std::vector<std::int64_t> assigned;    // (i * J + j) * K + k, as in Solution
  std::vector<std::int64_t> connectors;  // per station, zero when closed
  std::int64_t total_connectors = 0;
};

struct EnumerationOptions {
  // 0 picks std::thread::hardware_concurrency().
  int threads = 1;
  // Past this the solve stops and reports TimedOut.
  double time_limit_seconds = std::numeric_limits<double>::infinity();
};

struct EnumerationStats {
  std::int64_t subsets = 0;           // admissible sets generated
  std::int64_t coverage_rejected = 0;
  std::int64_t pruned = 0;            // cut by the cost lower bound
  std::int64_t inner_solved = 0;
  std::int64_t inner_infeasible = 0;
};

// Every demand point has at least R open stations within d_max.
bool coverage_feasible(const Instance& instance, const Scenario& scenario, const OpenSet& open);

// Fewest connectors serving all demand from `open`, with whole vehicles and
// in-range stations only. nullopt when no such assignment exists.
std::optional<InnerAssignment> inner_min_connectors(const Instance& instance, const Scenario& scenario,
                                                    const OpenSet& open);

// Cheapest feasible solution; ties go to fewer stations, then fewer
// connectors, then the lexicographically smallest station id list. The
// result is audited (AuditFailure on mismatch). Throws std::invalid_argument
// for invalid input or a fixed big-M small enough to bind.
Solution solve_by_enumeration(const Instance& instance, const Scenario& scenario,
                              const EnumerationOptions& options = {}, EnumerationStats* stats = nullptr);

}  // namespace evsite
