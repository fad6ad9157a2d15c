#pragma once

// Sensitivity sweeps over the travel threshold and redundancy level.

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evsite/decomposition.hpp"
#include "evsite/model.hpp"

namespace evsite {

struct SweepRow {
  double d_max_minutes = 0.0;
  int redundancy = 1;
  SolveStatus status = SolveStatus::Infeasible;
  std::vector<int> open_station_ids;
  std::int64_t connectors = 0;
  Money revenue, cost, profit;
  double wall_seconds = 0.0;
  Solution solution;  // empty dimensions when infeasible
};

// Rows sorted by (redundancy, d_max).
struct SweepReport {
  std::string instance_name;
  int max_stations = 0;
  std::vector<SweepRow> rows;

  const SweepRow* find(double d_max_minutes, int redundancy) const;
};

struct SweepOptions {
  // Rows solved concurrently; 0 picks the hardware concurrency.
  int threads = 1;
  BigM big_m = BigM::tight();
  // Budget for the whole sweep; rows left when it runs out are TimedOut.
  double time_limit_seconds = std::numeric_limits<double>::infinity();
};

// One enumeration solve per (d_max, R) pair. Throws std::invalid_argument on
// empty lists or an invalid instance or scenario.
SweepReport sweep(const Instance& instance, std::span<const double> d_max_list, std::span<const int> redundancy_list,
                  int max_stations, const SweepOptions& options = {});

// Percentage change from `base` to `variant` on exact centi values,
// relative to |base|. Throws std::domain_error for a zero base.
double percent_change(Money base, Money variant);

// Percentages rounded to 0.1.
double round_tenth(double percent);

struct DeltaRow {
  double d_max_minutes = 0.0;
  int base_redundancy = 1;
  int variant_redundancy = 1;
  bool excluded = false;  // infeasible in either report, or a zero base
  std::string flag;
  double cost_percent = 0.0;
  double profit_percent = 0.0;
};

struct DeltaReport {
  std::vector<DeltaRow> rows;
  int included = 0;
  // Arithmetic means of the per-row percentages; empty when no row counts.
  std::optional<double> average_cost_percent;
  std::optional<double> average_profit_percent;
};

// Row-by-row comparison. Both reports must list the same d_max values in the
// same order; std::invalid_argument otherwise.
DeltaReport compare(const SweepReport& base, const SweepReport& variant);

// Rows of one redundancy level, keeping their order.
SweepReport filter_redundancy(const SweepReport& report, int redundancy);

}  // namespace evsite
