#include "evsite/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace evsite {

const SweepRow* SweepReport::find(double d_max_minutes, int redundancy) const {
  for (const auto& r : rows) {
    if (r.d_max_minutes == d_max_minutes && r.redundancy == redundancy) return &r;
  }
  return nullptr;
}

SweepReport sweep(const Instance& instance, std::span<const double> d_max_list, std::span<const int> redundancy_list,
                  int max_stations, const SweepOptions& options) {
  if (d_max_list.empty() || redundancy_list.empty()) throw std::invalid_argument("sweep needs at least one d_max and one R");
  SweepReport report;
  report.instance_name = instance.name;
  report.max_stations = max_stations;

  std::vector<Scenario> scenarios;
  for (int R : redundancy_list) {
    for (double d : d_max_list) scenarios.push_back({d, R, max_stations, options.big_m});
  }
  std::stable_sort(scenarios.begin(), scenarios.end(), [](const Scenario& a, const Scenario& b) {
    return a.redundancy != b.redundancy ? a.redundancy < b.redundancy : a.d_max_minutes < b.d_max_minutes;
  });
  scenarios.erase(std::unique(scenarios.begin(), scenarios.end()), scenarios.end());
  for (const auto& sc : scenarios) {
    if (auto f = validate_scenario(instance, sc); !f.empty()) {
      throw std::invalid_argument("invalid scenario: " + f.front().path + ": " + f.front().message);
    }
  }

  report.rows.resize(scenarios.size());
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr failure;
  const auto sweep_start = std::chrono::steady_clock::now();
  auto worker = [&] {
    for (std::size_t idx; (idx = next++) < scenarios.size();) {
      try {
        const auto start = std::chrono::steady_clock::now();
        EnumerationOptions eo;
        eo.time_limit_seconds = options.time_limit_seconds - std::chrono::duration<double>(start - sweep_start).count();
        Solution s = eo.time_limit_seconds > 0.0 ? solve_by_enumeration(instance, scenarios[idx], eo)
                                                 : Solution::empty_for(instance, SolveStatus::TimedOut);
        SweepRow& row = report.rows[idx];
        row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        row.d_max_minutes = scenarios[idx].d_max_minutes;
        row.redundancy = scenarios[idx].redundancy;
        row.status = s.status;
        if (s.status == SolveStatus::Optimal) {
          row.open_station_ids = s.open_station_ids();
          row.connectors = s.connector_total();
          row.revenue = s.revenue;
          row.cost = s.cost;
          row.profit = s.profit;
          row.solution = std::move(s);
        }
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  int threads = options.threads;
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min<int>(threads, static_cast<int>(scenarios.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return report;
}

double percent_change(Money base, Money variant) {
  if (base.centi() == 0) throw std::domain_error("percentage change from zero");
  const long double diff = static_cast<long double>(variant.centi()) - static_cast<long double>(base.centi());
  return static_cast<double>(diff * 100.0L / std::abs(static_cast<long double>(base.centi())));
}

double round_tenth(double percent) {
  const double r = std::round(percent * 10.0) / 10.0;
  return r == 0.0 ? 0.0 : r;  // no negative zero
}

DeltaReport compare(const SweepReport& base, const SweepReport& variant) {
  if (base.rows.size() != variant.rows.size()) throw std::invalid_argument("reports have different row counts");
  DeltaReport out;
  double cost_sum = 0.0, profit_sum = 0.0;
  for (std::size_t r = 0; r < base.rows.size(); ++r) {
    const SweepRow& a = base.rows[r];
    const SweepRow& b = variant.rows[r];
    if (a.d_max_minutes != b.d_max_minutes) {
      throw std::invalid_argument("d_max grids differ at row " + std::to_string(r));
    }
    DeltaRow d;
    d.d_max_minutes = a.d_max_minutes;
    d.base_redundancy = a.redundancy;
    d.variant_redundancy = b.redundancy;
    if (a.status != SolveStatus::Optimal || b.status != SolveStatus::Optimal) {
      d.excluded = true;
      auto word = [](SolveStatus s) { return s == SolveStatus::TimedOut ? std::string("timed out") : std::string("infeasible"); };
      if (a.status != SolveStatus::Optimal && b.status != SolveStatus::Optimal) {
        d.flag = a.status == b.status ? word(a.status) + " in both" : word(a.status) + " in base, " + word(b.status) + " in variant";
      } else {
        d.flag = a.status != SolveStatus::Optimal ? word(a.status) + " in base" : word(b.status) + " in variant";
      }
    } else if (a.cost.centi() == 0 || a.profit.centi() == 0) {
      d.excluded = true;
      d.flag = "zero base value";
    } else {
      const double c = percent_change(a.cost, b.cost);
      const double p = percent_change(a.profit, b.profit);
      d.cost_percent = round_tenth(c);
      d.profit_percent = round_tenth(p);
      cost_sum += c;
      profit_sum += p;
      ++out.included;
    }
    out.rows.push_back(std::move(d));
  }
  if (out.included > 0) {
    out.average_cost_percent = round_tenth(cost_sum / out.included);
    out.average_profit_percent = round_tenth(profit_sum / out.included);
  }
  return out;
}

SweepReport filter_redundancy(const SweepReport& report, int redundancy) {
  SweepReport out;
  out.instance_name = report.instance_name;
  out.max_stations = report.max_stations;
  for (const auto& r : report.rows) {
    if (r.redundancy == redundancy) out.rows.push_back(r);
  }
  return out;
}

}  // namespace evsite
