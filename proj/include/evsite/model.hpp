#pragma once

// Domain types for the charging-station siting model and the builder that
// turns an Instance + Scenario into a flat mixed-integer program.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "evsite/linear.hpp"
#include "evsite/money.hpp"

namespace evsite {

struct VehicleType {
  int id = 0;
  std::string name;
  double energy_kwh = 0.0;      // energy sold per full charge
  double charge_minutes = 0.0;  // connector time per full charge
  bool operator==(const VehicleType&) const = default;
};

struct DemandPoint {
  int id = 0;
  std::string name;
  double lat = 0.0;
  double lon = 0.0;
  std::vector<std::int64_t> demand;  // vehicles per vehicle type
  bool operator==(const DemandPoint&) const = default;
};

struct CandidateStation {
  int id = 0;
  std::string name;
  double lat = 0.0;
  double lon = 0.0;
  Money daily_open_cost;
  int max_connectors = 1;
  double connector_daily_minutes = 720.0;
  bool forced_open = false;
  bool operator==(const CandidateStation&) const = default;
};

// Dense demand x station matrix of travel minutes.
class TravelMatrix {
 public:
  TravelMatrix() = default;
  TravelMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double at(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double& at(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const TravelMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct Instance {
  std::string name;
  std::vector<VehicleType> vehicle_types;
  std::vector<DemandPoint> demands;
  std::vector<CandidateStation> stations;
  TravelMatrix travel_minutes;
  Money tariff_per_kwh;
  Money connector_daily_cost;

  std::size_t num_demands() const { return demands.size(); }
  std::size_t num_stations() const { return stations.size(); }
  std::size_t num_vehicle_types() const { return vehicle_types.size(); }

  bool operator==(const Instance&) const = default;
};

struct BigM {
  enum class Mode { Fixed, Tight };
  Mode mode = Mode::Tight;
  double value = 1000.0;  // used by Fixed only

  static BigM tight() { return {}; }
  static BigM fixed(double m) { return {Mode::Fixed, m}; }
  bool operator==(const BigM&) const = default;
};

struct Scenario {
  double d_max_minutes = 30.0;
  int redundancy = 1;
  int max_stations = 1;
  BigM big_m;
  bool operator==(const Scenario&) const = default;
};

enum class SolveStatus { Optimal, Infeasible, TimedOut };
const char* to_string(SolveStatus status);

struct Solution {
  SolveStatus status = SolveStatus::Infeasible;
  std::size_t num_demands = 0;
  std::size_t num_stations = 0;
  std::size_t num_vehicle_types = 0;
  std::vector<std::uint8_t> open;         // x_j
  std::vector<std::int64_t> connectors;   // u_j
  std::vector<std::uint8_t> covered;      // y_ij, row-major by demand
  std::vector<std::int64_t> assigned;     // v_ijk, index (i * J + j) * K + k
  Money revenue;
  Money cost;
  Money profit;

  // Zero-filled solution with the instance's dimensions.
  static Solution empty_for(const Instance& instance, SolveStatus status);

  std::uint8_t& cover(std::size_t i, std::size_t j) { return covered[i * num_stations + j]; }
  std::uint8_t cover(std::size_t i, std::size_t j) const { return covered[i * num_stations + j]; }
  std::int64_t& assign(std::size_t i, std::size_t j, std::size_t k) {
    return assigned[(i * num_stations + j) * num_vehicle_types + k];
  }
  std::int64_t assign(std::size_t i, std::size_t j, std::size_t k) const {
    return assigned[(i * num_stations + j) * num_vehicle_types + k];
  }

  std::vector<int> open_station_ids() const;
  std::int64_t connector_total() const;

  bool operator==(const Solution&) const = default;
};

struct Finding {
  std::string path;
  std::string message;
};

// Empty result iff every invariant on the instance holds.
std::vector<Finding> validate_instance(const Instance& instance);
std::vector<Finding> validate_scenario(const Instance& instance, const Scenario& scenario);

// ---------------------------------------------------------------------------
// Matrix form.

struct MipVariable {
  std::string name;
  double lower = 0.0;
  double upper = kInfinity;
  bool integer = false;
  // Lower values are branched on first.
  int branch_priority = 0;
  bool operator==(const MipVariable&) const = default;
};

struct MipProblem {
  std::string name;
  bool maximize = true;
  std::vector<MipVariable> variables;
  std::vector<double> objective;
  std::vector<LinearRow> rows;

  std::size_t num_variables() const { return variables.size(); }
  bool operator==(const MipProblem&) const = default;
};

// Column offsets of the x, y, v, u blocks.
struct ModelLayout {
  std::size_t demands = 0;
  std::size_t stations = 0;
  std::size_t vehicle_types = 0;

  std::size_t x(std::size_t j) const { return j; }
  std::size_t y(std::size_t i, std::size_t j) const { return stations + i * stations + j; }
  std::size_t v(std::size_t i, std::size_t j, std::size_t k) const {
    return stations + demands * stations + (i * stations + j) * vehicle_types + k;
  }
  std::size_t u(std::size_t j) const {
    return stations + demands * stations + demands * stations * vehicle_types + j;
  }
  std::size_t num_variables() const {
    return 2 * stations + demands * stations + demands * stations * vehicle_types;
  }
};

// Constraint families of the siting model, in builder row order.
enum class ConstraintFamily {
  AssignLink,        // sum_k v_ijk <= M y_ij
  TravelLimit,       // d_ij y_ij <= d_max
  DemandFulfilled,   // sum_j v_ijk = w_ik
  ChargingCapacity,  // sum_ik t_k v_ijk <= c_j u_j
  ConnectorLimit,    // u_j <= q_j x_j
  OpenLink,          // sum_i y_ij <= M x_j
  Coverage,          // sum_j y_ij >= R
  MaxStations,       // sum_j x_j <= N
  ForcedOpen,        // x_j = 1 for forced stations
  Domain,            // variable domains
};
const char* to_string(ConstraintFamily family);

struct BuiltModel {
  MipProblem problem;
  ModelLayout layout;
};

// Throws std::invalid_argument when the instance or scenario is invalid.
BuiltModel build_mip(const Instance& instance, const Scenario& scenario);

// Big-M coefficients actually used for a scenario.
double assign_link_m(const Instance& instance, const Scenario& scenario, std::size_t i);
double open_link_m(const Instance& instance, const Scenario& scenario);

// ---------------------------------------------------------------------------
// Money.

// Energy per charge in integer milli-kWh; validated instances are exact.
std::int64_t energy_milli_kwh(const VehicleType& type);

// r * sum_ik e_k w_ik, rounded half-up once at the aggregate.
Money compute_revenue(const Instance& instance);
Money revenue_of_assignment(const Instance& instance, const Solution& solution);

Money compute_cost(std::span<const Money> open_station_costs, std::int64_t connector_count,
                   Money connector_daily_cost);
Money compute_cost(std::int64_t open_count, std::int64_t connector_count, Money station_daily_cost,
                   Money connector_daily_cost);
Money cost_of_solution(const Instance& instance, const Solution& solution);

// ---------------------------------------------------------------------------
// Audit.

struct Violation {
  ConstraintFamily family;
  std::string where;
  std::string message;
};

// A solver produced a solution its own audit rejects.
class AuditFailure : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct AuditReport {
  bool feasible = true;
  std::vector<Violation> violations;
  Money revenue;
  Money cost;
  Money profit;
  // Reported money on the solution equals the recomputed values.
  bool money_matches = true;
};

// Checks every constraint family directly on the solution values. Throws
// std::invalid_argument on dimension mismatch.
AuditReport audit_solution(const Instance& instance, const Scenario& scenario, const Solution& solution);

// Flattens a solution into the builder's column order.
std::vector<double> flatten_solution(const ModelLayout& layout, const Solution& solution);

}  // namespace evsite
