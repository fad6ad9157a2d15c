#include "evsite/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace evsite {

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::TimedOut: return "timed_out";
  }
  return "unknown";
}

const char* to_string(ConstraintFamily family) {
  switch (family) {
    case ConstraintFamily::AssignLink: return "assign_link";
    case ConstraintFamily::TravelLimit: return "travel_limit";
    case ConstraintFamily::DemandFulfilled: return "demand_fulfilled";
    case ConstraintFamily::ChargingCapacity: return "charging_capacity";
    case ConstraintFamily::ConnectorLimit: return "connector_limit";
    case ConstraintFamily::OpenLink: return "open_link";
    case ConstraintFamily::Coverage: return "coverage";
    case ConstraintFamily::MaxStations: return "max_stations";
    case ConstraintFamily::ForcedOpen: return "forced_open";
    case ConstraintFamily::Domain: return "domain";
  }
  return "unknown";
}

Solution Solution::empty_for(const Instance& instance, SolveStatus status) {
  Solution s;
  s.status = status;
  s.num_demands = instance.num_demands();
  s.num_stations = instance.num_stations();
  s.num_vehicle_types = instance.num_vehicle_types();
  s.open.assign(s.num_stations, 0);
  s.connectors.assign(s.num_stations, 0);
  s.covered.assign(s.num_demands * s.num_stations, 0);
  s.assigned.assign(s.num_demands * s.num_stations * s.num_vehicle_types, 0);
  return s;
}

std::vector<int> Solution::open_station_ids() const {
  std::vector<int> ids;
  for (std::size_t j = 0; j < open.size(); ++j) {
    if (open[j]) ids.push_back(static_cast<int>(j));
  }
  return ids;
}

std::int64_t Solution::connector_total() const {
  std::int64_t total = 0;
  for (auto u : connectors) total = checked_add(total, u);
  return total;
}

namespace {

std::string path_of(const char* section, std::size_t index, const char* field) {
  std::ostringstream out;
  out << '/' << section << '/' << index << '/' << field;
  return out.str();
}

bool is_milli_multiple(double value) {
  double scaled = value * 1000.0;
  return std::abs(scaled - std::round(scaled)) <= 1e-6 * std::max(1.0, std::abs(scaled));
}

}  // namespace

std::vector<Finding> validate_instance(const Instance& instance) {
  std::vector<Finding> out;
  const std::size_t K = instance.num_vehicle_types();
  if (K == 0) out.push_back({"/vehicle_types", "at least one vehicle type is required"});
  for (std::size_t k = 0; k < K; ++k) {
    const auto& t = instance.vehicle_types[k];
    if (t.id != static_cast<int>(k)) out.push_back({path_of("vehicle_types", k, "id"), "ids must be dense 0..K-1"});
    if (!(std::isfinite(t.energy_kwh) && t.energy_kwh > 0)) {
      out.push_back({path_of("vehicle_types", k, "energy_kwh"), "energy per charge must be > 0"});
    } else if (!is_milli_multiple(t.energy_kwh)) {
      out.push_back({path_of("vehicle_types", k, "energy_kwh"), "energy per charge must be a multiple of 0.001 kWh"});
    }
    if (!(std::isfinite(t.charge_minutes) && t.charge_minutes > 0)) {
      out.push_back({path_of("vehicle_types", k, "charge_minutes"), "charge minutes must be > 0"});
    }
  }
  for (std::size_t i = 0; i < instance.num_demands(); ++i) {
    const auto& d = instance.demands[i];
    if (d.id != static_cast<int>(i)) out.push_back({path_of("demand_points", i, "id"), "ids must be dense 0..I-1"});
    if (d.demand.size() != K) {
      out.push_back({path_of("demand_points", i, "demand"), "demand vector length must equal the number of vehicle types"});
    }
    for (std::size_t k = 0; k < d.demand.size(); ++k) {
      if (d.demand[k] < 0) {
        out.push_back({"/demand_points/" + std::to_string(i) + "/demand/" + std::to_string(k), "demand must be >= 0"});
      }
    }
    if (!(std::isfinite(d.lat) && std::abs(d.lat) <= 90)) out.push_back({path_of("demand_points", i, "lat"), "latitude out of range"});
    if (!(std::isfinite(d.lon) && std::abs(d.lon) <= 180)) out.push_back({path_of("demand_points", i, "lon"), "longitude out of range"});
  }
  bool any_forced = false;
  for (std::size_t j = 0; j < instance.num_stations(); ++j) {
    const auto& s = instance.stations[j];
    if (s.id != static_cast<int>(j)) out.push_back({path_of("stations", j, "id"), "ids must be dense 0..J-1"});
    if (s.daily_open_cost < Money{}) out.push_back({path_of("stations", j, "daily_open_cost"), "daily open cost must be >= 0"});
    if (s.max_connectors < 1) out.push_back({path_of("stations", j, "max_connectors"), "max connectors must be >= 1"});
    if (!(std::isfinite(s.connector_daily_minutes) && s.connector_daily_minutes > 0)) {
      out.push_back({path_of("stations", j, "connector_daily_minutes"), "connector daily minutes must be > 0"});
    }
    if (!(std::isfinite(s.lat) && std::abs(s.lat) <= 90)) out.push_back({path_of("stations", j, "lat"), "latitude out of range"});
    if (!(std::isfinite(s.lon) && std::abs(s.lon) <= 180)) out.push_back({path_of("stations", j, "lon"), "longitude out of range"});
    any_forced = any_forced || s.forced_open;
  }
  if (!any_forced) {
    out.push_back({"/stations", "no station is forced open; the forced_open constraint needs at least one"});
  }
  const auto& d = instance.travel_minutes;
  if (d.rows() != instance.num_demands() || d.cols() != instance.num_stations()) {
    out.push_back({"/travel_minutes", "matrix is " + std::to_string(d.rows()) + "x" + std::to_string(d.cols()) +
                                          ", expected " + std::to_string(instance.num_demands()) + "x" +
                                          std::to_string(instance.num_stations())});
  } else {
    for (std::size_t i = 0; i < d.rows(); ++i) {
      for (std::size_t j = 0; j < d.cols(); ++j) {
        double v = d.at(i, j);
        if (!(std::isfinite(v) && v >= 0)) {
          out.push_back({"/travel_minutes/" + std::to_string(i) + "/" + std::to_string(j), "travel minutes must be finite and >= 0"});
        }
      }
    }
  }
  if (instance.tariff_per_kwh < Money{}) out.push_back({"/tariff", "tariff must be >= 0"});
  if (instance.connector_daily_cost < Money{}) out.push_back({"/connector_daily_cost", "connector daily cost must be >= 0"});
  return out;
}

std::vector<Finding> validate_scenario(const Instance& instance, const Scenario& scenario) {
  std::vector<Finding> out;
  const auto J = static_cast<int>(instance.num_stations());
  if (!(std::isfinite(scenario.d_max_minutes) && scenario.d_max_minutes > 0)) out.push_back({"/d_max", "d_max must be > 0"});
  if (scenario.redundancy < 1 || scenario.redundancy > J) {
    out.push_back({"/redundancy", "redundancy must be in 1.." + std::to_string(J)});
  }
  if (scenario.max_stations < 1 || scenario.max_stations > J) {
    out.push_back({"/max_stations", "max stations must be in 1.." + std::to_string(J)});
  }
  if (scenario.big_m.mode == BigM::Mode::Fixed && !(std::isfinite(scenario.big_m.value) && scenario.big_m.value > 0)) {
    out.push_back({"/big_m", "fixed big-M must be > 0"});
  }
  return out;
}

namespace {

[[noreturn]] void throw_findings(const char* what, const std::vector<Finding>& findings) {
  std::string msg = what;
  for (const auto& f : findings) msg += "\n  " + f.path + ": " + f.message;
  throw std::invalid_argument(msg);
}

std::int64_t total_demand(const DemandPoint& d) {
  std::int64_t sum = 0;
  for (auto w : d.demand) sum = checked_add(sum, w);
  return sum;
}

}  // namespace

double assign_link_m(const Instance& instance, const Scenario& scenario, std::size_t i) {
  if (scenario.big_m.mode == BigM::Mode::Fixed) return scenario.big_m.value;
  return static_cast<double>(total_demand(instance.demands[i]));
}

double open_link_m(const Instance& instance, const Scenario& scenario) {
  if (scenario.big_m.mode == BigM::Mode::Fixed) return scenario.big_m.value;
  return static_cast<double>(instance.num_demands());
}

BuiltModel build_mip(const Instance& instance, const Scenario& scenario) {
  if (auto f = validate_instance(instance); !f.empty()) throw_findings("invalid instance", f);
  if (auto f = validate_scenario(instance, scenario); !f.empty()) throw_findings("invalid scenario", f);

  const std::size_t I = instance.num_demands();
  const std::size_t J = instance.num_stations();
  const std::size_t K = instance.num_vehicle_types();
  BuiltModel built;
  built.layout = {I, J, K};
  const ModelLayout& L = built.layout;
  MipProblem& p = built.problem;
  p.name = instance.name.empty() ? "evsite" : instance.name;
  p.maximize = true;
  p.variables.resize(L.num_variables());
  p.objective.assign(L.num_variables(), 0.0);

  const double tariff = static_cast<double>(instance.tariff_per_kwh.centi());
  const double g = static_cast<double>(instance.connector_daily_cost.centi());

  for (std::size_t j = 0; j < J; ++j) {
    const auto& s = instance.stations[j];
    auto& x = p.variables[L.x(j)];
    x = {"x_" + std::to_string(j), 0.0, 1.0, true, 0};
    if (s.forced_open) x.lower = 1.0;
    p.objective[L.x(j)] = -static_cast<double>(s.daily_open_cost.centi());
    p.variables[L.u(j)] = {"u_" + std::to_string(j), 0.0, kInfinity, true, 1};
    p.objective[L.u(j)] = -g;
  }
  for (std::size_t i = 0; i < I; ++i) {
    for (std::size_t j = 0; j < J; ++j) {
      p.variables[L.y(i, j)] = {"y_" + std::to_string(i) + "_" + std::to_string(j), 0.0, 1.0, true, 3};
      for (std::size_t k = 0; k < K; ++k) {
        p.variables[L.v(i, j, k)] = {
            "v_" + std::to_string(i) + "_" + std::to_string(j) + "_" + std::to_string(k), 0.0, kInfinity, true, 2};
        p.objective[L.v(i, j, k)] = tariff * instance.vehicle_types[k].energy_kwh;
      }
    }
  }

  auto& rows = p.rows;
  const double m_open = open_link_m(instance, scenario);
  for (std::size_t i = 0; i < I; ++i) {
    const double m_assign = assign_link_m(instance, scenario, i);
    for (std::size_t j = 0; j < J; ++j) {
      LinearRow r{"link_" + std::to_string(i) + "_" + std::to_string(j), {}, {}, RowSense::LessEqual, 0.0};
      r.add(static_cast<int>(L.y(i, j)), -m_assign);
      for (std::size_t k = 0; k < K; ++k) r.add(static_cast<int>(L.v(i, j, k)), 1.0);
      rows.push_back(std::move(r));
    }
  }
  for (std::size_t i = 0; i < I; ++i) {
    for (std::size_t j = 0; j < J; ++j) {
      LinearRow r{"dmax_" + std::to_string(i) + "_" + std::to_string(j), {}, {}, RowSense::LessEqual,
                  scenario.d_max_minutes};
      r.add(static_cast<int>(L.y(i, j)), instance.travel_minutes.at(i, j));
      rows.push_back(std::move(r));
    }
  }
  for (std::size_t i = 0; i < I; ++i) {
    for (std::size_t k = 0; k < K; ++k) {
      LinearRow r{"fulfil_" + std::to_string(i) + "_" + std::to_string(k), {}, {}, RowSense::Equal,
                  static_cast<double>(instance.demands[i].demand[k])};
      for (std::size_t j = 0; j < J; ++j) r.add(static_cast<int>(L.v(i, j, k)), 1.0);
      rows.push_back(std::move(r));
    }
  }
  for (std::size_t j = 0; j < J; ++j) {
    LinearRow r{"cap_" + std::to_string(j), {}, {}, RowSense::LessEqual, 0.0};
    for (std::size_t i = 0; i < I; ++i) {
      for (std::size_t k = 0; k < K; ++k) r.add(static_cast<int>(L.v(i, j, k)), instance.vehicle_types[k].charge_minutes);
    }
    r.add(static_cast<int>(L.u(j)), -instance.stations[j].connector_daily_minutes);
    rows.push_back(std::move(r));
  }
  for (std::size_t j = 0; j < J; ++j) {
    LinearRow r{"conn_" + std::to_string(j), {}, {}, RowSense::LessEqual, 0.0};
    r.add(static_cast<int>(L.x(j)), -static_cast<double>(instance.stations[j].max_connectors));
    r.add(static_cast<int>(L.u(j)), 1.0);
    rows.push_back(std::move(r));
  }
  for (std::size_t j = 0; j < J; ++j) {
    LinearRow r{"open_" + std::to_string(j), {}, {}, RowSense::LessEqual, 0.0};
    r.add(static_cast<int>(L.x(j)), -m_open);
    for (std::size_t i = 0; i < I; ++i) r.add(static_cast<int>(L.y(i, j)), 1.0);
    rows.push_back(std::move(r));
  }
  for (std::size_t i = 0; i < I; ++i) {
    LinearRow r{"cover_" + std::to_string(i), {}, {}, RowSense::GreaterEqual, static_cast<double>(scenario.redundancy)};
    for (std::size_t j = 0; j < J; ++j) r.add(static_cast<int>(L.y(i, j)), 1.0);
    rows.push_back(std::move(r));
  }
  {
    LinearRow r{"maxst", {}, {}, RowSense::LessEqual, static_cast<double>(scenario.max_stations)};
    for (std::size_t j = 0; j < J; ++j) r.add(static_cast<int>(L.x(j)), 1.0);
    rows.push_back(std::move(r));
  }
  for (std::size_t j = 0; j < J; ++j) {
    if (!instance.stations[j].forced_open) continue;
    LinearRow r{"force_" + std::to_string(j), {}, {}, RowSense::Equal, 1.0};
    r.add(static_cast<int>(L.x(j)), 1.0);
    rows.push_back(std::move(r));
  }
  return built;
}

std::int64_t energy_milli_kwh(const VehicleType& type) {
  return static_cast<std::int64_t>(std::llround(type.energy_kwh * 1000.0));
}

namespace {

Money revenue_from_milli_kwh(const Instance& instance, std::int64_t milli_kwh) {
  // tariff (centi/kWh) * energy (milli-kWh) / 1000, rounded once.
  std::int64_t scaled = checked_mul(instance.tariff_per_kwh.centi(), milli_kwh);
  return Money::from_centi(div_round_half_up(scaled, 1000));
}

}  // namespace

Money compute_revenue(const Instance& instance) {
  std::int64_t milli = 0;
  for (const auto& d : instance.demands) {
    for (std::size_t k = 0; k < d.demand.size() && k < instance.vehicle_types.size(); ++k) {
      milli = checked_add(milli, checked_mul(d.demand[k], energy_milli_kwh(instance.vehicle_types[k])));
    }
  }
  return revenue_from_milli_kwh(instance, milli);
}

Money revenue_of_assignment(const Instance& instance, const Solution& solution) {
  std::int64_t milli = 0;
  for (std::size_t i = 0; i < solution.num_demands; ++i) {
    for (std::size_t j = 0; j < solution.num_stations; ++j) {
      for (std::size_t k = 0; k < solution.num_vehicle_types; ++k) {
        milli = checked_add(milli, checked_mul(solution.assign(i, j, k), energy_milli_kwh(instance.vehicle_types[k])));
      }
    }
  }
  return revenue_from_milli_kwh(instance, milli);
}

Money compute_cost(std::span<const Money> open_station_costs, std::int64_t connector_count,
                   Money connector_daily_cost) {
  Money total;
  for (Money h : open_station_costs) total += h;
  return total + connector_daily_cost.times(connector_count);
}

Money compute_cost(std::int64_t open_count, std::int64_t connector_count, Money station_daily_cost,
                   Money connector_daily_cost) {
  return station_daily_cost.times(open_count) + connector_daily_cost.times(connector_count);
}

Money cost_of_solution(const Instance& instance, const Solution& solution) {
  std::vector<Money> costs;
  for (std::size_t j = 0; j < solution.num_stations; ++j) {
    if (solution.open[j]) costs.push_back(instance.stations[j].daily_open_cost);
  }
  return compute_cost(costs, solution.connector_total(), instance.connector_daily_cost);
}

namespace {

std::string at_ij(std::size_t i, std::size_t j) { return "i=" + std::to_string(i) + ",j=" + std::to_string(j); }

bool leq(double lhs, double rhs) { return lhs <= rhs + 1e-9 * std::max(1.0, std::abs(rhs)); }

}  // namespace

AuditReport audit_solution(const Instance& instance, const Scenario& scenario, const Solution& s) {
  const std::size_t I = instance.num_demands();
  const std::size_t J = instance.num_stations();
  const std::size_t K = instance.num_vehicle_types();
  if (s.num_demands != I || s.num_stations != J || s.num_vehicle_types != K || s.open.size() != J ||
      s.connectors.size() != J || s.covered.size() != I * J || s.assigned.size() != I * J * K) {
    throw std::invalid_argument("solution dimensions do not match the instance");
  }
  AuditReport report;
  auto violate = [&](ConstraintFamily f, std::string where, std::string msg) {
    report.violations.push_back({f, std::move(where), std::move(msg)});
  };

  for (std::size_t j = 0; j < J; ++j) {
    if (s.open[j] > 1) violate(ConstraintFamily::Domain, "j=" + std::to_string(j), "x must be binary");
    if (s.connectors[j] < 0) violate(ConstraintFamily::Domain, "j=" + std::to_string(j), "u must be >= 0");
  }
  for (std::size_t i = 0; i < I; ++i) {
    for (std::size_t j = 0; j < J; ++j) {
      if (s.cover(i, j) > 1) violate(ConstraintFamily::Domain, at_ij(i, j), "y must be binary");
      for (std::size_t k = 0; k < K; ++k) {
        if (s.assign(i, j, k) < 0) violate(ConstraintFamily::Domain, at_ij(i, j) + ",k=" + std::to_string(k), "v must be >= 0");
      }
    }
  }

  const double m_open = open_link_m(instance, scenario);
  for (std::size_t i = 0; i < I; ++i) {
    const double m_assign = assign_link_m(instance, scenario, i);
    for (std::size_t j = 0; j < J; ++j) {
      double charged = 0;
      for (std::size_t k = 0; k < K; ++k) charged += static_cast<double>(s.assign(i, j, k));
      if (!leq(charged, m_assign * s.cover(i, j))) {
        violate(ConstraintFamily::AssignLink, at_ij(i, j), "vehicles charged at a station that does not serve the demand point");
      }
      if (!leq(instance.travel_minutes.at(i, j) * s.cover(i, j), scenario.d_max_minutes)) {
        violate(ConstraintFamily::TravelLimit, at_ij(i, j), "served beyond the travel-time threshold");
      }
    }
  }
  for (std::size_t i = 0; i < I; ++i) {
    for (std::size_t k = 0; k < K; ++k) {
      std::int64_t sum = 0;
      for (std::size_t j = 0; j < J; ++j) sum += s.assign(i, j, k);
      if (sum != instance.demands[i].demand[k]) {
        violate(ConstraintFamily::DemandFulfilled, "i=" + std::to_string(i) + ",k=" + std::to_string(k),
                "assigned " + std::to_string(sum) + " of " + std::to_string(instance.demands[i].demand[k]) + " vehicles");
      }
    }
  }
  for (std::size_t j = 0; j < J; ++j) {
    const auto& st = instance.stations[j];
    double load = 0;
    for (std::size_t i = 0; i < I; ++i) {
      for (std::size_t k = 0; k < K; ++k) load += instance.vehicle_types[k].charge_minutes * static_cast<double>(s.assign(i, j, k));
    }
    const std::string where = "j=" + std::to_string(j);
    if (!leq(load, st.connector_daily_minutes * static_cast<double>(s.connectors[j]))) {
      violate(ConstraintFamily::ChargingCapacity, where, "charging load exceeds installed connector minutes");
    }
    if (!leq(static_cast<double>(s.connectors[j]), static_cast<double>(st.max_connectors) * s.open[j])) {
      violate(ConstraintFamily::ConnectorLimit, where,
              s.open[j] ? "more connectors than the station can hold" : "connectors installed at a closed station");
    }
    double served = 0;
    for (std::size_t i = 0; i < I; ++i) served += s.cover(i, j);
    if (!leq(served, m_open * s.open[j])) violate(ConstraintFamily::OpenLink, where, "demand assigned to a closed station");
    if (st.forced_open && s.open[j] != 1) violate(ConstraintFamily::ForcedOpen, where, "forced station is closed");
  }
  for (std::size_t i = 0; i < I; ++i) {
    int cover = 0;
    for (std::size_t j = 0; j < J; ++j) cover += s.cover(i, j);
    if (cover < scenario.redundancy) {
      violate(ConstraintFamily::Coverage, "i=" + std::to_string(i),
              "covered by " + std::to_string(cover) + " stations, need " + std::to_string(scenario.redundancy));
    }
  }
  {
    int opened = 0;
    for (auto x : s.open) opened += x;
    if (opened > scenario.max_stations) {
      violate(ConstraintFamily::MaxStations, "", std::to_string(opened) + " stations open, limit " + std::to_string(scenario.max_stations));
    }
  }

  report.feasible = report.violations.empty();
  report.revenue = revenue_of_assignment(instance, s);
  report.cost = cost_of_solution(instance, s);
  report.profit = report.revenue - report.cost;
  report.money_matches = report.revenue == s.revenue && report.cost == s.cost && report.profit == s.profit;
  return report;
}

std::vector<double> flatten_solution(const ModelLayout& L, const Solution& s) {
  std::vector<double> z(L.num_variables(), 0.0);
  for (std::size_t j = 0; j < L.stations; ++j) {
    z[L.x(j)] = s.open[j];
    z[L.u(j)] = static_cast<double>(s.connectors[j]);
  }
  for (std::size_t i = 0; i < L.demands; ++i) {
    for (std::size_t j = 0; j < L.stations; ++j) {
      z[L.y(i, j)] = s.cover(i, j);
      for (std::size_t k = 0; k < L.vehicle_types; ++k) z[L.v(i, j, k)] = static_cast<double>(s.assign(i, j, k));
    }
  }
  return z;
}

}  // namespace evsite
