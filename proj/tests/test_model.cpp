#include <random>

#include "doctest.h"
#include "evsite/model.hpp"
#include "fixtures.hpp"

using namespace evsite;

namespace {

Scenario scenario_for(const Instance& inst, double dmax, int redundancy = 1) {
  return {dmax, redundancy, static_cast<int>(inst.num_stations()), BigM::tight()};
}

// Hand-checked feasible solution of the toy at d_max = 30: s0 serves d0 and
// d1, s1 serves d2.
Solution toy_solution(const Instance& inst) {
  Solution s = Solution::empty_for(inst, SolveStatus::Optimal);
  s.open = {1, 1};
  s.connectors = {1, 1};
  s.cover(0, 0) = 1;
  s.cover(1, 0) = 1;
  s.cover(2, 1) = 1;
  s.assign(0, 0, 0) = 4;
  s.assign(0, 0, 1) = 1;
  s.assign(1, 0, 0) = 2;
  s.assign(2, 1, 1) = 2;
  s.revenue = revenue_of_assignment(inst, s);
  s.cost = cost_of_solution(inst, s);
  s.profit = s.revenue - s.cost;
  return s;
}

bool violates(const AuditReport& r, ConstraintFamily f) {
  for (const auto& v : r.violations) {
    if (v.family == f) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("validate_instance") {
  Instance inst = testing::two_station_toy();
  CHECK(validate_instance(inst).empty());

  SUBCASE("negative demand") {
    inst.demands[1].demand[0] = -1;
    auto f = validate_instance(inst);
    REQUIRE(f.size() == 1);
    CHECK(f[0].message == "demand must be >= 0");
    CHECK(f[0].path == "/demand_points/1/demand/0");
  }
  SUBCASE("no forced station") {
    inst.stations[0].forced_open = false;
    auto f = validate_instance(inst);
    REQUIRE(f.size() == 1);
    CHECK(f[0].message.find("forced_open") != std::string::npos);
  }
  SUBCASE("bad matrix and vehicle data") {
    inst.travel_minutes = TravelMatrix(3, 3);
    inst.vehicle_types[1].charge_minutes = 0;
    inst.stations[1].max_connectors = 0;
    CHECK(validate_instance(inst).size() == 3);
  }
}

TEST_CASE("build_mip dimensions and structure") {
  SUBCASE("reference-scale variable count") {
    testing::RandomInstanceShape shape{98, 98, 11, 11, 2, 3};
    Instance inst = testing::random_instance(5, shape);
    auto built = build_mip(inst, scenario_for(inst, 30));
    CHECK(built.problem.num_variables() == 3256u);
    CHECK(built.layout.u(10) == 3255u);
  }
  SUBCASE("single forced station is pinned") {
    Instance inst = testing::two_station_toy();
    inst.demands.resize(1);
    inst.stations.resize(1);
    inst.vehicle_types.resize(1);
    inst.demands[0].demand = {3};
    TravelMatrix d(1, 1);
    d.at(0, 0) = 5;
    inst.travel_minutes = d;
    auto built = build_mip(inst, scenario_for(inst, 30));
    CHECK(built.problem.num_variables() == 4u);
    const auto& last = built.problem.rows.back();
    CHECK(last.name == "force_0");
    CHECK(last.sense == RowSense::Equal);
    CHECK(last.rhs == 1.0);
    CHECK(last.index == std::vector<int>{0});
    CHECK(built.problem.variables[0].lower == 1.0);
  }
  SUBCASE("travel beyond d_max leaves only y = 0") {
    Instance inst = testing::two_station_toy();
    Scenario sc = scenario_for(inst, 30);
    sc.big_m = BigM::fixed(1000);
    auto built = build_mip(inst, sc);
    // d_20 = 40 > 30: the row 40 y <= 30 admits y = 0 only among {0, 1}.
    const std::string target = "dmax_2_0";
    const LinearRow* row = nullptr;
    for (const auto& r : built.problem.rows) {
      if (r.name == target) row = &r;
    }
    REQUIRE(row != nullptr);
    std::vector<double> z(built.problem.num_variables(), 0.0);
    CHECK(row_satisfied(*row, row->activity(z), 1e-9));
    z[built.layout.y(2, 0)] = 1.0;
    CHECK_FALSE(row_satisfied(*row, row->activity(z), 1e-9));
  }
  SUBCASE("tight big-M values") {
    Instance inst = testing::two_station_toy();
    Scenario sc = scenario_for(inst, 30);
    CHECK(assign_link_m(inst, sc, 0) == 5.0);
    CHECK(open_link_m(inst, sc) == 3.0);
    sc.big_m = BigM::fixed(1000);
    CHECK(assign_link_m(inst, sc, 0) == 1000.0);
  }
  SUBCASE("rejects redundancy beyond the station count") {
    Instance inst = testing::two_station_toy();
    CHECK_THROWS_AS(build_mip(inst, scenario_for(inst, 30, 3)), std::invalid_argument);
  }
}

TEST_CASE("money") {
  Instance inst = testing::two_station_toy();
  SUBCASE("zero demand") {
    for (auto& d : inst.demands) d.demand = {0, 0};
    CHECK(compute_revenue(inst) == Money{});
  }
  SUBCASE("one car at 30 kWh") {
    for (auto& d : inst.demands) d.demand = {0, 0};
    inst.demands[0].demand = {0, 1};
    CHECK(compute_revenue(inst).centi() == 7934340);
  }
  SUBCASE("rounding happens once at the aggregate") {
    // 3 x 0.001 kWh at 2644.78 = 7.93434 Rp -> 793 centi; per-vehicle rounding would give 3 x 264.
    inst.vehicle_types[0].energy_kwh = 0.001;
    for (auto& d : inst.demands) d.demand = {0, 0};
    inst.demands[0].demand = {3, 0};
    CHECK(compute_revenue(inst).centi() == 793);
  }
  SUBCASE("cost identities") {
    const Money h = Money::from_rupiah(403288);
    const Money g = Money::from_rupiah(110244);
    CHECK(compute_cost(0, 0, h, g) == Money{});
    CHECK(compute_cost(5, 33, h, g) == Money::from_rupiah(5654492));
    CHECK(compute_cost(4, 33, h, g) == Money::from_rupiah(5251204));
    std::vector<Money> hs{h, h};
    CHECK(compute_cost(hs, 1, g) == Money::from_rupiah(2 * 403288 + 110244));
  }
  SUBCASE("overflow is detected") {
    inst.demands[0].demand = {std::int64_t{1} << 60, 0};
    CHECK_THROWS_AS(compute_revenue(inst), MoneyOverflow);
  }
}

TEST_CASE("audit_solution") {
  Instance inst = testing::two_station_toy();
  Scenario sc = scenario_for(inst, 30);
  Solution s = toy_solution(inst);
  AuditReport ok = audit_solution(inst, sc, s);
  CHECK(ok.feasible);
  CHECK(ok.money_matches);
  CHECK(ok.revenue == compute_revenue(inst));

  SUBCASE("unassigned demand") {
    s.assign(1, 0, 0) = 1;
    auto r = audit_solution(inst, sc, s);
    CHECK_FALSE(r.feasible);
    CHECK(violates(r, ConstraintFamily::DemandFulfilled));
  }
  SUBCASE("connectors at a closed station") {
    s.open[1] = 0;
    s.connectors[1] = 3;
    s.cover(2, 1) = 0;
    s.assign(2, 1, 1) = 0;
    auto r = audit_solution(inst, sc, s);
    CHECK(violates(r, ConstraintFamily::ConnectorLimit));
  }
  SUBCASE("forced, coverage and capacity") {
    s.open[0] = 0;
    s.connectors[0] = 0;
    auto r = audit_solution(inst, sc, s);
    CHECK(violates(r, ConstraintFamily::ForcedOpen));
    CHECK(violates(r, ConstraintFamily::ChargingCapacity));
    CHECK(violates(r, ConstraintFamily::OpenLink));
  }
  SUBCASE("redundancy two is not met") {
    auto r = audit_solution(inst, scenario_for(inst, 30, 2), s);
    CHECK(violates(r, ConstraintFamily::Coverage));
  }
  SUBCASE("money mismatch is flagged, not a violation") {
    s.profit = s.profit + Money::from_centi(1);
    auto r = audit_solution(inst, sc, s);
    CHECK(r.feasible);
    CHECK_FALSE(r.money_matches);
  }
  SUBCASE("dimension mismatch throws") {
    s.connectors.pop_back();
    CHECK_THROWS_AS(audit_solution(inst, sc, s), std::invalid_argument);
  }
}

TEST_CASE("audit agrees with row-checking the built model") {
  // Property: random perturbations of a feasible solution are classified
  // identically by the audit and by evaluating every row and bound.
  std::mt19937_64 rng(17);
  Instance inst = testing::two_station_toy();
  for (BigM m : {BigM::tight(), BigM::fixed(1000)}) {
    Scenario sc = scenario_for(inst, 30);
    sc.big_m = m;
    auto built = build_mip(inst, sc);
    const Solution base = toy_solution(inst);
    int feasible = 0;
    for (int t = 0; t < 300; ++t) {
      Solution s = base;
      const int kind = static_cast<int>(rng() % 4);
      if (kind == 0) {
        auto j = rng() % s.open.size();
        s.open[j] ^= 1;
      } else if (kind == 1) {
        auto idx = rng() % s.assigned.size();
        s.assigned[idx] += static_cast<int>(rng() % 3) - 1;
      } else if (kind == 2) {
        auto j = rng() % s.connectors.size();
        s.connectors[j] += static_cast<int>(rng() % 5) - 2;
      } else {
        auto idx = rng() % s.covered.size();
        s.covered[idx] ^= 1;
      }
      const bool audited = audit_solution(inst, sc, s).feasible;
      auto z = flatten_solution(built.layout, s);
      bool rows_ok = true;
      for (std::size_t c = 0; c < z.size(); ++c) {
        rows_ok = rows_ok && z[c] >= built.problem.variables[c].lower && z[c] <= built.problem.variables[c].upper;
      }
      for (const auto& row : built.problem.rows) rows_ok = rows_ok && row_satisfied(row, row.activity(z), 1e-9);
      CHECK(audited == rows_ok);
      feasible += audited;
    }
    CHECK(feasible > 0);
  }
}
