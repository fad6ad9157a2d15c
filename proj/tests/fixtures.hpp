#pragma once

#include <random>
#include <string>

#include "evsite/model.hpp"

namespace evsite::testing {

inline Instance two_station_toy() {
  Instance inst;
  inst.name = "toy";
  inst.vehicle_types = {{0, "motorcycle", 3.5, 20.0}, {1, "car", 30.0, 90.0}};
  inst.demands = {{0, "d0", -7.25, 112.75, {4, 1}}, {1, "d1", -7.27, 112.76, {2, 0}}, {2, "d2", -7.30, 112.70, {0, 2}}};
  inst.stations = {{0, "s0", -7.26, 112.75, Money::from_rupiah(403288), 10, 720.0, true},
                   {1, "s1", -7.29, 112.71, Money::from_rupiah(403288), 10, 720.0, false}};
  inst.travel_minutes = TravelMatrix(3, 2);
  const double d[3][2] = {{5, 30}, {10, 25}, {40, 8}};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 2; ++j) inst.travel_minutes.at(i, j) = d[i][j];
  }
  inst.tariff_per_kwh = parse_rupiah("2644.78");
  inst.connector_daily_cost = Money::from_rupiah(110244);
  return inst;
}

struct RandomInstanceShape {
  int min_demands = 3, max_demands = 15;
  int min_stations = 2, max_stations = 6;
  int vehicle_types = 2;
  int max_vehicles = 6;
};

// Small random instance with whole-minute travel times and integral money.
inline Instance random_instance(std::uint64_t seed, const RandomInstanceShape& shape = {}) {
  std::mt19937_64 rng(seed);
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  const int I = uni(shape.min_demands, shape.max_demands);
  const int J = uni(shape.min_stations, shape.max_stations);
  const int K = shape.vehicle_types;
  Instance inst;
  inst.name = "random-" + std::to_string(seed);
  const double energies[] = {3.5, 20.25, 45.0};
  const double minutes[] = {20.0, 45.0, 90.0};
  for (int k = 0; k < K; ++k) inst.vehicle_types.push_back({k, "type" + std::to_string(k), energies[k % 3], minutes[k % 3]});
  for (int i = 0; i < I; ++i) {
    DemandPoint d{i, "d" + std::to_string(i), -7.2 - 0.01 * uni(0, 20), 112.7 + 0.01 * uni(0, 20), {}};
    for (int k = 0; k < K; ++k) d.demand.push_back(uni(0, shape.max_vehicles));
    inst.demands.push_back(d);
  }
  for (int j = 0; j < J; ++j) {
    inst.stations.push_back({j, "s" + std::to_string(j), -7.2 - 0.01 * uni(0, 20), 112.7 + 0.01 * uni(0, 20),
                             Money::from_rupiah(1000 * uni(40, 160)), uni(1, 10), 720.0, j == 0});
  }
  inst.travel_minutes = TravelMatrix(I, J);
  for (int i = 0; i < I; ++i) {
    for (int j = 0; j < J; ++j) inst.travel_minutes.at(i, j) = uni(2, 45);
  }
  inst.tariff_per_kwh = parse_rupiah("2644.78");
  inst.connector_daily_cost = Money::from_rupiah(1000 * uni(10, 40));
  return inst;
}

}  // namespace evsite::testing
