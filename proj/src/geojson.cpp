#include "evsite/io.hpp"

namespace evsite::io {

namespace {

constexpr const char* kDemandColor = "#0000ff";
constexpr const char* kCandidateColor = "#ffff00";
constexpr const char* kSelectedColor = "#ff0000";

Json point(double lat, double lon) {
  return Json{{"type", "Point"}, {"coordinates", Json::array({lon, lat})}};
}

}  // namespace

Json geojson(const Instance& inst, const Solution* solution) {
  if (solution && solution->status == SolveStatus::Optimal &&
      (solution->open.size() != inst.num_stations() || solution->connectors.size() != inst.num_stations())) {
    throw std::invalid_argument("solution does not match the instance");
  }
  const bool solved = solution && solution->status == SolveStatus::Optimal;
  Json features = Json::array();
  for (const auto& d : inst.demands) {
    std::int64_t vehicles = 0;
    for (auto w : d.demand) vehicles += w;
    Json props{{"role", "demand"},        {"id", d.id},          {"name", d.name},
               {"demand", d.demand},      {"vehicles", vehicles}, {"marker-color", kDemandColor}};
    features.push_back(Json{{"type", "Feature"}, {"geometry", point(d.lat, d.lon)}, {"properties", std::move(props)}});
  }
  for (std::size_t j = 0; j < inst.num_stations(); ++j) {
    const auto& s = inst.stations[j];
    const bool selected = solved && solution->open[j];
    Json props{{"role", selected ? "selected" : "candidate"},
               {"id", s.id},
               {"name", s.name},
               {"forced_open", s.forced_open},
               {"connectors", solved ? solution->connectors[j] : std::int64_t{0}},
               {"max_connectors", s.max_connectors},
               {"daily_open_cost", s.daily_open_cost.centi()},
               {"marker-color", selected ? kSelectedColor : kCandidateColor}};
    features.push_back(Json{{"type", "Feature"}, {"geometry", point(s.lat, s.lon)}, {"properties", std::move(props)}});
  }
  Json doc;
  doc["type"] = "FeatureCollection";
  doc["name"] = inst.name;
  doc["features"] = std::move(features);
  return doc;
}

std::string export_geojson(const Instance& instance, const Solution* solution) {
  return to_text(geojson(instance, solution));
}

}  // namespace evsite::io
