#pragma once

// Documents and exchange formats: instance files, travel-matrix CSV,
// solutions and sweep reports, fixed-format MPS, GeoJSON, and the seeded
// synthetic-instance generator with its calibration search.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "evsite/model.hpp"
#include "evsite/scenario.hpp"
#include "json.hpp"

namespace evsite::io {

using Json = nlohmann::ordered_json;

// Schema or dimension problems, each with a JSON-pointer path (or a
// "line N" location for syntax and CSV errors).
class DocumentError : public std::runtime_error {
 public:
  explicit DocumentError(std::vector<Finding> findings);
  const std::vector<Finding>& findings() const { return findings_; }

 private:
  std::vector<Finding> findings_;
};

// Pretty-prints with two-space indent; arrays holding only scalars stay on
// one line. Deterministic for a given document.
std::string to_text(const Json& doc);

// Parses text, mapping syntax errors to DocumentError with line/column.
Json parse_text(std::string_view text);

// ---------------------------------------------------------------------------
// Instances.

// Strict schema: unknown or missing fields are errors. A relative
// {"csv": path} travel matrix is resolved against `base_dir`.
Instance instance_from_json(const Json& doc, const std::filesystem::path& base_dir = {});
Json instance_to_json(const Instance& instance);

Instance load_instance(std::string_view text, const std::filesystem::path& base_dir = {});
Instance load_instance_file(const std::filesystem::path& path);
std::string save_instance(const Instance& instance);
void save_instance_file(const Instance& instance, const std::filesystem::path& path);

// Header "demand_id,<station id>...", then one row per demand point.
TravelMatrix parse_travel_csv(std::string_view text, std::size_t demands, std::size_t stations);
std::string travel_to_csv(const Instance& instance);

// ---------------------------------------------------------------------------
// Scenarios, solutions, reports.

Json scenario_to_json(const Scenario& scenario);
Scenario scenario_from_json(const Json& doc, const Instance& instance);

// Solution document: status, scenario, money as raw centi, open stations,
// connectors, coverage pairs and non-zero assignments.
Json solution_to_json(const Instance& instance, const Scenario& scenario, const Solution& solution);

struct SolutionDocument {
  Scenario scenario;
  Solution solution;
};
SolutionDocument solution_from_json(const Json& doc, const Instance& instance);

Json audit_to_json(const AuditReport& report);

// Columns d_max,R,status,stations,connectors,revenue,cost,profit; stations
// as ';'-joined ids and money as raw centi.
std::string report_to_csv(const SweepReport& report);
Json report_to_json(const SweepReport& report, bool include_timing = true);
Json delta_to_json(const DeltaReport& delta);

// ---------------------------------------------------------------------------
// MPS (fixed format). A maximizing problem is written with the objective
// negated and a "* OBJSENSE MAXIMIZE" header comment; parse_mps undoes both
// and also accepts an OBJSENSE section. Names longer than eight characters
// become prefix + '#' + base-36 index. Branch priorities are not stored.

class MpsError : public std::runtime_error {
 public:
  MpsError(std::size_t line, const std::string& message);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

std::string export_mps(const MipProblem& problem, const std::string& name);
MipProblem parse_mps(std::string_view text);

// Eight-character fixed-format name for `name`, unique via `index`.
std::string mps_name(const std::string& name, std::size_t index);

// ---------------------------------------------------------------------------
// GeoJSON FeatureCollection: demand points (blue), candidates (yellow) and,
// when a solution is given, its open stations as "selected" (red).

std::string export_geojson(const Instance& instance, const Solution* solution = nullptr);
Json geojson(const Instance& instance, const Solution* solution = nullptr);

// ---------------------------------------------------------------------------
// Synthetic instances.

struct GeneratorConfig {
  std::uint64_t seed = 1;
  int n_demands = 98;
  int n_stations = 11;
  // Vehicle mix: one entry per type.
  std::vector<std::string> type_names{"motorcycle", "car"};
  std::vector<std::int64_t> type_totals{670, 111};
  std::vector<double> energy_kwh{3.0, 65.919};
  std::vector<double> charge_minutes{20.0, 90.0};
  // Square study area centred on (center_lat, center_lon).
  double center_lat = -7.2575;
  double center_lon = 112.7521;
  double extent_km = 16.0;
  // 0 gives uniform demand; larger values concentrate it near a hotspot
  // with a heavy tail.
  double imbalance_exponent = 1.5;
  double congestion_min_per_km = 2.5;
  Money station_daily_cost = Money::from_rupiah(403288);
  Money connector_daily_cost = Money::from_rupiah(110244);
  int max_connectors = 10;
  double connector_daily_minutes = 720.0;
  Money tariff_per_kwh = Money::from_centi(264478);
  std::string name = "synthetic";
};

// Throws std::invalid_argument for a config that cannot produce a valid
// instance.
Instance generate_instance(const GeneratorConfig& config);

// Great-circle distance in km.
double haversine_km(double lat1, double lon1, double lat2, double lon2);

struct CalibrationTarget {
  std::string name;
  bool met = false;
  bool hard = true;
  std::string detail;
};

struct CalibrationReport {
  bool success = false;        // every hard target met
  std::uint64_t seed = 0;
  std::int64_t seeds_tried = 0;
  double congestion_min_per_km = 0.0;
  std::vector<double> energy_kwh;
  std::vector<CalibrationTarget> targets;
  std::vector<std::string> unmet() const;
};

struct CalibrationResult {
  Instance instance;
  CalibrationReport report;
};

struct CalibrationOptions {
  std::uint64_t first_seed = 1;
  std::uint64_t last_seed = 2000;
  double budget_seconds = 600.0;
  int threads = 1;  // 0 picks the hardware concurrency
  GeneratorConfig base;
};

// Searches seeds in order for an instance reproducing the reference
// solution structure. Returns the first seed meeting every target, else the
// first meeting every hard target, else the closest attempt with its unmet
// targets listed.
CalibrationResult calibrate_reference(const CalibrationOptions& options = {});

// Re-evaluates the calibration targets on an existing instance.
std::vector<CalibrationTarget> evaluate_reference_targets(const Instance& instance);

Json calibration_to_json(const CalibrationReport& report);

}  // namespace evsite::io
