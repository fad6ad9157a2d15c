#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "evsite/io.hpp"

namespace evsite::io {

namespace {

std::string describe(const std::vector<Finding>& findings) {
  std::string msg = findings.size() == 1 ? "document error" : std::to_string(findings.size()) + " document errors";
  for (const auto& f : findings) msg += "\n  " + (f.path.empty() ? std::string("/") : f.path) + ": " + f.message;
  return msg;
}

// Whole-valued floats print without a fractional part.
std::string scalar(const Json& j) {
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (std::isfinite(v) && v == std::trunc(v) && std::abs(v) < 1e15) return std::to_string(static_cast<std::int64_t>(v));
  }
  return j.dump();
}

void print(const Json& j, std::string& out, int depth) {
  const std::string pad(static_cast<std::size_t>(depth + 1) * 2, ' ');
  const std::string close(static_cast<std::size_t>(depth) * 2, ' ');
  if (j.is_object()) {
    if (j.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    bool first = true;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!first) out += ",\n";
      first = false;
      out += pad + Json(it.key()).dump() + ": ";
      print(it.value(), out, depth + 1);
    }
    out += "\n" + close + "}";
  } else if (j.is_array()) {
    if (j.empty()) {
      out += "[]";
      return;
    }
    const bool flat = std::none_of(j.begin(), j.end(), [](const Json& e) { return e.is_structured(); });
    if (flat) {
      out += "[";
      for (std::size_t i = 0; i < j.size(); ++i) out += (i ? ", " : "") + scalar(j[i]);
      out += "]";
      return;
    }
    out += "[\n";
    for (std::size_t i = 0; i < j.size(); ++i) {
      out += pad;
      print(j[i], out, depth + 1);
      out += i + 1 < j.size() ? ",\n" : "\n";
    }
    out += close + "]";
  } else {
    out += scalar(j);
  }
}

// Strict reader that collects findings instead of stopping at the first.
class Reader {
 public:
  explicit Reader(std::vector<Finding>& findings) : findings_(findings) {}

  void error(const std::string& path, const std::string& message) { findings_.push_back({path, message}); }

  // Checks that `j` is an object with exactly the required keys (plus any
  // optional ones).
  bool object(const Json& j, const std::string& path, std::initializer_list<const char*> required,
              std::initializer_list<const char*> optional = {}) {
    if (!j.is_object()) {
      error(path, "expected an object");
      return false;
    }
    std::set<std::string> known;
    for (const char* k : required) {
      known.insert(k);
      if (!j.contains(k)) error(path + "/" + k, "missing required field");
    }
    for (const char* k : optional) known.insert(k);
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!known.count(it.key())) error(path + "/" + it.key(), "unknown field");
    }
    return true;
  }

  const Json* field(const Json& j, const char* key) const {
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
  }

  std::int64_t integer(const Json& j, const char* key, const std::string& path, std::int64_t fallback = 0) {
    const Json* v = field(j, key);
    if (!v) return fallback;
    return integer_value(*v, path + "/" + key, fallback);
  }

  std::int64_t integer_value(const Json& v, const std::string& path, std::int64_t fallback = 0) {
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9e15) return static_cast<std::int64_t>(d);
    }
    error(path, "expected an integer");
    return fallback;
  }

  double number(const Json& j, const char* key, const std::string& path, double fallback = 0.0) {
    const Json* v = field(j, key);
    if (!v) return fallback;
    return number_value(*v, path + "/" + key, fallback);
  }

  double number_value(const Json& v, const std::string& path, double fallback = 0.0) {
    if (v.is_number()) return v.get<double>();
    error(path, "expected a number");
    return fallback;
  }

  std::string string(const Json& j, const char* key, const std::string& path) {
    const Json* v = field(j, key);
    if (!v) return {};
    if (!v->is_string()) {
      error(path + "/" + key, "expected a string");
      return {};
    }
    return v->get<std::string>();
  }

  bool boolean(const Json& j, const char* key, const std::string& path, bool fallback = false) {
    const Json* v = field(j, key);
    if (!v) return fallback;
    if (!v->is_boolean()) {
      error(path + "/" + key, "expected true or false");
      return fallback;
    }
    return v->get<bool>();
  }

  // Rupiah amounts are decimal strings with at most two fraction digits.
  Money money(const Json& j, const char* key, const std::string& path) {
    const Json* v = field(j, key);
    if (!v) return {};
    if (!v->is_string()) {
      error(path + "/" + key, "expected a Rupiah amount as a string, e.g. \"2644.78\"");
      return {};
    }
    try {
      return parse_rupiah(v->get<std::string>());
    } catch (const std::exception& e) {
      error(path + "/" + key, e.what());
      return {};
    }
  }

  const Json* array(const Json& j, const char* key, const std::string& path) {
    const Json* v = field(j, key);
    if (!v) return nullptr;
    if (!v->is_array()) {
      error(path + "/" + key, "expected an array");
      return nullptr;
    }
    return v;
  }

 private:
  std::vector<Finding>& findings_;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DocumentError({{path.string(), "cannot open file"}});
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  // Write to a sibling then rename, so a failure leaves no partial file.
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("cannot write " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  for (auto& s : out) {
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.pop_back();
    while (!s.empty() && s.front() == ' ') s.erase(s.begin());
  }
  return out;
}

std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

Json big_m_to_json(const BigM& m) {
  Json j;
  if (m.mode == BigM::Mode::Tight) {
    j["mode"] = "tight";
  } else {
    j["mode"] = "fixed";
    j["value"] = m.value;
  }
  return j;
}

}  // namespace

DocumentError::DocumentError(std::vector<Finding> findings)
    : std::runtime_error(describe(findings)), findings_(std::move(findings)) {}

std::string to_text(const Json& doc) {
  std::string out;
  print(doc, out, 0);
  out += "\n";
  return out;
}

Json parse_text(std::string_view text) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    // Translate the byte offset into a line and column.
    std::size_t line = 1, col = 1;
    const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < upto; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string what = e.what();
    if (auto pos = what.find("parse error"); pos != std::string::npos) what = what.substr(pos);
    throw DocumentError({{"line " + std::to_string(line) + ", column " + std::to_string(col), what}});
  }
}

// ---------------------------------------------------------------------------

Instance instance_from_json(const Json& doc, const std::filesystem::path& base_dir) {
  std::vector<Finding> findings;
  Reader rd(findings);
  Instance inst;
  if (!rd.object(doc, "", {"meta", "vehicle_types", "demand_points", "stations", "travel_minutes", "tariff",
                           "connector_daily_cost"})) {
    throw DocumentError(findings);
  }
  if (const Json* meta = rd.field(doc, "meta"); meta && rd.object(*meta, "/meta", {"name", "currency_scale"})) {
    inst.name = rd.string(*meta, "name", "/meta");
    if (rd.field(*meta, "currency_scale") && rd.integer(*meta, "currency_scale", "/meta") != 100) {
      rd.error("/meta/currency_scale", "currency_scale must be 100 (amounts in hundredths of a Rupiah)");
    }
  }
  if (const Json* types = rd.array(doc, "vehicle_types", "")) {
    for (std::size_t k = 0; k < types->size(); ++k) {
      const std::string p = "/vehicle_types/" + std::to_string(k);
      const Json& t = (*types)[k];
      if (!rd.object(t, p, {"id", "name", "energy_kwh", "charge_minutes"})) continue;
      inst.vehicle_types.push_back({static_cast<int>(rd.integer(t, "id", p)), rd.string(t, "name", p),
                                    rd.number(t, "energy_kwh", p), rd.number(t, "charge_minutes", p)});
    }
  }
  if (const Json* demands = rd.array(doc, "demand_points", "")) {
    for (std::size_t i = 0; i < demands->size(); ++i) {
      const std::string p = "/demand_points/" + std::to_string(i);
      const Json& d = (*demands)[i];
      if (!rd.object(d, p, {"id", "name", "lat", "lon", "demand"})) continue;
      DemandPoint dp{static_cast<int>(rd.integer(d, "id", p)), rd.string(d, "name", p), rd.number(d, "lat", p),
                     rd.number(d, "lon", p), {}};
      if (const Json* w = rd.array(d, "demand", p)) {
        for (std::size_t k = 0; k < w->size(); ++k) dp.demand.push_back(rd.integer_value((*w)[k], p + "/demand/" + std::to_string(k)));
      }
      inst.demands.push_back(std::move(dp));
    }
  }
  if (const Json* stations = rd.array(doc, "stations", "")) {
    for (std::size_t j = 0; j < stations->size(); ++j) {
      const std::string p = "/stations/" + std::to_string(j);
      const Json& s = (*stations)[j];
      if (!rd.object(s, p, {"id", "name", "lat", "lon", "daily_open_cost", "max_connectors", "connector_daily_minutes",
                            "forced_open"})) {
        continue;
      }
      inst.stations.push_back({static_cast<int>(rd.integer(s, "id", p)), rd.string(s, "name", p), rd.number(s, "lat", p),
                               rd.number(s, "lon", p), rd.money(s, "daily_open_cost", p),
                               static_cast<int>(rd.integer(s, "max_connectors", p)),
                               rd.number(s, "connector_daily_minutes", p), rd.boolean(s, "forced_open", p)});
    }
  }
  inst.tariff_per_kwh = rd.money(doc, "tariff", "");
  inst.connector_daily_cost = rd.money(doc, "connector_daily_cost", "");

  const std::size_t I = inst.demands.size(), J = inst.stations.size();
  if (const Json* tm = rd.field(doc, "travel_minutes")) {
    if (tm->is_object()) {
      if (rd.object(*tm, "/travel_minutes", {"csv"})) {
        const std::string rel = rd.string(*tm, "csv", "/travel_minutes");
        if (!rel.empty()) {
          std::filesystem::path p = rel;
          if (p.is_relative()) p = base_dir / p;
          try {
            inst.travel_minutes = parse_travel_csv(read_file(p), I, J);
          } catch (const DocumentError& e) {
            for (const auto& f : e.findings()) rd.error("/travel_minutes/csv", p.filename().string() + " " + f.path + ": " + f.message);
          }
        }
      }
    } else if (tm->is_array()) {
      inst.travel_minutes = TravelMatrix(I, J);
      if (tm->size() != I) {
        rd.error("/travel_minutes", "matrix has " + std::to_string(tm->size()) + " rows; expected " + std::to_string(I) +
                                        " (one per demand point)");
      }
      for (std::size_t i = 0; i < tm->size(); ++i) {
        const std::string p = "/travel_minutes/" + std::to_string(i);
        const Json& row = (*tm)[i];
        if (!row.is_array()) {
          rd.error(p, "expected an array");
          continue;
        }
        if (row.size() != J) {
          rd.error(p, "row " + std::to_string(i) + " has " + std::to_string(row.size()) + " entries; expected " +
                          std::to_string(J) + " (one per station)");
          continue;
        }
        for (std::size_t j = 0; j < J && i < I; ++j) inst.travel_minutes.at(i, j) = rd.number_value(row[j], p + "/" + std::to_string(j));
      }
    } else {
      rd.error("/travel_minutes", "expected a matrix or {\"csv\": path}");
    }
  }
  if (!findings.empty()) throw DocumentError(findings);
  if (auto f = validate_instance(inst); !f.empty()) throw DocumentError(f);
  return inst;
}

Json instance_to_json(const Instance& inst) {
  Json doc;
  doc["meta"] = {{"name", inst.name}, {"currency_scale", 100}};
  Json types = Json::array();
  for (const auto& t : inst.vehicle_types) {
    types.push_back({{"id", t.id}, {"name", t.name}, {"energy_kwh", t.energy_kwh}, {"charge_minutes", t.charge_minutes}});
  }
  doc["vehicle_types"] = types;
  Json demands = Json::array();
  for (const auto& d : inst.demands) {
    demands.push_back({{"id", d.id}, {"name", d.name}, {"lat", d.lat}, {"lon", d.lon}, {"demand", d.demand}});
  }
  doc["demand_points"] = demands;
  Json stations = Json::array();
  for (const auto& s : inst.stations) {
    stations.push_back({{"id", s.id},
                        {"name", s.name},
                        {"lat", s.lat},
                        {"lon", s.lon},
                        {"daily_open_cost", format_rupiah_decimal(s.daily_open_cost)},
                        {"max_connectors", s.max_connectors},
                        {"connector_daily_minutes", s.connector_daily_minutes},
                        {"forced_open", s.forced_open}});
  }
  doc["stations"] = stations;
  Json matrix = Json::array();
  for (std::size_t i = 0; i < inst.travel_minutes.rows(); ++i) {
    Json row = Json::array();
    for (double v : inst.travel_minutes.row(i)) row.push_back(v);
    matrix.push_back(row);
  }
  doc["travel_minutes"] = matrix;
  doc["tariff"] = format_rupiah_decimal(inst.tariff_per_kwh);
  doc["connector_daily_cost"] = format_rupiah_decimal(inst.connector_daily_cost);
  return doc;
}

Instance load_instance(std::string_view text, const std::filesystem::path& base_dir) {
  return instance_from_json(parse_text(text), base_dir);
}

Instance load_instance_file(const std::filesystem::path& path) {
  return load_instance(read_file(path), path.parent_path());
}

std::string save_instance(const Instance& instance) { return to_text(instance_to_json(instance)); }

void save_instance_file(const Instance& instance, const std::filesystem::path& path) {
  write_file(path, save_instance(instance));
}

TravelMatrix parse_travel_csv(std::string_view text, std::size_t demands, std::size_t stations) {
  std::vector<Finding> findings;
  std::vector<std::string_view> lines;
  for (std::size_t start = 0; start < text.size();) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) lines.push_back(line);
    start = end + 1;
  }
  TravelMatrix m(demands, stations);
  if (lines.empty()) throw DocumentError({Finding{"line 1", "empty travel-matrix CSV"}});
  const auto header = split(lines[0], ',');
  if (header.empty() || header[0] != "demand_id") findings.push_back({"line 1", "header must start with demand_id"});
  if (header.size() != stations + 1) {
    findings.push_back({"line 1", "header has " + std::to_string(header.size() - 1) + " station columns; expected " +
                                      std::to_string(stations)});
  } else {
    for (std::size_t j = 0; j < stations; ++j) {
      if (header[j + 1] != std::to_string(j)) findings.push_back({"line 1", "station column " + std::to_string(j + 1) + " must be id " + std::to_string(j)});
    }
  }
  if (lines.size() - 1 != demands) {
    findings.push_back({"line " + std::to_string(lines.size()), "CSV has " + std::to_string(lines.size() - 1) +
                                                                   " demand rows; expected " + std::to_string(demands)});
  }
  for (std::size_t r = 1; r < lines.size() && r <= demands && findings.empty(); ++r) {
    const auto cells = split(lines[r], ',');
    const std::string where = "line " + std::to_string(r + 1);
    if (cells.size() != stations + 1) {
      findings.push_back({where, "row " + std::to_string(r - 1) + " has " + std::to_string(cells.size() - 1) + " entries; expected " +
                                     std::to_string(stations)});
      continue;
    }
    if (cells[0] != std::to_string(r - 1)) findings.push_back({where, "demand_id must be " + std::to_string(r - 1)});
    for (std::size_t j = 0; j < stations; ++j) {
      auto v = parse_double(cells[j + 1]);
      if (!v) {
        findings.push_back({where, "column " + std::to_string(j + 2) + " is not a number"});
        continue;
      }
      m.at(r - 1, j) = *v;
    }
  }
  if (!findings.empty()) throw DocumentError(findings);
  return m;
}

std::string travel_to_csv(const Instance& instance) {
  std::string out = "demand_id";
  for (std::size_t j = 0; j < instance.num_stations(); ++j) out += "," + std::to_string(j);
  out += "\n";
  for (std::size_t i = 0; i < instance.travel_minutes.rows(); ++i) {
    out += std::to_string(i);
    for (double v : instance.travel_minutes.row(i)) out += "," + scalar(Json(v));
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------

Json scenario_to_json(const Scenario& sc) {
  return {{"d_max", sc.d_max_minutes},
          {"redundancy", sc.redundancy},
          {"max_stations", sc.max_stations},
          {"big_m", big_m_to_json(sc.big_m)}};
}

Scenario scenario_from_json(const Json& doc, const Instance& instance) {
  std::vector<Finding> findings;
  Reader rd(findings);
  Scenario sc;
  sc.max_stations = static_cast<int>(instance.num_stations());
  if (rd.object(doc, "", {"d_max"}, {"redundancy", "max_stations", "big_m"})) {
    sc.d_max_minutes = rd.number(doc, "d_max", "");
    sc.redundancy = static_cast<int>(rd.integer(doc, "redundancy", "", 1));
    sc.max_stations = static_cast<int>(rd.integer(doc, "max_stations", "", sc.max_stations));
    if (const Json* m = rd.field(doc, "big_m"); m && rd.object(*m, "/big_m", {"mode"}, {"value"})) {
      const std::string mode = rd.string(*m, "mode", "/big_m");
      if (mode == "tight") {
        if (m->contains("value")) rd.error("/big_m/value", "tight mode takes no value");
      } else if (mode == "fixed") {
        sc.big_m = BigM::fixed(m->contains("value") ? rd.number(*m, "value", "/big_m") : 1000.0);
      } else {
        rd.error("/big_m/mode", "expected \"tight\" or \"fixed\"");
      }
    }
  }
  if (!findings.empty()) throw DocumentError(findings);
  if (auto f = validate_scenario(instance, sc); !f.empty()) throw DocumentError(f);
  return sc;
}

Json solution_to_json(const Instance& instance, const Scenario& scenario, const Solution& s) {
  Json doc;
  doc["status"] = to_string(s.status);
  doc["instance"] = instance.name;
  doc["scenario"] = scenario_to_json(scenario);
  if (s.status != SolveStatus::Optimal) return doc;
  doc["open_station_ids"] = s.open_station_ids();
  doc["connectors"] = s.connectors;
  doc["connector_total"] = s.connector_total();
  doc["revenue"] = s.revenue.centi();
  doc["cost"] = s.cost.centi();
  doc["profit"] = s.profit.centi();
  Json cover = Json::array();
  Json assign = Json::array();
  for (std::size_t i = 0; i < s.num_demands; ++i) {
    for (std::size_t j = 0; j < s.num_stations; ++j) {
      if (s.cover(i, j)) cover.push_back(Json::array({i, j}));
      for (std::size_t k = 0; k < s.num_vehicle_types; ++k) {
        if (s.assign(i, j, k) != 0) assign.push_back(Json::array({i, j, k, s.assign(i, j, k)}));
      }
    }
  }
  doc["coverage"] = cover;
  doc["assignments"] = assign;
  return doc;
}

SolutionDocument solution_from_json(const Json& doc, const Instance& instance) {
  std::vector<Finding> findings;
  Reader rd(findings);
  SolutionDocument out;
  if (!rd.object(doc, "", {"status", "instance", "scenario"},
                 {"open_station_ids", "connectors", "connector_total", "revenue", "cost", "profit", "coverage", "assignments",
                  "solver", "audit"})) {
    throw DocumentError(findings);
  }
  if (const Json* sc = rd.field(doc, "scenario")) {
    try {
      out.scenario = scenario_from_json(*sc, instance);
    } catch (const DocumentError& e) {
      for (const auto& f : e.findings()) rd.error("/scenario" + f.path, f.message);
    }
  }
  const std::string status = rd.string(doc, "status", "");
  SolveStatus st = SolveStatus::Infeasible;
  if (status == "optimal") {
    st = SolveStatus::Optimal;
  } else if (status == "timed_out") {
    st = SolveStatus::TimedOut;
  } else if (status != "infeasible") {
    rd.error("/status", "expected optimal, infeasible or timed_out");
  }
  out.solution = Solution::empty_for(instance, st);
  Solution& s = out.solution;
  const std::size_t I = instance.num_demands(), J = instance.num_stations(), K = instance.num_vehicle_types();
  if (st == SolveStatus::Optimal) {
    for (const char* key : {"open_station_ids", "connectors", "revenue", "cost", "profit", "coverage", "assignments"}) {
      if (!doc.contains(key)) rd.error(std::string("/") + key, "missing required field");
    }
    if (const Json* ids = rd.array(doc, "open_station_ids", "")) {
      for (std::size_t n = 0; n < ids->size(); ++n) {
        const auto j = rd.integer_value((*ids)[n], "/open_station_ids/" + std::to_string(n), -1);
        if (j < 0 || static_cast<std::size_t>(j) >= J) {
          rd.error("/open_station_ids/" + std::to_string(n), "station id out of range");
        } else {
          s.open[static_cast<std::size_t>(j)] = 1;
        }
      }
    }
    if (const Json* u = rd.array(doc, "connectors", "")) {
      if (u->size() != J) {
        rd.error("/connectors", "expected " + std::to_string(J) + " entries");
      } else {
        for (std::size_t j = 0; j < J; ++j) s.connectors[j] = rd.integer_value((*u)[j], "/connectors/" + std::to_string(j));
      }
    }
    s.revenue = Money::from_centi(rd.integer(doc, "revenue", ""));
    s.cost = Money::from_centi(rd.integer(doc, "cost", ""));
    s.profit = Money::from_centi(rd.integer(doc, "profit", ""));
    if (const Json* cov = rd.array(doc, "coverage", "")) {
      for (std::size_t n = 0; n < cov->size(); ++n) {
        const std::string p = "/coverage/" + std::to_string(n);
        const Json& e = (*cov)[n];
        if (!e.is_array() || e.size() != 2) {
          rd.error(p, "expected [demand, station]");
          continue;
        }
        const auto i = rd.integer_value(e[0], p + "/0", -1), j = rd.integer_value(e[1], p + "/1", -1);
        if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= I || static_cast<std::size_t>(j) >= J) {
          rd.error(p, "index out of range");
          continue;
        }
        s.cover(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = 1;
      }
    }
    if (const Json* as = rd.array(doc, "assignments", "")) {
      for (std::size_t n = 0; n < as->size(); ++n) {
        const std::string p = "/assignments/" + std::to_string(n);
        const Json& e = (*as)[n];
        if (!e.is_array() || e.size() != 4) {
          rd.error(p, "expected [demand, station, type, count]");
          continue;
        }
        const auto i = rd.integer_value(e[0], p + "/0", -1), j = rd.integer_value(e[1], p + "/1", -1);
        const auto k = rd.integer_value(e[2], p + "/2", -1);
        if (i < 0 || j < 0 || k < 0 || static_cast<std::size_t>(i) >= I || static_cast<std::size_t>(j) >= J ||
            static_cast<std::size_t>(k) >= K) {
          rd.error(p, "index out of range");
          continue;
        }
        s.assign(static_cast<std::size_t>(i), static_cast<std::size_t>(j), static_cast<std::size_t>(k)) =
            rd.integer_value(e[3], p + "/3");
      }
    }
  }
  if (!findings.empty()) throw DocumentError(findings);
  return out;
}

Json audit_to_json(const AuditReport& r) {
  Json doc;
  doc["feasible"] = r.feasible;
  doc["money_matches"] = r.money_matches;
  doc["revenue"] = r.revenue.centi();
  doc["cost"] = r.cost.centi();
  doc["profit"] = r.profit.centi();
  Json v = Json::array();
  for (const auto& x : r.violations) v.push_back({{"family", to_string(x.family)}, {"where", x.where}, {"message", x.message}});
  doc["violations"] = v;
  return doc;
}

std::string report_to_csv(const SweepReport& report) {
  std::string out = "d_max,R,status,stations,connectors,revenue,cost,profit\n";
  for (const auto& r : report.rows) {
    out += scalar(Json(r.d_max_minutes)) + "," + std::to_string(r.redundancy) + "," + to_string(r.status) + ",";
    if (r.status == SolveStatus::Optimal) {
      std::string ids;
      for (int id : r.open_station_ids) ids += (ids.empty() ? "" : ";") + std::to_string(id);
      out += ids + "," + std::to_string(r.connectors) + "," + std::to_string(r.revenue.centi()) + "," +
             std::to_string(r.cost.centi()) + "," + std::to_string(r.profit.centi());
    } else {
      out += ",,,,";
    }
    out += "\n";
  }
  return out;
}

Json report_to_json(const SweepReport& report, bool include_timing) {
  Json doc;
  doc["instance"] = report.instance_name;
  doc["max_stations"] = report.max_stations;
  Json rows = Json::array();
  for (const auto& r : report.rows) {
    Json row;
    row["d_max"] = r.d_max_minutes;
    row["redundancy"] = r.redundancy;
    row["status"] = to_string(r.status);
    if (r.status == SolveStatus::Optimal) {
      row["open_station_ids"] = r.open_station_ids;
      row["connectors"] = r.connectors;
      row["revenue"] = r.revenue.centi();
      row["cost"] = r.cost.centi();
      row["profit"] = r.profit.centi();
    }
    if (include_timing) row["wall_seconds"] = r.wall_seconds;
    rows.push_back(row);
  }
  doc["rows"] = rows;
  return doc;
}

Json delta_to_json(const DeltaReport& delta) {
  Json doc;
  Json rows = Json::array();
  for (const auto& r : delta.rows) {
    Json row{{"d_max", r.d_max_minutes}, {"base_redundancy", r.base_redundancy}, {"variant_redundancy", r.variant_redundancy},
             {"excluded", r.excluded}};
    if (r.excluded) {
      row["flag"] = r.flag;
    } else {
      row["cost_percent"] = r.cost_percent;
      row["profit_percent"] = r.profit_percent;
    }
    rows.push_back(row);
  }
  doc["rows"] = rows;
  doc["included"] = delta.included;
  doc["average_cost_percent"] = delta.average_cost_percent ? Json(*delta.average_cost_percent) : Json();
  doc["average_profit_percent"] = delta.average_profit_percent ? Json(*delta.average_profit_percent) : Json();
  return doc;
}

}  // namespace evsite::io
