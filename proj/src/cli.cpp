#include "evsite/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "evsite/branch_bound.hpp"
#include "evsite/decomposition.hpp"
#include "evsite/io.hpp"
#include "evsite/scenario.hpp"
#include "evsite/server.hpp"

namespace evsite::cli {

namespace {

namespace fs = std::filesystem;
using io::Json;

// Data problems found after flag parsing.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ScenarioFlags {
  std::string instance;
  double d_max = 0.0;
  int redundancy = 1;
  int max_stations = 0;  // 0 means every station
  std::string big_m = "tight";
};

void add_instance(CLI::App* cmd, std::string& path) {
  cmd->add_option("-i,--instance", path, "Instance file")->required();
}

void add_scenario(CLI::App* cmd, ScenarioFlags& f) {
  add_instance(cmd, f.instance);
  cmd->add_option("--dmax", f.d_max, "Travel-time limit in minutes")->required()->check(CLI::NonNegativeNumber);
  cmd->add_option("--redundancy", f.redundancy, "Stations required within reach of each demand point")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--max-stations", f.max_stations, "Upper bound on open stations (default: all)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--big-m", f.big_m, "\"tight\" or a fixed value such as 1000");
}

BigM parse_big_m(const std::string& text) {
  if (text == "tight") return BigM::tight();
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size() && v > 0.0) return BigM::fixed(v);
  } catch (const std::exception&) {
  }
  throw DataError("--big-m: expected \"tight\" or a positive number, got " + text);
}

Instance load(const std::string& path) { return io::load_instance_file(path); }

Scenario make_scenario(const Instance& inst, const ScenarioFlags& f) {
  Scenario sc{f.d_max, f.redundancy, f.max_stations > 0 ? f.max_stations : static_cast<int>(inst.num_stations()),
              parse_big_m(f.big_m)};
  if (auto findings = validate_scenario(inst, sc); !findings.empty()) {
    throw DataError("invalid scenario: " + findings.front().path + ": " + findings.front().message);
  }
  return sc;
}

// Writes `text` to `path`, or to `out` when no path was given.
void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  const fs::path tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw DataError("cannot write " + path);
    f << text;
    if (!f) throw DataError("cannot write " + path);
  }
  fs::rename(tmp, path);
}

std::string format_minutes(double d) {
  std::ostringstream s;
  s << d;
  return s.str();
}

std::string id_list(const std::vector<int>& ids) {
  std::string s;
  for (int id : ids) s += (s.empty() ? "" : ",") + std::to_string(id);
  return s;
}

std::string status_word(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "INFEASIBLE";
    case SolveStatus::TimedOut: return "TIMED OUT";
  }
  return "?";
}

std::string summary_row(double d_max, int redundancy, const Solution& s) {
  std::string row = "d_max " + format_minutes(d_max) + "  R " + std::to_string(redundancy) + "  " + status_word(s.status);
  if (s.status != SolveStatus::Optimal) return row;
  row += "  stations " + id_list(s.open_station_ids()) + "  connectors " + std::to_string(s.connector_total()) +
         "  revenue " + format_rupiah_grouped(s.revenue) + "  cost " + format_rupiah_grouped(s.cost) + "  profit " +
         format_rupiah_grouped(s.profit);
  return row;
}

std::string station_table(const Instance& inst, const Solution& s) {
  std::ostringstream t;
  t << std::left << std::setw(9) << "station" << std::setw(14) << "name" << std::right << std::setw(11) << "connectors"
    << std::setw(12) << "load_min" << std::setw(12) << "capacity" << "\n";
  const std::size_t J = inst.num_stations(), K = inst.num_vehicle_types();
  for (std::size_t j = 0; j < J; ++j) {
    if (!s.open[j]) continue;
    double load = 0.0;
    for (std::size_t i = 0; i < inst.num_demands(); ++i) {
      for (std::size_t k = 0; k < K; ++k) load += static_cast<double>(s.assign(i, j, k)) * inst.vehicle_types[k].charge_minutes;
    }
    t << std::left << std::setw(9) << inst.stations[j].id << std::setw(14) << inst.stations[j].name << std::right
      << std::setw(11) << s.connectors[j] << std::setw(12) << load << std::setw(12)
      << static_cast<double>(s.connectors[j]) * inst.stations[j].connector_daily_minutes << "\n";
  }
  return t.str();
}

Json audit_summary(const AuditReport& a) {
  return Json{{"feasible", a.feasible}, {"money_matches", a.money_matches}, {"violations", a.violations.size()}};
}

// ---------------------------------------------------------------------------

struct SolveFlags {
  ScenarioFlags sc;
  std::string solver = "auto";
  std::string format = "table";
  std::string output;
  int threads = 0;
  double time_limit = 0.0;
};

int cmd_solve(const SolveFlags& f, std::ostream& out, std::ostream& err) {
  const Instance inst = load(f.sc.instance);
  const Scenario sc = make_scenario(inst, f.sc);

  auto enumerate = [&] {
    EnumerationOptions eo;
    eo.threads = f.threads;
    if (f.time_limit > 0) eo.time_limit_seconds = f.time_limit;
    return solve_by_enumeration(inst, sc, eo);
  };
  auto branch = [&] {
    SolveParams sp;
    if (f.time_limit > 0) sp.time_limit_seconds = f.time_limit;
    return solve_with_branch_bound(inst, sc, sp);
  };
  std::string solver = f.solver;
  if (solver == "auto") solver = inst.num_stations() <= 20 ? "enumeration" : "branch-bound";
  Solution sol;
  if (solver == "enumeration") {
    sol = enumerate();
  } else if (solver == "branch-bound") {
    sol = branch();
  } else {
    sol = enumerate();
    const Solution other = branch();
    const bool same = sol.status == other.status && (sol.status != SolveStatus::Optimal || sol.profit == other.profit);
    if (!same) {
      err << "solvers disagree: enumeration " << to_string(sol.status);
      if (sol.status == SolveStatus::Optimal) err << " profit " << sol.profit.centi();
      err << ", branch-bound " << to_string(other.status);
      if (other.status == SolveStatus::Optimal) err << " profit " << other.profit.centi();
      err << "\n";
      return kDisagree;
    }
  }

  std::string text;
  if (f.format == "json") {
    Json doc = io::solution_to_json(inst, sc, sol);
    doc["solver"] = solver;
    if (sol.status == SolveStatus::Optimal) doc["audit"] = audit_summary(audit_solution(inst, sc, sol));
    text = io::to_text(doc) + "\n";
  } else if (f.format == "geojson") {
    text = io::export_geojson(inst, &sol) + "\n";
  } else {
    text = inst.name + "\n";
    if (sol.status == SolveStatus::Optimal) text += station_table(inst, sol);
    text += summary_row(sc.d_max_minutes, sc.redundancy, sol) + "\n";
  }
  emit(f.output, text, out);
  return sol.status == SolveStatus::Optimal ? kOk : kInfeasible;
}

struct SweepFlags {
  std::string instance;
  std::vector<double> d_max;
  std::vector<int> redundancy{1};
  int max_stations = 0;
  std::string format = "table";
  std::string output;
  int threads = 0;
  bool timing = false;
};

std::string percent(std::optional<double> p) {
  if (!p) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.1f%%", round_tenth(*p));
  return buf;
}

std::string sweep_table(const SweepReport& rep) {
  std::ostringstream t;
  t << std::right << std::setw(6) << "d_max" << std::setw(4) << "R" << "  " << std::left << std::setw(11) << "status"
    << std::setw(24) << "stations" << std::right << std::setw(11) << "connectors" << std::setw(17) << "revenue"
    << std::setw(15) << "cost" << std::setw(17) << "profit" << "\n";
  for (const auto& r : rep.rows) {
    t << std::right << std::setw(6) << format_minutes(r.d_max_minutes) << std::setw(4) << r.redundancy << "  " << std::left
      << std::setw(11) << status_word(r.status);
    if (r.status == SolveStatus::Optimal) {
      t << std::setw(24) << id_list(r.open_station_ids) << std::right << std::setw(11) << r.connectors << std::setw(17)
        << format_rupiah_grouped(r.revenue) << std::setw(15) << format_rupiah_grouped(r.cost) << std::setw(17)
        << format_rupiah_grouped(r.profit);
    }
    t << "\n";
  }

  // Cost premium of each redundancy level over the lowest one.
  std::vector<int> levels;
  for (const auto& r : rep.rows) {
    if (levels.empty() || levels.back() != r.redundancy) levels.push_back(r.redundancy);
  }
  if (levels.size() > 1) {
    const SweepReport base = filter_redundancy(rep, levels.front());
    double pooled = 0.0;
    int pooled_n = 0;
    t << "\n";
    for (std::size_t l = 1; l < levels.size(); ++l) {
      const SweepReport variant = filter_redundancy(rep, levels[l]);
      const DeltaReport d = compare(base, variant);
      t << "R " << levels[l] << " vs R " << levels.front() << ": cost " << percent(d.average_cost_percent) << ", profit "
        << percent(d.average_profit_percent) << " on average over " << d.included << " rows";
      int excluded = 0;
      for (const auto& row : d.rows) {
        if (row.excluded) {
          ++excluded;
        } else {
          pooled += row.cost_percent;
          ++pooled_n;
        }
      }
      if (excluded) t << " (" << excluded << " excluded)";
      t << "\n";
    }
    if (levels.size() > 2) {
      t << "all levels vs R " << levels.front() << ": cost "
        << percent(pooled_n ? std::optional<double>(pooled / pooled_n) : std::nullopt) << " on average over " << pooled_n
        << " rows\n";
    }
  }
  std::string text = t.str(), trimmed;
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);) {
    line.erase(line.find_last_not_of(' ') + 1);
    trimmed += line + "\n";
  }
  return trimmed;
}

int cmd_sweep(const SweepFlags& f, std::ostream& out) {
  const Instance inst = load(f.instance);
  SweepOptions so;
  so.threads = f.threads;
  const int n = f.max_stations > 0 ? f.max_stations : static_cast<int>(inst.num_stations());
  SweepReport rep;
  try {
    rep = sweep(inst, f.d_max, f.redundancy, n, so);
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  std::string text;
  if (f.format == "csv") {
    text = io::report_to_csv(rep);
  } else if (f.format == "json") {
    text = io::to_text(io::report_to_json(rep, f.timing)) + "\n";
  } else {
    text = sweep_table(rep);
  }
  emit(f.output, text, out);
  return kOk;
}

struct GenerateFlags {
  io::GeneratorConfig cfg;
  std::string output;
};

struct CalibrateFlags {
  io::CalibrationOptions opts;
  std::string output;
  std::string report;
  std::string format = "table";
};

int cmd_calibrate(const CalibrateFlags& f, std::ostream& out) {
  const io::CalibrationResult r = io::calibrate_reference(f.opts);
  if (!f.output.empty()) io::save_instance_file(r.instance, f.output);
  const std::string report = io::to_text(io::calibration_to_json(r.report)) + "\n";
  if (!f.report.empty()) emit(f.report, report, out);
  if (f.format == "json") {
    out << report;
  } else {
    out << "seed " << r.report.seed << " (" << r.report.seeds_tried << " tried), congestion "
        << r.report.congestion_min_per_km << " min/km, energy";
    for (double e : r.report.energy_kwh) out << " " << e;
    out << " kWh\n";
    for (const auto& t : r.report.targets) {
      out << (t.met ? "  met    " : "  UNMET  ") << (t.hard ? "" : "(soft) ") << t.name << ": " << t.detail << "\n";
    }
    out << (r.report.success ? "calibration succeeded\n" : "calibration incomplete\n");
  }
  return r.report.success ? kOk : kInfeasible;
}

struct ExportMpsFlags {
  ScenarioFlags sc;
  std::string output;
};

int cmd_export_mps(const ExportMpsFlags& f, std::ostream& out) {
  const Instance inst = load(f.sc.instance);
  const Scenario sc = make_scenario(inst, f.sc);
  const BuiltModel m = build_mip(inst, sc);
  std::string name;
  for (char c : inst.name) name += c == ' ' ? '_' : c;
  emit(f.output, io::export_mps(m.problem, name.empty() ? "EVSITE" : name), out);
  return kOk;
}

struct GeojsonFlags {
  std::string instance;
  std::string solution;
  std::string output;
};

io::SolutionDocument load_solution(const std::string& path, const Instance& inst) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return io::solution_from_json(io::parse_text(ss.str()), inst);
}

int cmd_export_geojson(const GeojsonFlags& f, std::ostream& out) {
  const Instance inst = load(f.instance);
  std::string text;
  if (f.solution.empty()) {
    text = io::export_geojson(inst);
  } else {
    const io::SolutionDocument doc = load_solution(f.solution, inst);
    text = io::export_geojson(inst, &doc.solution);
  }
  emit(f.output, text + "\n", out);
  return kOk;
}

struct AuditFlags {
  std::string instance;
  std::string solution;
  std::string format = "table";
};

int cmd_audit(const AuditFlags& f, std::ostream& out) {
  const Instance inst = load(f.instance);
  const io::SolutionDocument doc = load_solution(f.solution, inst);
  if (doc.solution.status != SolveStatus::Optimal) throw DataError("solution file has no solution to audit (status " + std::string(to_string(doc.solution.status)) + ")");
  const AuditReport a = audit_solution(inst, doc.scenario, doc.solution);
  if (f.format == "json") {
    out << io::to_text(io::audit_to_json(a)) << "\n";
  } else {
    out << (a.feasible ? "feasible" : "INFEASIBLE") << ", " << a.violations.size() << " violations\n";
    for (const auto& v : a.violations) out << "  " << to_string(v.family) << " " << v.where << ": " << v.message << "\n";
    out << "revenue " << format_rupiah_grouped(a.revenue) << "  cost " << format_rupiah_grouped(a.cost) << "  profit "
        << format_rupiah_grouped(a.profit) << (a.money_matches ? "" : "  (differs from the reported money)") << "\n";
  }
  return a.feasible && a.money_matches ? kOk : kInfeasible;
}

struct ServeFlags {
  std::vector<std::string> instances;
  std::string instance_dir;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string static_dir;
  std::string upload_dir;
  double timeout = 30.0;
  int threads = 0;
};

int cmd_serve(const ServeFlags& f, std::ostream& out, std::ostream& err) {
  server::InstanceStore store;
  server::ServerOptions opts;
  opts.solve_timeout_seconds = f.timeout;
  opts.threads = f.threads;
  opts.static_dir = f.static_dir;
  opts.upload_dir = f.upload_dir;
  for (const auto& p : f.instances) {
    const std::string id = fs::path(p).stem().string();
    if (!server::InstanceStore::valid_id(id)) throw DataError("instance file name is not a usable id: " + p);
    store.add(id, load(p));
    if (opts.default_instance.empty()) opts.default_instance = id;
  }
  if (!f.instance_dir.empty()) store.load_directory(f.instance_dir);
  if (store.ids().empty()) throw DataError("no instances to serve; pass --instance or --instance-dir");
  const server::Api api(store, opts);
  server::HttpServer http(api);
  const int port = http.bind(f.host, f.port);
  if (port < 0) {
    err << "cannot bind " << f.host << ":" << f.port << "\n";
    return kUsage;
  }
  out << "serving " << store.ids().size() << " instance(s) on http://" << f.host << ":" << port << "\n" << std::flush;
  return http.listen() ? kOk : kUsage;
}

int default_threads() {
  if (const char* env = std::getenv("EVSITE_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 0) return n;
    } catch (const std::exception&) {
    }
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Charging-station siting: exact solves, sweeps, instance generation and exports.", "evsite"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "evsite 1.0.0");

  const int threads = default_threads();
  auto add_threads = [](CLI::App* cmd, int& value) {
    cmd->add_option("--threads", value, "Worker threads, 0 for all cores (default: EVSITE_THREADS or 0)")
        ->check(CLI::NonNegativeNumber);
  };

  SolveFlags solve;
  solve.threads = threads;
  auto* c_solve = app.add_subcommand("solve", "Solve one scenario");
  add_scenario(c_solve, solve.sc);
  c_solve->add_option("--solver", solve.solver, "auto, enumeration, branch-bound or both")
      ->check(CLI::IsMember({"auto", "enumeration", "branch-bound", "both"}));
  c_solve->add_option("--format", solve.format, "table, json or geojson")->check(CLI::IsMember({"table", "json", "geojson"}));
  c_solve->add_option("-o,--output", solve.output, "Write to a file instead of stdout");
  c_solve->add_option("--time-limit", solve.time_limit, "Seconds before giving up (default: none)")->check(CLI::PositiveNumber);
  add_threads(c_solve, solve.threads);

  SweepFlags sw;
  sw.threads = threads;
  auto* c_sweep = app.add_subcommand("sweep", "Solve a grid of d_max and redundancy values");
  add_instance(c_sweep, sw.instance);
  c_sweep->add_option("--dmax", sw.d_max, "Comma-separated d_max values")->required()->delimiter(',')->check(CLI::NonNegativeNumber);
  c_sweep->add_option("--redundancy", sw.redundancy, "Comma-separated redundancy levels")->delimiter(',')->check(CLI::PositiveNumber);
  c_sweep->add_option("--max-stations", sw.max_stations, "Upper bound on open stations (default: all)")->check(CLI::PositiveNumber);
  c_sweep->add_option("--format", sw.format, "table, csv or json")->check(CLI::IsMember({"table", "csv", "json"}));
  c_sweep->add_flag("--timing", sw.timing, "Include wall times in json output");
  c_sweep->add_option("-o,--output", sw.output, "Write to a file instead of stdout");
  add_threads(c_sweep, sw.threads);

  GenerateFlags gen;
  auto* c_gen = app.add_subcommand("generate", "Write a synthetic instance");
  c_gen->add_option("--seed", gen.cfg.seed, "Random seed");
  c_gen->add_option("--demands", gen.cfg.n_demands, "Demand points")->check(CLI::PositiveNumber);
  c_gen->add_option("--stations", gen.cfg.n_stations, "Candidate stations")->check(CLI::Range(1, 63));
  c_gen->add_option("--extent-km", gen.cfg.extent_km, "Side of the square study area")->check(CLI::PositiveNumber);
  c_gen->add_option("--imbalance", gen.cfg.imbalance_exponent, "Demand concentration exponent, 0 for uniform")
      ->check(CLI::NonNegativeNumber);
  c_gen->add_option("--congestion", gen.cfg.congestion_min_per_km, "Minutes per km")->check(CLI::PositiveNumber);
  c_gen->add_option("--name", gen.cfg.name, "Instance name");
  c_gen->add_option("-o,--output", gen.output, "Write to a file instead of stdout");

  CalibrateFlags cal;
  cal.opts.threads = threads;
  auto* c_cal = app.add_subcommand("calibrate", "Search seeds for the reference instance");
  c_cal->add_option("--first-seed", cal.opts.first_seed, "First seed tried");
  c_cal->add_option("--last-seed", cal.opts.last_seed, "Last seed tried");
  c_cal->add_option("--budget", cal.opts.budget_seconds, "Search budget in seconds")->check(CLI::PositiveNumber);
  c_cal->add_option("-o,--output", cal.output, "Instance file to write");
  c_cal->add_option("--report", cal.report, "Calibration report file to write");
  c_cal->add_option("--format", cal.format, "table or json")->check(CLI::IsMember({"table", "json"}));
  add_threads(c_cal, cal.opts.threads);

  ExportMpsFlags mps;
  auto* c_mps = app.add_subcommand("export-mps", "Write the scenario's MIP in fixed MPS format");
  add_scenario(c_mps, mps.sc);
  c_mps->add_option("-o,--output", mps.output, "Write to a file instead of stdout");

  GeojsonFlags geo;
  auto* c_geo = app.add_subcommand("export-geojson", "Write demand points and stations as GeoJSON");
  add_instance(c_geo, geo.instance);
  c_geo->add_option("--solution", geo.solution, "Solution file (from solve --format json) to mark selected stations");
  c_geo->add_option("-o,--output", geo.output, "Write to a file instead of stdout");

  AuditFlags aud;
  auto* c_aud = app.add_subcommand("audit", "Re-check a saved solution against every constraint");
  add_instance(c_aud, aud.instance);
  c_aud->add_option("--solution", aud.solution, "Solution file (from solve --format json)")->required();
  c_aud->add_option("--format", aud.format, "table or json")->check(CLI::IsMember({"table", "json"}));

  ServeFlags srv;
  srv.threads = threads;
  auto* c_srv = app.add_subcommand("serve", "Start the HTTP API");
  c_srv->add_option("-i,--instance", srv.instances, "Instance file to serve (repeatable)");
  c_srv->add_option("--instance-dir", srv.instance_dir, "Directory of instance files");
  c_srv->add_option("--host", srv.host, "Listen address");
  c_srv->add_option("--port", srv.port, "Listen port")->check(CLI::Range(0, 65535));
  c_srv->add_option("--static", srv.static_dir, "Directory served at /");
  c_srv->add_option("--upload-dir", srv.upload_dir, "Where uploaded instances are saved");
  c_srv->add_option("--timeout", srv.timeout, "Per-request solve timeout in seconds")->check(CLI::PositiveNumber);
  add_threads(c_srv, srv.threads);

  std::vector<std::string> argv_store{"evsite"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*c_solve) return cmd_solve(solve, out, err);
    if (*c_sweep) return cmd_sweep(sw, out);
    if (*c_gen) {
      emit(gen.output, io::save_instance(io::generate_instance(gen.cfg)), out);
      return kOk;
    }
    if (*c_cal) return cmd_calibrate(cal, out);
    if (*c_mps) return cmd_export_mps(mps, out);
    if (*c_geo) return cmd_export_geojson(geo, out);
    if (*c_aud) return cmd_audit(aud, out);
    if (*c_srv) return cmd_serve(srv, out, err);
  } catch (const io::DocumentError& e) {
    err << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    err << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    err << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace evsite::cli
