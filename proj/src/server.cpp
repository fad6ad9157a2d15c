#include "evsite/server.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <set>

#include "evsite/branch_bound.hpp"
#include "evsite/decomposition.hpp"
#include "evsite/scenario.hpp"
#include "httplib.h"

namespace evsite::server {

namespace {

using io::Json;

struct RequestError {
  int status;
  std::string code;
  std::string path;
  std::string message;
};

[[noreturn]] void bad(const std::string& path, const std::string& message) {
  throw RequestError{400, "invalid_request", path, message};
}

// Strict view over a request object.
class Fields {
 public:
  Fields(const Json& doc, std::set<std::string> allowed) : doc_(doc) {
    if (!doc.is_object()) bad("", "request body must be an object");
    for (auto it = doc.begin(); it != doc.end(); ++it) {
      if (!allowed.count(it.key())) bad("/" + it.key(), "unknown field");
    }
  }

  bool has(const char* key) const { return doc_.contains(key) && !doc_.at(key).is_null(); }

  double number(const char* key) const {
    const Json& v = need(key);
    if (!v.is_number()) bad(path(key), "expected a number");
    return v.get<double>();
  }
  int integer(const char* key) const { return integer_value(need(key), path(key)); }
  std::string string(const char* key) const {
    const Json& v = need(key);
    if (!v.is_string()) bad(path(key), "expected a string");
    return v.get<std::string>();
  }
  std::vector<double> numbers(const char* key) const {
    const Json& v = array(key);
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) bad(path(key) + "/" + std::to_string(i), "expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }
  std::vector<int> integers(const char* key) const {
    const Json& v = array(key);
    std::vector<int> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(integer_value(v[i], path(key) + "/" + std::to_string(i)));
    return out;
  }

 private:
  static std::string path(const char* key) { return std::string("/") + key; }
  const Json& need(const char* key) const {
    if (!has(key)) bad(path(key), "missing required field");
    return doc_.at(key);
  }
  const Json& array(const char* key) const {
    const Json& v = need(key);
    if (!v.is_array()) bad(path(key), "expected an array");
    return v;
  }
  static int integer_value(const Json& v, const std::string& p) {
    if (v.is_number_integer() && v.get<std::int64_t>() >= -1000000 && v.get<std::int64_t>() <= 1000000) {
      return static_cast<int>(v.get<std::int64_t>());
    }
    if (v.is_number_float() && v.get<double>() == std::trunc(v.get<double>()) && std::abs(v.get<double>()) <= 1e6) {
      return static_cast<int>(v.get<double>());
    }
    bad(p, "expected an integer");
  }

  const Json& doc_;
};

Response json_response(int status, const Json& doc) { return {status, io::to_text(doc) + "\n", "application/json"}; }

Json parse_body(const std::string& body) {
  try {
    return io::parse_text(body);
  } catch (const io::DocumentError& e) {
    const auto& f = e.findings().front();
    throw RequestError{400, "malformed_payload", f.path, f.message};
  }
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t i = 0;
  const std::string p = path.substr(0, path.find('?'));
  while (i < p.size()) {
    while (i < p.size() && p[i] == '/') ++i;
    std::size_t j = p.find('/', i);
    if (j == std::string::npos) j = p.size();
    if (j > i) parts.push_back(p.substr(i, j - i));
    i = j;
  }
  return parts;
}

double timeout_from(const Fields& f, const ServerOptions& opts) {
  if (!f.has("timeout_seconds")) return opts.solve_timeout_seconds;
  const double t = f.number("timeout_seconds");
  if (!(t > 0.0)) bad("/timeout_seconds", "must be positive");
  return std::min(t, opts.solve_timeout_seconds);
}

Response timeout_response(double seconds) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "solve did not finish within %g s", seconds);
  return error_response(408, "timeout", "", buf);
}

}  // namespace

// ---------------------------------------------------------------------------

bool InstanceStore::valid_id(const std::string& id) {
  if (id.empty() || id.size() > 64) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
  });
}

bool InstanceStore::add(const std::string& id, Instance instance) {
  if (!valid_id(id)) throw std::invalid_argument("invalid instance id: " + id);
  std::unique_lock lock(mu_);
  return items_.emplace(id, std::make_shared<const Instance>(std::move(instance))).second;
}

std::shared_ptr<const Instance> InstanceStore::get(const std::string& id) const {
  std::shared_lock lock(mu_);
  auto it = items_.find(id);
  return it == items_.end() ? nullptr : it->second;
}

std::vector<std::string> InstanceStore::ids() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, _] : items_) out.push_back(id);
  return out;
}

int InstanceStore::load_directory(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  int n = 0;
  for (const auto& f : files) {
    const std::string id = f.stem().string();
    if (!valid_id(id)) continue;
    if (add(id, io::load_instance_file(f))) ++n;
  }
  return n;
}

Response error_response(int status, const std::string& code, const std::string& path, const std::string& message) {
  return json_response(status, Json{{"error", code}, {"path", path}, {"message", message}});
}

Response Api::handle(const std::string& method, const std::string& path, const std::string& body) const {
  try {
    const auto parts = split_path(path);
    if (parts.size() < 2 || parts[0] != "api") return error_response(404, "not_found", "", "no such endpoint: " + path);
    const std::string& head = parts[1];
    auto wrong_method = [&] { return error_response(405, "method_not_allowed", "", method + " is not allowed on " + path); };
    if (head == "instances") {
      if (parts.size() == 2) {
        if (method == "GET") return list_instances();
        if (method == "POST") return upload(body);
        return wrong_method();
      }
      if (parts.size() == 3 || (parts.size() == 4 && parts[3] == "geojson")) {
        if (method != "GET") return wrong_method();
        return get_instance(parts[2], parts.size() == 4);
      }
    } else if (parts.size() == 2 && head == "solve") {
      if (method != "POST") return wrong_method();
      return solve(parse_body(body));
    } else if (parts.size() == 2 && head == "sweep") {
      if (method != "POST") return wrong_method();
      return sweep(parse_body(body));
    }
    return error_response(404, "not_found", "", "no such endpoint: " + path);
  } catch (const RequestError& e) {
    return error_response(e.status, e.code, e.path, e.message);
  } catch (const io::DocumentError& e) {
    const auto& f = e.findings().front();
    return error_response(400, "invalid_document", f.path, f.message);
  } catch (const std::invalid_argument& e) {
    return error_response(400, "invalid_request", "", e.what());
  } catch (const std::exception& e) {
    return error_response(500, "internal", "", e.what());
  }
}

Response Api::list_instances() const {
  Json list = Json::array();
  for (const auto& id : store_.ids()) {
    const auto inst = store_.get(id);
    if (!inst) continue;
    std::int64_t vehicles = 0;
    for (const auto& d : inst->demands) {
      for (auto w : d.demand) vehicles += w;
    }
    list.push_back(Json{{"id", id},
                        {"name", inst->name},
                        {"demand_points", inst->num_demands()},
                        {"stations", inst->num_stations()},
                        {"vehicle_types", inst->num_vehicle_types()},
                        {"vehicles", vehicles}});
  }
  return json_response(200, Json{{"instances", list}});
}

Response Api::get_instance(const std::string& id, bool as_geojson) const {
  const auto inst = store_.get(id);
  if (!inst) return error_response(404, "not_found", "/instance", "unknown instance " + id);
  if (as_geojson) return {200, io::export_geojson(*inst) + "\n", "application/geo+json"};
  return json_response(200, io::instance_to_json(*inst));
}

// Resolves the request's instance id, defaulting to the configured one.
static std::pair<std::string, std::shared_ptr<const Instance>> pick(const InstanceStore& store, const ServerOptions& opts,
                                                                    const Fields& f) {
  std::string id;
  if (f.has("instance")) {
    id = f.string("instance");
  } else if (!opts.default_instance.empty()) {
    id = opts.default_instance;
  } else {
    const auto ids = store.ids();
    if (ids.empty()) throw RequestError{404, "not_found", "/instance", "no instances loaded"};
    id = ids.front();
  }
  auto inst = store.get(id);
  if (!inst) throw RequestError{404, "not_found", "/instance", "unknown instance " + id};
  return {id, inst};
}

Response Api::solve(const Json& request) const {
  const Fields f(request, {"instance", "d_max", "redundancy", "max_stations", "forced_open", "solver", "timeout_seconds"});
  const auto [id, base] = pick(store_, options_, f);
  Instance inst = *base;

  Scenario sc;
  sc.d_max_minutes = f.number("d_max");
  sc.redundancy = f.has("redundancy") ? f.integer("redundancy") : 1;
  sc.max_stations = f.has("max_stations") ? f.integer("max_stations") : static_cast<int>(inst.num_stations());
  if (f.has("forced_open")) {
    const auto ids = f.integers("forced_open");
    std::set<int> wanted(ids.begin(), ids.end());
    for (std::size_t j = 0; j < inst.num_stations(); ++j) {
      if (inst.stations[j].forced_open && !wanted.count(inst.stations[j].id)) {
        bad("/forced_open", "station " + std::to_string(inst.stations[j].id) + " is forced open by the instance and cannot be released");
      }
    }
    for (int want : wanted) {
      auto it = std::find_if(inst.stations.begin(), inst.stations.end(), [&](const CandidateStation& s) { return s.id == want; });
      if (it == inst.stations.end()) bad("/forced_open", "unknown station id " + std::to_string(want));
      it->forced_open = true;
    }
  }
  if (auto findings = validate_scenario(inst, sc); !findings.empty()) bad(findings.front().path, findings.front().message);

  const std::string solver = f.has("solver") ? f.string("solver") : "enumeration";
  const double timeout = timeout_from(f, options_);
  Solution sol;
  if (solver == "enumeration") {
    EnumerationOptions eo;
    eo.threads = options_.threads;
    eo.time_limit_seconds = timeout;
    sol = solve_by_enumeration(inst, sc, eo);
  } else if (solver == "branch-bound") {
    SolveParams sp;
    sp.time_limit_seconds = timeout;
    sol = solve_with_branch_bound(inst, sc, sp);
  } else {
    bad("/solver", "expected \"enumeration\" or \"branch-bound\"");
  }
  if (sol.status == SolveStatus::TimedOut) return timeout_response(timeout);

  Json doc = io::solution_to_json(inst, sc, sol);
  doc["instance"] = id;
  doc["solver"] = solver;
  if (sol.status == SolveStatus::Optimal) {
    const AuditReport audit = audit_solution(inst, sc, sol);
    if (!audit.feasible || !audit.money_matches) {
      return error_response(500, "audit_failed", "", "solver output failed the independent audit");
    }
    doc["audit"] = Json{{"feasible", audit.feasible},
                        {"money_matches", audit.money_matches},
                        {"violations", audit.violations.size()}};
  }
  return json_response(200, doc);
}

Response Api::sweep(const Json& request) const {
  const Fields f(request, {"instance", "d_max", "redundancy", "max_stations", "timeout_seconds"});
  const auto [id, inst] = pick(store_, options_, f);
  const std::vector<double> grid = f.numbers("d_max");
  const std::vector<int> levels = f.has("redundancy") ? f.integers("redundancy") : std::vector<int>{1};
  if (grid.empty()) bad("/d_max", "needs at least one value");
  if (levels.empty()) bad("/redundancy", "needs at least one value");
  const int max_stations = f.has("max_stations") ? f.integer("max_stations") : static_cast<int>(inst->num_stations());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (auto fs = validate_scenario(*inst, {grid[i], levels.front(), max_stations, BigM::tight()}); !fs.empty()) {
      bad("/d_max/" + std::to_string(i), fs.front().message);
    }
  }
  for (std::size_t r = 0; r < levels.size(); ++r) {
    if (auto fs = validate_scenario(*inst, {grid.front(), levels[r], max_stations, BigM::tight()}); !fs.empty()) {
      bad("/redundancy/" + std::to_string(r), fs.front().message);
    }
  }
  SweepOptions so;
  so.threads = options_.threads;
  so.time_limit_seconds = timeout_from(f, options_);
  const SweepReport rep = evsite::sweep(*inst, grid, levels, max_stations, so);
  for (const auto& row : rep.rows) {
    if (row.status == SolveStatus::TimedOut) return timeout_response(so.time_limit_seconds);
  }
  Json doc = io::report_to_json(rep, false);
  doc["instance"] = id;
  return json_response(200, doc);
}

Response Api::upload(const std::string& body) const {
  const Json doc = parse_body(body);
  Instance inst = io::instance_from_json(doc);
  const std::string id = inst.name;
  if (!InstanceStore::valid_id(id)) bad("/meta/name", "instance name must match [A-Za-z0-9._-]{1,64} to be used as its id");
  if (!store_.add(id, inst)) return error_response(409, "conflict", "/meta/name", "instance " + id + " already exists");
  if (!options_.upload_dir.empty()) io::save_instance_file(inst, options_.upload_dir / (id + ".json"));
  return json_response(201, Json{{"id", id}, {"demand_points", inst.num_demands()}, {"stations", inst.num_stations()}});
}

// ---------------------------------------------------------------------------

struct HttpServer::Impl {
  const Api& api;
  httplib::Server http;
  explicit Impl(const Api& a) : api(a) {}
};

HttpServer::HttpServer(const Api& api) : impl_(std::make_unique<Impl>(api)) {
  auto route = [this](const httplib::Request& req, httplib::Response& res) {
    const Response r = impl_->api.handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  impl_->http.Get(R"(/api/.*)", route);
  impl_->http.Post(R"(/api/.*)", route);
  impl_->http.Put(R"(/api/.*)", route);
  impl_->http.Delete(R"(/api/.*)", route);
  const auto& dir = api.options().static_dir;
  if (!dir.empty()) impl_->http.set_mount_point("/", dir.string());
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->http.bind_to_any_port(host);
  return impl_->http.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen() { return impl_->http.listen_after_bind(); }

void HttpServer::stop() {
  if (impl_) impl_->http.stop();
}

bool serve(const Api& api, const std::string& host, int port) {
  HttpServer server(api);
  if (server.bind(host, port) < 0) return false;
  return server.listen();
}

}  // namespace evsite::server
