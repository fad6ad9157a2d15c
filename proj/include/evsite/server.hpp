#pragma once

// HTTP API over an in-memory instance store. Api::handle does the routing
// and is usable without a socket; serve() binds it to cpp-httplib.

#include <filesystem>
#include <map>
#include <memory>
#include <shared_mutex>
#include <string>
#include <vector>

#include "evsite/io.hpp"

namespace evsite::server {

// Read-mostly map from instance id to document; uploads take the write lock.
class InstanceStore {
 public:
  // Ids must match [A-Za-z0-9._-]{1,64}. Returns false when the id exists.
  bool add(const std::string& id, Instance instance);
  std::shared_ptr<const Instance> get(const std::string& id) const;
  std::vector<std::string> ids() const;

  // Loads every *.json in `dir` under its file stem. Returns the number
  // loaded; files that fail to parse throw DocumentError.
  int load_directory(const std::filesystem::path& dir);

  static bool valid_id(const std::string& id);

 private:
  mutable std::shared_mutex mu_;
  std::map<std::string, std::shared_ptr<const Instance>> items_;
};

struct ServerOptions {
  double solve_timeout_seconds = 30.0;
  int threads = 1;
  // Instance used when a request names none; empty picks the first id.
  std::string default_instance;
  // Uploaded instances are also written here when set.
  std::filesystem::path upload_dir;
  // Built UI bundle served at "/" when set.
  std::filesystem::path static_dir;
};

struct Response {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

class Api {
 public:
  Api(InstanceStore& store, ServerOptions options) : store_(store), options_(std::move(options)) {}

  Response handle(const std::string& method, const std::string& path, const std::string& body) const;

  const ServerOptions& options() const { return options_; }

 private:
  Response list_instances() const;
  Response get_instance(const std::string& id, bool as_geojson) const;
  Response solve(const io::Json& request) const;
  Response sweep(const io::Json& request) const;
  Response upload(const std::string& body) const;

  InstanceStore& store_;
  ServerOptions options_;
};

// {"error": code, "path": JSON pointer, "message": text}.
Response error_response(int status, const std::string& code, const std::string& path, const std::string& message);

// Socket front end. Static files come from the Api's static_dir.
class HttpServer {
 public:
  explicit HttpServer(const Api& api);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Port 0 picks a free port. Returns the bound port, or -1.
  int bind(const std::string& host, int port);
  // Blocks until stop() is called from another thread.
  bool listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// bind + listen. Returns false if the socket cannot be bound.
bool serve(const Api& api, const std::string& host, int port);

}  // namespace evsite::server
