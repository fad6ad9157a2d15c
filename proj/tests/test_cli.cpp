#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "doctest.h"
#include "evsite/cli.hpp"
#include "evsite/io.hpp"
#include "fixtures.hpp"

using namespace evsite;
namespace fs = std::filesystem;

namespace {

const std::string kReference = (fs::path(EVSITE_SOURCE_DIR) / "data" / "surabaya-synthetic-v1.json").string();

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::temp_directory_path() / ("evsite-cli-" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("solve on the reference instance") {
  SUBCASE("table ends with the profit") {
    const Run r = run({"solve", "-i", kReference, "--dmax", "30", "--redundancy", "1"});
    CHECK(r.code == cli::kOk);
    const auto ls = lines(r.out);
    REQUIRE_FALSE(ls.empty());
    CHECK(std::regex_search(ls.back(), std::regex("profit Rp 19,013,30[0-9]$")));
    CHECK(ls.back().find("connectors 33") != std::string::npos);
    CHECK(ls.back().find("cost Rp 5,654,492") != std::string::npos);
  }
  SUBCASE("infeasible threshold") {
    const Run r = run({"solve", "-i", kReference, "--dmax", "20"});
    CHECK(r.code == cli::kInfeasible);
    CHECK(r.out.find("INFEASIBLE") != std::string::npos);
  }
  SUBCASE("json output parses and audits") {
    Scratch tmp;
    const Run r = run({"solve", "-i", kReference, "--dmax", "35", "--format", "json", "-o", tmp / "sol.json"});
    REQUIRE(r.code == cli::kOk);
    CHECK(r.out.empty());
    const Instance inst = io::load_instance_file(kReference);
    const io::Json doc = io::parse_text(slurp(tmp / "sol.json"));
    CHECK(doc["audit"]["feasible"] == true);
    CHECK(doc["open_station_ids"].size() == 4);
    const auto back = io::solution_from_json(doc, inst);
    CHECK(back.solution.connector_total() == 33);

    CHECK(run({"audit", "-i", kReference, "--solution", tmp / "sol.json"}).code == cli::kOk);

    io::Json broken = doc;
    broken["connectors"][static_cast<std::size_t>(doc["open_station_ids"][0].get<int>())] = 0;
    std::ofstream(tmp / "broken.json") << io::to_text(broken);
    const Run a = run({"audit", "-i", kReference, "--solution", tmp / "broken.json"});
    CHECK(a.code == cli::kInfeasible);
    CHECK(a.out.find("INFEASIBLE") != std::string::npos);
    CHECK(a.out.find("charging_capacity") != std::string::npos);
  }
  SUBCASE("geojson marks the open stations") {
    const Run r = run({"solve", "-i", kReference, "--dmax", "35", "--format", "geojson"});
    REQUIRE(r.code == cli::kOk);
    const io::Json g = io::parse_text(r.out);
    int selected = 0;
    for (const auto& f : g["features"]) selected += f["properties"]["role"] == "selected";
    CHECK(selected == 4);
  }
}

TEST_CASE("sweep output") {
  const Run r = run({"sweep", "-i", kReference, "--dmax", "25,30,35,40,45", "--redundancy", "1,2,3", "--format", "csv"});
  REQUIRE(r.code == cli::kOk);
  const auto ls = lines(r.out);
  REQUIRE(ls.size() == 16);
  CHECK(ls[0] == "d_max,R,status,stations,connectors,revenue,cost,profit");
  CHECK(ls[1].rfind("25,1,optimal,", 0) == 0);
  CHECK(ls[6].rfind("25,2,infeasible", 0) == 0);

  const Run t = run({"sweep", "-i", kReference, "--dmax", "30,35", "--redundancy", "1,2"});
  CHECK(t.code == cli::kOk);
  CHECK(t.out.find("R 2 vs R 1: cost") != std::string::npos);
  CHECK(t.out.find("Rp 19,416,596") != std::string::npos);

  const Run j = run({"sweep", "-i", kReference, "--dmax", "30", "--format", "json"});
  CHECK(io::parse_text(j.out)["rows"].size() == 1);
}

TEST_CASE("solver cross-check") {
  Scratch tmp;
  io::save_instance_file(testing::two_station_toy(), tmp / "toy.json");
  const Run both = run({"solve", "-i", tmp / "toy.json", "--dmax", "30", "--solver", "both"});
  CHECK(both.code == cli::kOk);
  const Run bb = run({"solve", "-i", tmp / "toy.json", "--dmax", "30", "--solver", "branch-bound", "--format", "json"});
  const Run en = run({"solve", "-i", tmp / "toy.json", "--dmax", "30", "--solver", "enumeration", "--format", "json"});
  CHECK(io::parse_text(bb.out)["profit"] == io::parse_text(en.out)["profit"]);
  CHECK(run({"solve", "-i", tmp / "toy.json", "--dmax", "4", "--solver", "both"}).code == cli::kInfeasible);
}

TEST_CASE("usage errors") {
  Scratch tmp;
  auto usage = [](const Run& r) { return r.code == cli::kUsage && !r.err.empty(); };
  CHECK(usage(run({})));
  CHECK(usage(run({"bogus"})));
  CHECK(usage(run({"solve", "-i", kReference})));
  const Run flag = run({"solve", "-i", kReference, "--dmax", "30", "--colour", "red"});
  CHECK(usage(flag));
  CHECK(flag.err.find("--colour") != std::string::npos);
  CHECK(usage(run({"solve", "-i", kReference, "--dmax", "-3"})));
  CHECK(usage(run({"solve", "-i", kReference, "--dmax", "30", "--redundancy", "0"})));
  CHECK(usage(run({"solve", "-i", kReference, "--dmax", "30", "--solver", "simplex"})));
  CHECK(usage(run({"solve", "-i", kReference, "--dmax", "30", "--redundancy", "12"})));
  CHECK(usage(run({"solve", "-i", kReference, "--dmax", "30", "--big-m", "large"})));
  CHECK(usage(run({"solve", "-i", tmp / "missing.json", "--dmax", "30"})));
  CHECK(usage(run({"sweep", "-i", kReference, "--dmax", "30,x"})));

  const Run partial = run({"solve", "-i", kReference, "--dmax", "30", "--redundancy", "0", "-o", tmp / "out.txt"});
  CHECK(usage(partial));
  CHECK_FALSE(fs::exists(tmp / "out.txt"));

  const Run help = run({"--help"});
  CHECK(help.code == cli::kOk);
  CHECK(help.out.find("export-mps") != std::string::npos);
}

TEST_CASE("generate, export and calibrate") {
  Scratch tmp;
  SUBCASE("generate is deterministic") {
    const Run a = run({"generate", "--seed", "7"});
    const Run b = run({"generate", "--seed", "7"});
    REQUIRE(a.code == cli::kOk);
    CHECK(a.out == b.out);
    io::GeneratorConfig cfg;
    cfg.seed = 7;
    CHECK(a.out == io::save_instance(io::generate_instance(cfg)));
    CHECK(run({"generate", "--seed", "8"}).out != a.out);
    CHECK(run({"generate", "--demands", "0"}).code == cli::kUsage);
  }
  SUBCASE("export-mps") {
    const Run r = run({"export-mps", "-i", kReference, "--dmax", "30"});
    REQUIRE(r.code == cli::kOk);
    const MipProblem p = io::parse_mps(r.out);
    CHECK(p.variables.size() == 3256);
    CHECK(p.maximize);
  }
  SUBCASE("export-geojson from a saved solution") {
    REQUIRE(run({"solve", "-i", kReference, "--dmax", "30", "--format", "json", "-o", tmp / "s.json"}).code == cli::kOk);
    const Run r = run({"export-geojson", "-i", kReference, "--solution", tmp / "s.json"});
    REQUIRE(r.code == cli::kOk);
    const io::Json g = io::parse_text(r.out);
    int selected = 0;
    for (const auto& f : g["features"]) selected += f["properties"]["role"] == "selected";
    CHECK(selected == 5);
    CHECK(io::parse_text(run({"export-geojson", "-i", kReference}).out)["features"].size() == 109);
  }
  SUBCASE("calibration reproduces the checked-in reference") {
    const io::Json report = io::parse_text(slurp(fs::path(EVSITE_SOURCE_DIR) / "data" / "calibration-report.json"));
    const std::string seed = std::to_string(report["seed"].get<std::uint64_t>());
    const Run r = run({"calibrate", "--first-seed", seed, "--last-seed", seed, "-o", tmp / "ref.json", "--threads", "1"});
    CHECK(r.code == (report["success"].get<bool>() ? cli::kOk : cli::kInfeasible));
    CHECK(slurp(tmp / "ref.json") == slurp(kReference));
  }
}

TEST_CASE("thread count from the environment") {
  ::setenv("EVSITE_THREADS", "2", 1);
  const Run r = run({"solve", "-i", kReference, "--dmax", "30", "--format", "json"});
  ::unsetenv("EVSITE_THREADS");
  CHECK(r.code == cli::kOk);
  CHECK(io::parse_text(r.out)["connector_total"] == 33);
}
