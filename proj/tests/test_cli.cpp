#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "m3d/cli.hpp"

using namespace m3d;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("m3d_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("usage errors") {
  CHECK(run_cli({}).code == exit_usage);
  CHECK(run_cli({"frobnicate"}).code == exit_usage);
  CHECK(run_cli({"simulate", "--users", "abc"}).code == exit_usage);
  const auto dir = scratch("usage");
  CHECK(run_cli({"simulate", "--lambda", "-1", "--out", dir.string()}).code == exit_usage);
  CHECK(run_cli({"synth", "--scenario", "weird", "--out", dir.string()}).code == exit_usage);
  CHECK(run_cli({"--help"}).code == exit_ok);
  fs::remove_all(dir);
}

TEST_CASE("input errors") {
  const auto dir = scratch("input");
  CHECK(run_cli({"fit-powerlaw", "--input", (dir / "missing.csv").string(), "--out", dir.string()}).code ==
        exit_input);
  {
    std::ofstream bad(dir / "events.csv");
    bad << "action_id,user_id,tick,value\na,u,0,7\n";
    std::ofstream edges(dir / "edges.csv");
    edges << "src,dst\nu,v\n";
  }
  const auto r = run_cli({"fit-mu", "--events", (dir / "events.csv").string(), "--edges",
                          (dir / "edges.csv").string(), "--out", dir.string()});
  CHECK(r.code == exit_input);
  CHECK(r.err.find(":2") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("numerical failures") {
  const auto dir = scratch("numerical");
  {
    std::ofstream f(dir / "flat.csv");
    f << "total\n";
    for (int i = 0; i < 100; ++i) f << "5\n";
  }
  CHECK(run_cli({"fit-powerlaw", "--input", (dir / "flat.csv").string(), "--bootstrap", "0", "--out",
                 dir.string()})
            .code == exit_numerical);
  fs::remove_all(dir);
}

TEST_CASE("simulate is reproducible and fit-powerlaw without bootstrap") {
  const auto a = scratch("sim_a"), b = scratch("sim_b");
  const std::vector<std::string> base{"simulate", "--users", "100", "--p", "0.5", "--lambda", "0.5",
                                      "--actions", "1000", "--seed", "42"};
  auto args_a = base, args_b = base;
  args_a.insert(args_a.end(), {"--out", a.string()});
  args_b.insert(args_b.end(), {"--out", b.string(), "--threads", "1"});
  const auto ra = run_cli(args_a);
  CHECK(ra.code == exit_ok);
  CHECK(ra.out.find("simulate: 1000 trajectories") == 0);
  CHECK(run_cli(args_b).code == exit_ok);
  for (const char* f : {"trajectories.jsonl", "totals.csv", "simulation.json"})
    CHECK(slurp(a / f) == slurp(b / f));

  const auto fit = run_cli({"fit-powerlaw", "--input", (a / "totals.csv").string(), "--bootstrap", "0",
                            "--out", (a / "fit").string()});
  CHECK(fit.code == exit_ok);
  const auto rec = nlohmann::json::parse(slurp(a / "fit" / "powerlaw.json"));
  CHECK(rec["p_value"].is_null());
  CHECK(fit.out.find("p undefined") != std::string::npos);
  CHECK(fs::exists(a / "fit" / "pdf_loglog.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("config file and environment overrides") {
  const auto dir = scratch("config");
  {
    std::ofstream f(dir / "run.json");
    f << R"({"users": 20, "actions": 5, "seed": 9, "lambda": 0.3})";
  }
  const auto env_out = dir / "from_env";
  ::setenv("M3D_OUTPUT_DIR", env_out.string().c_str(), 1);
  const auto r = run_cli({"simulate", "--config", (dir / "run.json").string(), "--actions", "7"});
  ::unsetenv("M3D_OUTPUT_DIR");
  CHECK(r.code == exit_ok);
  const auto summary = nlohmann::json::parse(slurp(env_out / "simulation.json"));
  CHECK(summary["users"] == 20);
  CHECK(summary["actions"] == 7);
  CHECK(summary["seed"] == 9);
  fs::remove_all(dir);
}

TEST_CASE("pipeline from a synthetic corpus") {
  const auto dir = scratch("pipeline");
  const auto corpus = dir / "corpus";
  REQUIRE(run_cli({"synth", "--scenario", "burst-injected", "--users", "20", "--actions", "30",
                   "--max-ticks", "120", "--seed", "5", "--out-degree", "3", "--out", corpus.string()})
              .code == exit_ok);
  const auto traj = (corpus / "trajectories.jsonl").string();
  CHECK(run_cli({"fit-mu", "--edges", (corpus / "edges.csv").string(), "--events",
                 (corpus / "events.csv").string(), "--action", "0", "--out", (dir / "mu").string()})
            .code == exit_ok);
  CHECK(run_cli({"fit-factors", "--trajectories", traj, "--out", (dir / "factors").string()}).code ==
        exit_ok);
  CHECK(run_cli({"fit-lognormal", "--trajectories", traj, "--tick", "50", "--out", (dir / "ln").string()})
            .code == exit_ok);
  CHECK(run_cli({"predict-group", "--trajectories", traj, "--out", (dir / "pg").string()}).code == exit_ok);
  CHECK(run_cli({"detect-bursts", "--trajectories", traj, "--out", (dir / "db").string()}).code == exit_ok);
  CHECK(run_cli({"predict-bursts", "--trajectories", traj, "--k", "4", "--out", (dir / "pb").string()})
            .code == exit_ok);
  const auto sweep = run_cli({"sweep", "--trajectories", traj, "--k", "3", "5", "--kind", "both", "--out",
                              (dir / "sw").string()});
  CHECK(sweep.code == exit_ok);
  CHECK(slurp(dir / "sw" / "sweep.csv").rfind("kind,k,precision,recall,f1\n", 0) == 0);
  fs::remove_all(dir);
}
