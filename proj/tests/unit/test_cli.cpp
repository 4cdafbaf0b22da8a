#ifdef REACHLAB_HAVE_CLI

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "reachlab/cli.hpp"
#include "reachlab/model_io.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "reachlab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = reachlab::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("reachlab_cli_" + std::to_string(::getpid()))) {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name, const std::string& content) const {
    const auto p = path / name;
    std::ofstream(p) << content;
    return p.string();
  }
};

const char* kChain3 = R"({"n_states": 3,
  "transition": [[0.5, 0.3, 0.2], [0.1, 0.8, 0.1], [0, 0, 1]],
  "initial_state": 0, "outcome_state": 2, "horizon": {"max_steps": 4}})";

}  // namespace

TEST_CASE("cli dispersion prints four decimals") {
  const auto r = run_cli({"oracle", "dispersion", "--n", "100", "--p-base", "1e-4", "--p-elev", "1e-3"});
  CHECK(r.code == 0);
  CHECK(r.out == "0.0943\n");
}

TEST_CASE("cli validate and exit codes") {
  TempDir dir;
  const auto good = dir.file("good.json", kChain3);
  const auto bad = dir.file("bad.json", R"({"n_states": 2, "transition": [[0.5, 0.4], [0, 1]],
    "initial_state": 0, "outcome_state": 1, "horizon": {"max_steps": 3}})");
  const auto broken = dir.file("broken.json", "{nope");
  CHECK(run_cli({"validate", "--model", good}).code == 0);
  const auto v = run_cli({"validate", "--model", bad});
  CHECK(v.code == 3);
  CHECK((v.out + v.err).find("row 0 sums to") != std::string::npos);
  CHECK(run_cli({"validate", "--model", broken}).code == 3);
  CHECK(run_cli({"validate", "--model", (dir.path / "absent.json").string()}).code == 5);
  CHECK(run_cli({"estimate", "--model", good, "--kind", "bogus"}).code == 2);
  CHECK(run_cli({"no-such-command"}).code == 2);
  CHECK(run_cli({"sweep", "--axis", "probability", "--grid", "0.4,1.5", "--replications", "50",
                 "--out", (dir.path / "s.csv").string()})
            .code == 4);
  CHECK(fs::exists(dir.path / "s.csv"));
}

TEST_CASE("cli estimate is deterministic and writes a manifest") {
  TempDir dir;
  const auto model = dir.file("m.json", kChain3);
  const auto out = (dir.path / "est.json").string();
  const auto a = run_cli({"estimate", "--model", model, "--kind", "reach", "--n", "500", "--seed",
                          "3", "--out", out, "--format", "json"});
  REQUIRE(a.code == 0);
  const auto b = run_cli({"estimate", "--model", model, "--kind", "reach", "--n", "500", "--seed",
                          "3", "--workers", "4"});
  CHECK(a.out == b.out);
  CHECK(a.out.rfind("kind=REACH n=500 ", 0) == 0);
  const auto doc = nlohmann::json::parse(reachlab::read_text_file(out));
  CHECK(doc.contains("sub_values"));
  const auto manifest = nlohmann::json::parse(reachlab::read_text_file(out + ".manifest.json"));
  CHECK(manifest["seed"] == 3);
  REQUIRE_FALSE(manifest["artifacts"].empty());
  const auto& art = manifest["artifacts"][0];
  CHECK(art["sha256"].get<std::string>().size() == 64);
  CHECK(art["bytes"] == fs::file_size(art["path"].get<std::string>()));
}

TEST_CASE("cli sweep writes the fixed csv schema") {
  TempDir dir;
  const auto out = (dir.path / "sweep.csv").string();
  const auto r = run_cli({"sweep", "--axis", "spontaneity", "--grid", "0.5,1", "--replications",
                          "100", "--seed", "5", "--out", out});
  REQUIRE(r.code == 0);
  const auto csv = reachlab::read_text_file(out);
  CHECK(csv.rfind("task,kind,n,statistic,value,ci_low,ci_high,seed\n", 0) == 0);
  CHECK(csv.find("variance_sweep/spontaneity=0.5,REACH,1,variance,") != std::string::npos);
  CHECK(fs::exists(dir.path / "sweep.svg"));
}

TEST_CASE("sha256 known answer") {
  CHECK(reachlab::cli::sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

#endif
