#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "corrstat/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = corrstat::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

fs::path scratch() {
  const auto d = fs::temp_directory_path() / "corrstat_cli_tests";
  fs::create_directories(d);
  return d;
}

fs::path fixture() {
  const auto p = scratch() / "synth.csv";
  const auto r = cli({"simulate", "--corr", "one-factor:3", "--N", "12", "--T", "600", "--seed", "5", "--out", p.string()});
  REQUIRE(r.code == 0);
  return p;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("density csv") {
    const auto r = cli({"density", "--rho-bar", "0.2", "--T", "50", "--grid", "11"});
    CHECK(r.code == 0);
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    CHECK(line == "rho,density,gaussian_approx");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 11);
  }

  TEST_CASE("validation errors exit 2 and name the flag") {
    const auto r = cli({"density", "--rho-bar", "0.2", "--T", "3"});
    CHECK(r.code == 2);
    CHECK(r.err.find("--T") != std::string::npos);
    CHECK(r.err.find("T >= 10") != std::string::npos);
    CHECK(cli({"reproduce", "table9"}).code == 2);
    CHECK(cli({"reproduce", "table1", "--input", "/nonexistent/panel.csv"}).code == 2);
    CHECK(cli({"global-scan", "--input", "/nonexistent/panel.csv"}).code == 2);
    CHECK(cli({"qscan", "--input", fixture().string(), "--t1", "10"}).code == 2);
    CHECK(cli({"frobnicate"}).code == 2);
  }

  TEST_CASE("runtime errors exit 1") {
    const auto bad = scratch() / "bad.csv";
    std::ofstream(bad) << "A,B\n1,2\n3,x\n";
    const auto r = cli({"spectral", "--input", bad.string(), "--window", "10", "--sectors", "0"});
    CHECK(r.code == 1);
    CHECK(r.err.find("parse error") != std::string::npos);
  }

  TEST_CASE("global scan is byte-identical across reruns and thread counts") {
    const auto in = fixture();
    const auto before = slurp(in);
    std::vector<std::string> outs;
    for (const char* t : {"1", "4", "1"}) {
      const auto out = scratch() / (std::string("g") + t + std::to_string(outs.size()) + ".json");
      REQUIRE(cli({"--threads", t, "global-scan", "--input", in.string(), "--window", "25,50", "--alpha", "0.05",
                   "--reshuffle-seed", "7", "--out", out.string()})
                  .code == 0);
      outs.push_back(slurp(out));
    }
    CHECK(outs[0] == outs[1]);
    CHECK(outs[0] == outs[2]);
    CHECK(slurp(in) == before);
    const auto j = nlohmann::json::parse(outs[0]);
    CHECK(j["version"] == corrstat::cli::kVersion);
    CHECK(j["config"]["reshuffle_seed"] == 7);
    CHECK(j["cells"].size() == 2);
    CHECK(j["cells"][0].contains("control_fractions"));
  }

  TEST_CASE("qscan and spectral join on the sample id") {
    const auto in = fixture();
    const auto q = cli({"qscan", "--input", in.string(), "--t1", "100", "--t2", "100", "--replicas", "30"});
    REQUIRE(q.code == 0);
    const auto s = cli({"spectral", "--input", in.string(), "--window", "100"});
    REQUIRE(s.code == 0);
    const auto jq = nlohmann::json::parse(q.out);
    const auto js = nlohmann::json::parse(s.out);
    REQUIRE(jq["samples"].size() == 5);
    REQUIRE(js["deltas"].size() == 5);
    for (std::size_t k = 0; k < 5; ++k) {
      CHECK(jq["samples"][k]["sample"] == js["deltas"][k]["sample"]);
      CHECK(jq["samples"][k]["in_sample"][0] == js["snapshots"][k]["range"][0]);
      CHECK(jq["samples"][k].contains("band"));
      CHECK(jq["samples"][k]["q"].get<double>() > 0.0);
    }
    CHECK(jq["band"]["k"] == 5.0);
  }

  TEST_CASE("local scan report") {
    const auto r = cli({"local-scan", "--input", fixture().string(), "--t1", "200", "--tau", "50,100", "--n", "1,3,5"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["cells"].size() == 6);
    CHECK(j["params"]["estimates_per_pair"][0]["estimates"] == 9);
  }

  TEST_CASE("simulate is deterministic") {
    const auto a = cli({"simulate", "--family", "student-t", "--nu", "3", "--N", "3", "--T", "20", "--seed", "9"});
    const auto b = cli({"simulate", "--family", "student-t", "--nu", "3", "--N", "3", "--T", "20", "--seed", "9"});
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(cli({"simulate", "--family", "student-t", "--nu", "2", "--T", "20"}).code == 2);
  }

  TEST_CASE("fig1 recipe") {
    const auto dir = scratch() / "fig1";
    REQUIRE(cli({"reproduce", "fig1", "--out-dir", dir.string()}).code == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "fig1.json"));
    CHECK(j["comparison"]["sup_gap_over_peak_T50"].get<double>() < 0.05);
    CHECK(j["comparison"]["narrower_at_T150"] == true);
    CHECK(fs::exists(dir / "fig1.csv"));
  }
}
