#include "likstab/cli.hpp"
#include "likstab/models.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

using nlohmann::json;

namespace {

const std::string kTmp = LIKSTAB_TEST_TMP;

struct Run {
  int code;
  std::string out, err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = likstab::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string write_file(const std::string& name, const std::string& text) {
  const std::string path = kTmp + "/" + name;
  std::ofstream(path) << text;
  return path;
}

std::string slurp(const std::string& path) {
  std::ifstream is(path);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("pivot on the three-point sample") {
    const auto y = write_file("y123.csv", "y\n1\n2\n3\n");
    const auto r = run({"pivot", "--model", "normal-mv", "--data", y, "--psi0", "0", "--pivot", "r", "--seed", "11"});
    REQUIRE(r.code == 0);
    const auto j = json::parse(r.out);
    CHECK(j["version"] == likstab::cli::kReportVersion);
    CHECK(j["command"] == "pivot");
    CHECK(j["config"]["model"] == "normal-mv");
    CHECK(j["seeds"]["master"] == 11);
    const auto& row = j["results"]["pivots"][0];
    CHECK(row["kind"] == "r");
    CHECK(row["value"].get<double>() == doctest::Approx(std::sqrt(3.0 * std::log(7.0))).epsilon(1e-12));
    const double cf = row["cf_p"].get<double>();
    CHECK(cf > 0.0);
    CHECK(cf < 0.05);
    CHECK(row.contains("bootstrap_p"));
  }

  TEST_CASE("equivalence check for (r, wo)") {
    const auto r = run({"equiv-check", "--pair", "r,wo", "--model", "normal-mv", "--theta", "0,1", "--n", "50", "--seed", "1"});
    REQUIRE(r.code == 0);
    const auto j = json::parse(r.out);
    CHECK(j["results"]["pass"] == true);
    CHECK(j["results"]["conditions"].size() == 2);

    const auto w = run({"equiv-check", "--pair", "r,we", "--model", "location-scale:t5", "--theta", "0,1", "--n", "50",
                        "--seed", "1"});
    REQUIRE(w.code == 0);
    CHECK(json::parse(w.out)["results"]["pass"] == false);
  }

  TEST_CASE("fit on an exponential sample with mean 0.5") {
    const auto e = write_file("e.csv", "y\n0.2\n0.5\n0.9\n0.4\n");
    const auto r = run({"fit", "--model", "exponential", "--data", e, "--seed", "1"});
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out)["results"]["theta_hat"][0].get<double>() == doctest::Approx(2.0));
  }

  TEST_CASE("stability check per kind") {
    const auto r = run({"stability-check", "--model", "gamma", "--theta", "3,1.5", "--n", "30", "--seed", "1"});
    REQUIRE(r.code == 0);
    const auto checks = json::parse(r.out)["results"]["checks"];
    CHECK(checks.size() == 12);
    for (const auto& c : checks) {
      const std::string k = c["kind"];
      const bool stable = k != "we" && k != "wec" && k != "se" && k != "sec";
      CHECK(c["pass"] == stable);
    }
  }

  TEST_CASE("validation errors exit with 2 and name the field") {
    auto r = run({"pivot", "--model", "normal-mv", "--psi0", "0", "--seed", "1"});
    CHECK(r.code == 2);
    CHECK(r.err.find("data") != std::string::npos);

    r = run({"pivot", "--model", "normal-mv", "--n", "10", "--theta", "0,1", "--psi0", "0", "--seed", "x"});
    CHECK(r.code == 2);
    CHECK(r.err.find("--seed") != std::string::npos);

    r = run({"pivot", "--model", "normal-mv", "--n", "10", "--theta", "0,1", "--psi0", "0"});
    CHECK(r.code == 2);
    CHECK(r.err.find("seed") != std::string::npos);

    r = run({"pivot", "--model", "weibull", "--n", "10", "--theta", "0,1", "--psi0", "0", "--seed", "1"});
    CHECK(r.code == 2);

    r = run({"nonsense"});
    CHECK(r.code == 2);

    const auto cfg = write_file("bad.json", R"({"model": "normal-mv", "theta": [0, "one"], "n": 10, "psi0": 0, "seed": 1})");
    r = run({"pivot", "--config", cfg});
    CHECK(r.code == 2);
    CHECK(r.err.find("config.theta[1]") != std::string::npos);

    const auto unknown = write_file("unknown.json", R"({"model": "normal-mv", "colour": 1})");
    r = run({"fit", "--config", unknown});
    CHECK(r.code == 2);
    CHECK(r.err.find("config.colour") != std::string::npos);
  }

  TEST_CASE("numerical failures exit with 3") {
    const auto y = write_file("y123b.csv", "y\n1\n2\n3\n");
    const auto r = run({"pivot", "--model", "normal-mv", "--data", y, "--psi0", "0", "--pivot", "woc", "--B", "0", "--seed", "1"});
    CHECK(r.code == 3);
  }

  TEST_CASE("config file with flag override") {
    const auto cfg = write_file("fit.json", R"({"model": "normal-mv", "theta": [0, 1], "n": 25, "seed": 4})");
    const auto a = run({"fit", "--config", cfg});
    const auto b = run({"fit", "--config", cfg, "--seed", "5"});
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    const auto ja = json::parse(a.out), jb = json::parse(b.out);
    CHECK(ja["config"]["seed"] == 4);
    CHECK(jb["config"]["seed"] == 5);
    CHECK(ja["results"]["theta_hat"] != jb["results"]["theta_hat"]);
  }

  TEST_CASE("reports are byte-identical across thread counts") {
    const std::vector<std::string> base{"verify-order", "--model", "normal-mv", "--theta", "0,1", "--n-grid", "10,20,40",
                                        "--outer", "200", "--pair", "r,wo", "--seed", "9"};
    auto with_threads = [&](const std::string& t, const std::string& out) {
      auto args = base;
      args.insert(args.end(), {"--threads", t, "--out", out, "--csv", out + ".csv"});
      return run(args);
    };
    const std::string p1 = kTmp + "/order_t1.json", p2 = kTmp + "/order_t2.json";
    REQUIRE(with_threads("1", p1).code == 0);
    REQUIRE(with_threads("2", p2).code == 0);
    CHECK(slurp(p1) == slurp(p2));
    CHECK(slurp(p1 + ".csv") == slurp(p2 + ".csv"));
    const auto meta = json::parse(slurp(p2 + ".meta.json"));
    CHECK(meta["threads"] == 2);
    CHECK(meta.contains("timestamp"));
  }

  TEST_CASE("help exits cleanly") {
    const auto r = run({"--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("verify-uniformity") != std::string::npos);
  }
}
