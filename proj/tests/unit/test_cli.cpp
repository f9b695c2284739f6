#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "doctest.h"

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "geodex");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = geodex::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path temp_file(const std::string& name, const std::string& content = "") {
  auto p = std::filesystem::temp_directory_path() / ("geodex_cli_" + name);
  if (!content.empty()) std::ofstream(p) << content;
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string kEuclid = GEODEX_SOURCE_DIR "/configs/euclidean.json";

}  // namespace

TEST_CASE("cli: verify") {
  auto out = temp_file("report.json");
  auto r = run({"verify", "geodesic", "--config", kEuclid, "--out", out.string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("C1 geodesic_expansion_order PASS") != std::string::npos);
  CHECK(slurp(out).find("\"suite\": \"geodesic\"") != std::string::npos);

  auto strict = temp_file("strict.json", R"({"seed": 1, "tolerances": {"geodesic.slope_band": 1e-9}})");
  CHECK(run({"verify", "geodesic", "--config", strict.string()}).code == 1);
}

TEST_CASE("cli: usage and config errors exit with 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"verify"}).code == 2);
  CHECK(run({"verify", "nothing"}).code == 2);
  CHECK(run({"verify", "geodesic", "--grid", "abc"}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  auto no_seed = temp_file("noseed.json", R"({"scales": [0.2, 0.1, 0.05]})");
  auto r = run({"verify", "geodesic", "--config", no_seed.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("/fields/tangential/seed") != std::string::npos);
  // the flag supplies the missing seed
  CHECK(run({"verify", "geodesic", "--config", no_seed.string(), "--seed", "4"}).code == 0);
  CHECK(run({"sweep", "nonsense"}).code == 2);
  CHECK(run({"measure", "--immersion", "moebius"}).code == 2);
  CHECK(run({"geodesic", "shoot", "--point", "1", "--velocity", "0", "1"}).code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("cli: sweep") {
  auto r = run({"sweep", "expand3", "--manifold", "half_plane"});
  CHECK(r.code == 0);
  CHECK(r.out.rfind("scale,error,used\n", 0) == 0);
  auto out = temp_file("sweep.csv");
  CHECK(run({"sweep", "expand3", "--config", kEuclid, "--out", out.string()}).code == 0);
  CHECK(slurp(out).find("slope,exact") != std::string::npos);
  auto thin = run({"sweep", "expand3", "--scales", "0.2", "1e-4", "1e-5"});
  CHECK(thin.code == 1);
  CHECK(thin.err.find("insufficient signal") != std::string::npos);
}

TEST_CASE("cli: geodesic shoot and log invert each other") {
  auto s = run({"geodesic", "shoot", "--point", "1.2", "0.3", "--velocity", "0.2", "-0.1"});
  REQUIRE(s.code == 0);
  // last row: s, x0, x1, v0, v1
  auto last = s.out.substr(s.out.rfind('\n', s.out.size() - 2) + 1);
  double t, x0, x1;
  REQUIRE(std::sscanf(last.c_str(), "%lf,%lf,%lf", &t, &x0, &x1) == 3);
  CHECK(t == 1.0);
  auto l = run({"geodesic", "log", "--from", "1.2", "0.3", "--to", std::to_string(x0), std::to_string(x1)});
  REQUIRE(l.code == 0);
  double v0, v1;
  REQUIRE(std::sscanf(l.out.c_str(), "v0,v1\n%lf,%lf", &v0, &v1) == 2);
  CHECK(v0 == doctest::Approx(0.2).epsilon(1e-5));
  CHECK(v1 == doctest::Approx(-0.1).epsilon(1e-5));
  // leaving the chart is a failed computation, not a usage error
  CHECK(run({"geodesic", "shoot", "--point", "1.5", "0", "--velocity", "3", "0"}).code == 1);
}

TEST_CASE("cli: immersion report, measure, action") {
  auto r = run({"immersion", "report", "--immersion", "sphere", "--params", "1", "--grid", "16"});
  CHECK(r.code == 0);
  CHECK(r.out.rfind("key,value\npoints,512\n", 0) == 0);
  CHECK(r.out.find("frame_sign_0,1") != std::string::npos);

  auto m = run({"measure", "--immersion", "circle", "--params", "1", "--weight", "fp"});
  CHECK(m.code == 0);
  CHECK(m.out.rfind("term,value\nmean_curvature,", 0) == 0);
  CHECK(m.out.find("\nlog_density,") != std::string::npos);
  CHECK(m.out == run({"measure", "--immersion", "circle", "--params", "1", "--weight", "fp"}).out);
  CHECK(m.out != run({"measure", "--immersion", "circle", "--params", "1", "--weight", "fp", "--seed", "8"}).out);
  CHECK(run({"measure", "--immersion", "circle", "--params", "1", "--weight", "bogus"}).code == 2);

  auto a = run({"action", "--immersion", "circle", "--params", "1", "--amplitude", "0", "--grid", "256"});
  CHECK(a.code == 0);
  double area = 0;
  REQUIRE(std::sscanf(a.out.c_str(), "term,value\narea,%lf", &area) == 1);
  CHECK(area == doctest::Approx(2 * 3.141592653589793).epsilon(1e-6));
}
