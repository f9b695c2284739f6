#include <string>

#include "doctest.h"
#include "geodex/config.hpp"
#include "geodex/error.hpp"

using namespace geodex;

namespace {

// Returns the path reported by the ConfigError, or "" if parsing succeeded.
std::string error_path(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "";
}

}  // namespace

TEST_CASE("shipped default config matches the built-in one") {
  auto file = load_config(GEODEX_SOURCE_DIR "/configs/default.json");
  auto built = default_config();
  CHECK(file.seed == built.seed);
  CHECK(file.scales == built.scales);
  REQUIRE(file.manifolds.size() == built.manifolds.size());
  for (std::size_t i = 0; i < file.manifolds.size(); ++i) {
    CHECK(file.manifolds[i].id == built.manifolds[i].id);
    CHECK(file.manifolds[i].base == built.manifolds[i].base);
    CHECK(file.manifolds[i].direction == built.manifolds[i].direction);
  }
  REQUIRE(file.immersions.size() == built.immersions.size());
  for (std::size_t i = 0; i < file.immersions.size(); ++i) {
    CHECK(file.immersions[i].id == built.immersions[i].id);
    CHECK(file.immersions[i].params == built.immersions[i].params);
    CHECK(file.immersions[i].n == built.immersions[i].n);
  }
  auto grid = parameter_grid({16, 8}, {6.0, 3.0});
  for (const char* f : {"tangential", "normal", "generator"})
    CHECK((file.field(f).sample(grid, 2) - built.field(f).sample(grid, 2)).cwiseAbs().maxCoeff() == 0.0);
  CHECK_NOTHROW(load_config(GEODEX_SOURCE_DIR "/configs/euclidean.json"));
}

TEST_CASE("schema errors name the offending key") {
  CHECK(error_path(R"({"seed": 1})") == "");
  CHECK(error_path(R"({})") == "/fields/tangential/seed");  // random fields need a seed
  CHECK(error_path(R"({"seed": 1, "bogus": 2})") == "/bogus");
  CHECK(error_path(R"({"seed": 1, "scales": "x"})") == "/scales");
  CHECK(error_path(R"({"seed": 1, "scales": [0.1, -0.1]})") == "/scales");
  CHECK(error_path(R"({"seed": -3})") == "/seed");
  CHECK(error_path(R"({"seed": 1, "version": 2})") == "/version");
  CHECK(error_path(R"({"seed": 1, "grid": 4})") == "/grid");
  CHECK(error_path(R"({"seed": 1, "tolerances": {"pipeline.residual": 1e-7, "nope": 1}})") == "/tolerances/nope");
  CHECK(error_path(R"({"seed": 1, "immersions": [{"id": "circle", "params": [1]}, {"id": "torus", "nn": 3}]})") ==
        "/immersions/1/nn");
  CHECK(error_path(R"({"seed": 1, "immersions": [{"id": "torus", "params": [1]}]})") == "/immersions/0");
  CHECK(error_path(R"({"seed": 1, "manifolds": [{"id": "klein", "base": [0], "direction": [1]}]})") ==
        "/manifolds/0/id");
  CHECK(error_path(R"({"seed": 1, "manifolds": [{"id": "sphere", "base": [1], "direction": [1, 0]}]})") ==
        "/manifolds/0/base");
  CHECK(error_path(R"({"seed": 1, "manifolds": [{"id": "expression", "name": "e", "coordinates": ["x", "y"],
        "metric": [["1"]], "base": [0, 0], "direction": [1, 0]}]})") == "/manifolds/0/metric");
  CHECK(error_path(R"({"seed": 1, "fields": {"normal": {"kind": "random", "amp": 1}}})") == "/fields/normal/amp");
  CHECK(error_path(R"({"seed": 1, "fields": {"normal": {"kind": "gaussian"}}})") == "/fields/normal/kind");
  CHECK(error_path(R"({"seed": 1, "fields": {"normal": {"kind": "fourier", "modes": [{"m": [1], "cos": [1], "sin": [1, 2]}]}}})") ==
        "/fields/normal/modes/0/sin");
  CHECK(error_path(R"({"seed": 1, "output": {"report": "r.json", "plot": "p.png"}})") == "/output/plot");
  CHECK(error_path("{not json") == "/");
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("a field seed may replace the top-level one") {
  auto c = parse_config(R"({"fields": {
      "tangential": {"kind": "random", "seed": 5},
      "normal": {"kind": "fourier", "modes": [{"m": [1], "cos": [0.5]}]},
      "generator": {"kind": "random", "seed": 6}}})");
  CHECK_FALSE(c.seed.has_value());
  CHECK(*c.field("tangential").seed == 5);

  // top-level seed, offset per field so the three fields differ
  auto d = parse_config(R"({"seed": 10})");
  CHECK(*d.field("tangential").seed == 10);
  CHECK(*d.field("normal").seed == 11);
  CHECK(*d.field("generator").seed == 12);
}

TEST_CASE("field sampling") {
  auto grid1 = parameter_grid({32}, {6.283185307179586});
  auto grid2 = parameter_grid({16, 16}, {6.283185307179586, 6.283185307179586});
  auto c = parse_config(R"({"seed": 3, "fields": {"normal": {"kind": "fourier", "modes": [{"m": [1], "cos": [0.5], "sin": [0.25]}]}}})");
  auto f = c.field("normal");
  Mat a = f.sample(grid1, 1), b = f.sample(grid2, 1);
  // the missing second wave-vector entry is 0: constant along the second axis
  for (std::size_t p = 0; p < grid2.size(); ++p) {
    double u = grid2.point(p)[0];
    CHECK(b(0, static_cast<Eigen::Index>(p)) == doctest::Approx(0.5 * std::cos(u) + 0.25 * std::sin(u)));
  }
  CHECK(a(0, 0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(f.sample(grid1, 2), PreconditionError);

  FieldSpec three;
  three.kind = FieldSpec::Kind::fourier;
  three.modes = {FourierMode{{1, 0, 0}, Vec{{1.0}}, Vec{{0.0}}}};
  CHECK_THROWS_AS(three.sample(grid2, 1), PreconditionError);

  // random fields are reproducible and depend on the seed
  auto r = c.field("tangential");
  CHECK((r.sample(grid2, 2) - r.sample(grid2, 2)).cwiseAbs().maxCoeff() == 0.0);
  CHECK((r.sample(grid2, 2) - c.field("generator").sample(grid2, 2)).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("command-line overrides") {
  auto c = default_config();
  apply_overrides(c, 99, 24, 1e-9);
  CHECK(*c.seed == 99);
  CHECK(*c.grid == 24);
  CHECK(*c.noise_floor == 1e-9);
  CHECK_THROWS_AS(apply_overrides(c, std::nullopt, 3, std::nullopt), ConfigError);
  CHECK_THROWS_AS(apply_overrides(c, std::nullopt, std::nullopt, -1.0), ConfigError);
  CHECK(c.tolerance("pipeline.residual", 1e-8) == 1e-8);
  c.tolerances["pipeline.residual"] = 1e-6;
  CHECK(c.tolerance("pipeline.residual", 1e-8) == 1e-6);
}
