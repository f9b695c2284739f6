#include "geodex/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "geodex/error.hpp"
#include "json.hpp"

namespace geodex {

namespace {

using json = nlohmann::json;

// A JSON object whose keys must all be consumed; `finish` reports the first
// key nobody asked for.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "/" : path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  std::string path(const std::string& key) const { return path_ + "/" + key; }

  const json& at(const std::string& key) {
    if (!j_.contains(key)) throw ConfigError(path(key), "required key is missing");
    seen_.insert(key);
    return j_.at(key);
  }

  template <class T>
  T get(const std::string& key) {
    const json& v = at(key);
    try {
      return v.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(path(key), std::string("wrong type: ") + e.what());
    }
  }

  template <class T>
  T get_or(const std::string& key, T fallback) {
    return has(key) ? get<T>(key) : fallback;
  }

  Node child(const std::string& key) { return Node(at(key), path(key)); }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError(path(k), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::uint64_t get_seed(Node& n, const std::string& key) {
  const json& v = n.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    throw ConfigError(n.path(key), "seed must be a non-negative integer");
  return v.get<std::uint64_t>();
}

Vec get_vec(Node& n, const std::string& key) {
  auto v = n.get<std::vector<double>>(key);
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

const json& require_array(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array");
  return j;
}

ManifoldCase parse_manifold(const json& j, const std::string& path) {
  Node n(j, path);
  ManifoldCase c;
  c.id = n.get<std::string>("id");
  c.radius = n.get_or("radius", 1.0);
  if (c.id == "expression") {
    c.name = n.get<std::string>("name");
    c.coordinates = n.get<std::vector<std::string>>("coordinates");
    c.metric = n.get<std::vector<std::vector<std::string>>>("metric");
    const std::size_t dim = c.coordinates.size();
    if (c.metric.size() != dim || std::any_of(c.metric.begin(), c.metric.end(), [&](auto& r) { return r.size() != dim; }))
      throw ConfigError(n.path("metric"), "must be a " + std::to_string(dim) + " x " + std::to_string(dim) + " matrix");
    if (n.has("domain")) {
      auto boxes = n.get<std::vector<std::vector<double>>>("domain");
      if (boxes.size() != dim) throw ConfigError(n.path("domain"), "one [lo, hi] pair per coordinate");
      for (auto& b : boxes) {
        if (b.size() != 2 || !(b[0] < b[1])) throw ConfigError(n.path("domain"), "entries must be [lo, hi] with lo < hi");
        c.domain.push_back(AxisDomain{b[0], b[1], false});
      }
    }
  } else if (!builtin::by_id(c.id, c.radius)) {
    throw ConfigError(n.path("id"), "unknown manifold '" + c.id + "'");
  }
  c.base = get_vec(n, "base");
  c.direction = get_vec(n, "direction");
  n.finish();
  int dim = c.id == "expression" ? static_cast<int>(c.coordinates.size()) : builtin::by_id(c.id, c.radius)->dim;
  if (c.base.size() != dim) throw ConfigError(path + "/base", "needs " + std::to_string(dim) + " coordinates");
  if (c.direction.size() != dim) throw ConfigError(path + "/direction", "needs " + std::to_string(dim) + " components");
  return c;
}

ImmersionCase parse_immersion(const json& j, const std::string& path) {
  Node n(j, path);
  ImmersionCase c;
  c.id = n.get<std::string>("id");
  c.params = n.get_or("params", std::vector<double>{});
  c.n = n.get_or("n", 32);
  n.finish();
  if (c.n < 8) throw ConfigError(path + "/n", "at least 8 points per axis");
  try {
    (void)immersions::by_id(c.id, c.params, 8);
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
  return c;
}

FieldSpec parse_field(const json& j, const std::string& path) {
  Node n(j, path);
  FieldSpec f;
  auto kind = n.get<std::string>("kind");
  if (kind == "random") {
    f.kind = FieldSpec::Kind::random;
    f.max_mode = n.get_or("max_mode", 2);
    f.amplitude = n.get_or("amplitude", 0.3);
    if (f.max_mode < 0) throw ConfigError(n.path("max_mode"), "must be >= 0");
    if (n.has("seed")) f.seed = get_seed(n, "seed");
  } else if (kind == "fourier") {
    f.kind = FieldSpec::Kind::fourier;
    const json& modes = require_array(n.at("modes"), n.path("modes"));
    for (std::size_t i = 0; i < modes.size(); ++i) {
      Node m(modes[i], n.path("modes") + "/" + std::to_string(i));
      FourierMode mode;
      mode.m = m.get<std::vector<int>>("m");
      mode.cos_coeff = get_vec(m, "cos");
      mode.sin_coeff = m.has("sin") ? get_vec(m, "sin") : Vec::Zero(mode.cos_coeff.size());
      m.finish();
      if (mode.sin_coeff.size() != mode.cos_coeff.size())
        throw ConfigError(m.path("sin"), "must have as many entries as cos");
      f.modes.push_back(std::move(mode));
    }
    if (f.modes.empty()) throw ConfigError(n.path("modes"), "at least one mode");
  } else {
    throw ConfigError(n.path("kind"), "expected 'random' or 'fourier'");
  }
  n.finish();
  return f;
}

void check_seeds(const RunConfig& cfg) {
  for (const char* which : {"tangential", "normal", "generator"}) (void)cfg.field(which);
}

}  // namespace

ManifoldSpec ManifoldCase::build() const {
  if (id == "expression") return builtin::from_expressions(name, coordinates, metric, domain);
  auto m = builtin::by_id(id, radius);
  if (!m) throw PreconditionError("unknown manifold '" + id + "'");
  return *m;
}

Immersion ImmersionCase::build() const { return immersions::by_id(id, params, n); }

Mat FieldSpec::sample(const Lattice& grid, int components) const {
  if (kind == Kind::random) {
    if (!seed) throw PreconditionError("random field without a seed");
    return FourierField::random(components, grid.dim(), max_mode, amplitude, *seed).sample(grid);
  }
  // missing trailing wave-vector entries are zero
  FourierField f{components, modes};
  for (auto& mode : f.modes) {
    if (static_cast<int>(mode.m.size()) > grid.dim())
      throw PreconditionError("Fourier mode has more wave-vector entries than the grid has axes");
    mode.m.resize(static_cast<std::size_t>(grid.dim()), 0);
  }
  return f.sample(grid);
}

const std::vector<std::string>& RunConfig::tolerance_names() {
  static const std::vector<std::string> names{
      "geodesic.slope_band",      "group.slope_min",      "normal_metric.max_deviation",
      "haar.slope_min",           "haar.euclidean",       "diffeo_measure.lattice",
      "diffeo_measure.slope_min", "structure.residual",   "structure.slope_band",
      "act_diffeo.slope_min",     "xi0.slope_min",        "gauge_generator.slope_min",
      "gauge_generator.first_order_band", "fp.slope_min", "pipeline.residual",
      "action.slope_min",         "action.volume",        "action.frame_jacobian",
  };
  return names;
}

double RunConfig::tolerance(const std::string& name, double fallback) const {
  auto it = tolerances.find(name);
  return it == tolerances.end() ? fallback : it->second;
}

FieldSpec RunConfig::field(const std::string& which) const {
  const FieldSpec* f = nullptr;
  std::uint64_t offset = 0;
  if (which == "tangential") f = &tangential;
  if (which == "normal") f = &normal, offset = 1;
  if (which == "generator") f = &generator, offset = 2;
  if (!f) throw PreconditionError("unknown field '" + which + "'");
  FieldSpec out = *f;
  if (out.kind == FieldSpec::Kind::random && !out.seed) {
    if (!seed) throw ConfigError("/fields/" + which + "/seed", "random fields need a seed (here or at /seed)");
    out.seed = *seed + offset;
  }
  return out;
}

RunConfig default_config() {
  RunConfig c;
  c.seed = 20240917;
  auto pt = [](double a, double b) { return Vec{{a, b}}; };
  c.manifolds.push_back(ManifoldCase{"sphere", 1.0, {}, {}, {}, {}, pt(1.0, 0.3), pt(0.6, -0.8)});
  c.manifolds.push_back(ManifoldCase{"half_plane", 1.0, {}, {}, {}, {}, pt(0.2, 1.0), pt(0.6, -0.8)});
  c.immersions = {
      {"circle", {1.0}, 128},     {"circle3", {1.0, 0.5}, 128}, {"ellipse", {1.0, 0.6}, 128},
      {"sphere", {1.0}, 32},      {"torus", {2.0, 0.7}, 32},    {"world_line", {0.6}, 128},
      {"line", {}, 64},           {"plane", {}, 16},
  };
  return c;
}

RunConfig parse_config(const std::string& text, std::optional<std::uint64_t> seed) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("/", std::string("not valid JSON: ") + e.what());
  }
  Node root(j, "");
  RunConfig c;
  if (root.has("version") && root.get<int>("version") != 1) throw ConfigError("/version", "only version 1 is understood");
  if (root.has("seed")) c.seed = get_seed(root, "seed");
  if (root.has("scales")) {
    c.scales = root.get<std::vector<double>>("scales");
    if (c.scales.empty() || std::any_of(c.scales.begin(), c.scales.end(), [](double s) { return !(s > 0.0); }))
      throw ConfigError("/scales", "scales must be positive");
  }
  if (root.has("grid")) {
    c.grid = root.get<int>("grid");
    if (*c.grid < 8) throw ConfigError("/grid", "at least 8 points per axis");
  }
  if (root.has("noise_floor")) {
    c.noise_floor = root.get<double>("noise_floor");
    if (!(*c.noise_floor > 0.0)) throw ConfigError("/noise_floor", "must be positive");
  }
  if (root.has("tolerances")) {
    Node t = root.child("tolerances");
    for (const auto& name : RunConfig::tolerance_names())
      if (t.has(name)) c.tolerances[name] = t.get<double>(name);
    t.finish();
  }
  if (root.has("manifolds")) {
    const json& arr = require_array(root.at("manifolds"), "/manifolds");
    for (std::size_t i = 0; i < arr.size(); ++i)
      c.manifolds.push_back(parse_manifold(arr[i], "/manifolds/" + std::to_string(i)));
  } else {
    c.manifolds = default_config().manifolds;
  }
  if (root.has("immersions")) {
    const json& arr = require_array(root.at("immersions"), "/immersions");
    for (std::size_t i = 0; i < arr.size(); ++i)
      c.immersions.push_back(parse_immersion(arr[i], "/immersions/" + std::to_string(i)));
  } else {
    c.immersions = default_config().immersions;
  }
  if (root.has("fields")) {
    Node f = root.child("fields");
    if (f.has("tangential")) c.tangential = parse_field(f.at("tangential"), "/fields/tangential");
    if (f.has("normal")) c.normal = parse_field(f.at("normal"), "/fields/normal");
    if (f.has("generator")) c.generator = parse_field(f.at("generator"), "/fields/generator");
    f.finish();
  }
  if (root.has("output")) {
    Node o = root.child("output");
    c.report_path = o.get_or<std::string>("report", "");
    c.csv_path = o.get_or<std::string>("csv", "");
    o.finish();
  }
  root.finish();
  if (seed) c.seed = seed;
  check_seeds(c);
  return c;
}

RunConfig load_config(const std::string& path, std::optional<std::uint64_t> seed) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), seed);
}

void apply_overrides(RunConfig& cfg, std::optional<std::uint64_t> seed, std::optional<int> grid,
                     std::optional<double> tol) {
  if (seed) cfg.seed = seed;
  if (grid) {
    if (*grid < 8) throw ConfigError("--grid", "at least 8 points per axis");
    cfg.grid = grid;
  }
  if (tol) {
    if (!(*tol > 0.0)) throw ConfigError("--tol", "must be positive");
    cfg.noise_floor = tol;
  }
  check_seeds(cfg);
}

}  // namespace geodex
