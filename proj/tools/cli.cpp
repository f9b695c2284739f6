#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "geodex/error.hpp"
#include "geodex/gauge.hpp"
#include "geodex/geodesic.hpp"
#include "geodex/suites.hpp"

namespace geodex::cli {

namespace {

constexpr int kPass = 0, kFail = 1, kUsage = 2;

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> grid;
  std::optional<double> tol;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "run configuration (JSON)");
  app->add_option("--out", c.out, "output file");
  app->add_option("--seed", c.seed, "seed for random fields");
  app->add_option("--grid", c.grid, "points per axis");
  app->add_option("--tol", c.tol, "noise floor (verify, sweep) or solver tolerance (geodesic)");
}

RunConfig config_from(const Common& c, bool tol_is_floor = true) {
  RunConfig cfg = c.config.empty() ? default_config() : load_config(c.config, c.seed);
  apply_overrides(cfg, c.seed, c.grid, tol_is_floor ? c.tol : std::nullopt);
  return cfg;
}

// Writes to --out if given, else `fallback` if non-empty, else the stream.
void emit(const std::string& text, const std::string& path, const std::string& fallback, std::ostream& out) {
  const std::string& target = path.empty() ? fallback : path;
  if (target.empty()) {
    out << text;
    return;
  }
  std::ofstream f(target, std::ios::binary);
  if (!f) throw ConfigError(target, "cannot open output file");
  f << text;
}

ManifoldCase manifold_case(const RunConfig& cfg, const std::string& id, double radius) {
  for (const auto& m : cfg.manifolds)
    if (m.label() == id) return m;
  if (!builtin::by_id(id, radius)) throw ConfigError("--manifold", "unknown manifold '" + id + "'");
  ManifoldCase m;
  m.id = id;
  m.radius = radius;
  return m;
}

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

void require_dim(const std::vector<double>& v, int dim, const std::string& flag) {
  if (static_cast<int>(v.size()) != dim)
    throw ConfigError(flag, "needs " + std::to_string(dim) + " components, got " + std::to_string(v.size()));
}

std::string row(const std::string& key, double value) {
  std::ostringstream os;
  os << std::setprecision(17) << key << "," << value << "\n";
  return os.str();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"geodex: geodesic expansions, invariant measures and immersion checks"};
  app.require_subcommand(1);

  Common verify_c, sweep_c, shoot_c, log_c, imm_c, measure_c, action_c;

  std::string suite;
  auto* verify = app.add_subcommand("verify", "run an acceptance suite");
  verify->add_option("suite", suite, "geodesic|haar|immersion|diffeo|gauge|action|all")->required();
  add_common(verify, verify_c);

  std::string check, sweep_manifold, sweep_immersion;
  std::vector<double> sweep_scales, sweep_params;
  auto* sweep_cmd = app.add_subcommand("sweep", "error against field amplitude for one check");
  std::string check_names;
  for (const auto& n : sweep_checks()) check_names += (check_names.empty() ? "" : "|") + n;
  sweep_cmd->add_option("check", check, check_names)->required();
  sweep_cmd->add_option("--scales", sweep_scales, "amplitudes (default: from the config)");
  sweep_cmd->add_option("--manifold", sweep_manifold, "configured manifold for geodesic checks");
  sweep_cmd->add_option("--immersion", sweep_immersion, "builtin immersion for deviation checks");
  sweep_cmd->add_option("--params", sweep_params, "immersion parameters");
  add_common(sweep_cmd, sweep_c);

  std::string g_manifold = "sphere";
  double g_radius = 1.0, g_t = 1.0;
  std::vector<double> g_point, g_velocity, g_from, g_to;
  auto* geodesic = app.add_subcommand("geodesic", "shoot geodesics or invert the exponential map");
  geodesic->require_subcommand(1);
  auto* shoot_cmd = geodesic->add_subcommand("shoot", "integrate a geodesic; CSV of the accepted steps");
  shoot_cmd->add_option("--manifold", g_manifold, "builtin id or a manifold from --config");
  shoot_cmd->add_option("--radius", g_radius);
  shoot_cmd->add_option("--point", g_point)->required();
  shoot_cmd->add_option("--velocity", g_velocity)->required();
  shoot_cmd->add_option("--t", g_t, "parameter length");
  add_common(shoot_cmd, shoot_c);
  auto* log_cmd = geodesic->add_subcommand("log", "initial velocity joining two points");
  log_cmd->add_option("--manifold", g_manifold, "builtin id or a manifold from --config");
  log_cmd->add_option("--radius", g_radius);
  log_cmd->add_option("--from", g_from)->required();
  log_cmd->add_option("--to", g_to)->required();
  add_common(log_cmd, log_c);

  std::string imm_id;
  std::vector<double> imm_params;
  auto add_immersion = [&](CLI::App* a) {
    a->add_option("--immersion", imm_id, "builtin immersion id")->required();
    a->add_option("--params", imm_params, "immersion parameters");
  };
  auto* immersion = app.add_subcommand("immersion", "immersion geometry");
  immersion->require_subcommand(1);
  auto* report = immersion->add_subcommand("report", "induced geometry and structure-equation residuals as CSV");
  add_immersion(report);
  add_common(report, imm_c);

  std::string weight = "gauge_fixed";
  double amplitude = 0.1;
  auto* measure = app.add_subcommand("measure", "log-weights over deviation fields as term,value CSV");
  add_immersion(measure);
  measure->add_option("--weight", weight, "right|generator|fp|gauge_fixed")
      ->check(CLI::IsMember({"right", "generator", "fp", "gauge_fixed"}));
  measure->add_option("--amplitude", amplitude, "field amplitude");
  add_common(measure, measure_c);

  auto* action = app.add_subcommand("action", "area action and its expansion as term,value CSV");
  add_immersion(action);
  action->add_option("--amplitude", amplitude, "field amplitude");
  add_common(action, action_c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kPass;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kPass;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (verify->parsed()) {
      auto cfg = config_from(verify_c);
      auto rep = run_suite(cfg, suite);
      for (const auto& c : rep.checks) out << summary_line(c) << "\n";
      if (!verify_c.out.empty() || !cfg.report_path.empty()) emit(rep.to_json(), verify_c.out, cfg.report_path, out);
      return rep.passed() ? kPass : kFail;
    }
    if (sweep_cmd->parsed()) {
      auto cfg = config_from(sweep_c);
      const auto names = sweep_checks();
      if (std::find(names.begin(), names.end(), check) == names.end())
        throw ConfigError("check", "unknown scaling check '" + check + "'");
      if (sweep_scales.empty()) sweep_scales = cfg.scales;
      SweepOptions opt{sweep_manifold, sweep_immersion, sweep_params};
      try {
        emit(to_csv(sweep(cfg, check, sweep_scales, opt)), sweep_c.out, cfg.csv_path, out);
      } catch (const InsufficientSignal& e) {
        err << check << ": " << e.what() << "\n";
        return kFail;
      }
      return kPass;
    }
    if (shoot_cmd->parsed()) {
      auto cfg = config_from(shoot_c, false);
      auto m = manifold_case(cfg, g_manifold, g_radius).build();
      require_dim(g_point, m.dim, "--point");
      require_dim(g_velocity, m.dim, "--velocity");
      ShootOptions so;
      if (shoot_c.tol) so.tol = *shoot_c.tol;
      auto path = shoot_path(m, to_vec(g_point), to_vec(g_velocity), g_t, so);
      std::ostringstream os;
      os << std::setprecision(17) << "s";
      for (int a = 0; a < m.dim; ++a) os << ",x" << a;
      for (int a = 0; a < m.dim; ++a) os << ",v" << a;
      os << "\n";
      for (const auto& s : path) {
        os << s.s;
        for (int a = 0; a < m.dim; ++a) os << "," << s.x[a];
        for (int a = 0; a < m.dim; ++a) os << "," << s.v[a];
        os << "\n";
      }
      emit(os.str(), shoot_c.out, "", out);
      return kPass;
    }
    if (log_cmd->parsed()) {
      auto cfg = config_from(log_c, false);
      auto m = manifold_case(cfg, g_manifold, g_radius).build();
      require_dim(g_from, m.dim, "--from");
      require_dim(g_to, m.dim, "--to");
      Vec v = log_map(m, to_vec(g_from), to_vec(g_to), log_c.tol.value_or(1e-10));
      std::ostringstream os;
      os << std::setprecision(17);
      for (int a = 0; a < m.dim; ++a) os << (a ? "," : "") << "v" << a;
      os << "\n";
      for (int a = 0; a < m.dim; ++a) os << (a ? "," : "") << v[a];
      os << "\n";
      emit(os.str(), log_c.out, "", out);
      return kPass;
    }
    if (report->parsed()) {
      ImmersionCase ic{imm_id, imm_params, imm_c.grid.value_or(64)};
      auto imm = ic.build();
      auto fr = build_frame(imm);
      auto ext = extrinsic_geometry(imm, fr);
      auto res = structure_residuals(imm, fr, ext);
      std::string text = "key,value\n";
      text += row("points", static_cast<double>(imm.size())) + row("dim", imm.dim()) + row("codim", imm.codim());
      text += row("volume", immersion_volume(imm, fr.induced));
      text += row("gauss", res.gauss) + row("codazzi", res.codazzi) + row("ricci", res.ricci) +
              row("weingarten", res.weingarten);
      text += row("orthogonality_defect", fr.orthogonality_defect) + row("normality_defect", fr.normality_defect) +
              row("completeness_defect", fr.completeness_defect);
      for (int i = 0; i < imm.codim(); ++i) {
        const auto tag = std::to_string(i);
        text += row("mean_curvature_min_" + tag, ext.mean.row(i).minCoeff());
        text += row("mean_curvature_max_" + tag, ext.mean.row(i).maxCoeff());
        text += row("frame_seed_" + tag, fr.seeds[static_cast<std::size_t>(i)]);
        text += row("frame_sign_" + tag, fr.signs[static_cast<std::size_t>(i)]);
      }
      emit(text, imm_c.out, "", out);
      return kPass;
    }
    if (measure->parsed()) {
      auto cfg = config_from(measure_c);
      auto f = sample_fields(cfg, ImmersionCase{imm_id, imm_params, 64});
      const auto N = f.t.cols();
      FunctionalWeight w;
      if (weight == "right") w = functional_right_measure_log(recompose(make_xi(f.bg, amplitude * f.t, amplitude * f.n)));
      if (weight == "generator") w = eta_measure_log(GeneratorField{amplitude * f.e}, *f.bg);
      if (weight == "fp") w = fp_log_determinant(make_xi(f.bg, amplitude * f.t, amplitude * f.n));
      if (weight == "gauge_fixed")
        w = gauge_fixed_log_integrand(make_xi(f.bg, Mat::Zero(f.bg->dim(), N), amplitude * f.n));
      emit(to_csv(w), measure_c.out, cfg.csv_path, out);
      return kPass;
    }
    if (action->parsed()) {
      auto cfg = config_from(action_c);
      auto f = sample_fields(cfg, ImmersionCase{imm_id, imm_params, 64});
      auto xi = make_xi(f.bg, amplitude * f.t, amplitude * f.n);
      auto ex = action_expansion(xi);
      const auto& imm = f.bg->immersion();
      Mat X = recompose(xi).samples;
      Mat S(imm.ambient_dim(), static_cast<Eigen::Index>(imm.size()));
      for (std::size_t p = 0; p < imm.size(); ++p) {
        auto col = static_cast<Eigen::Index>(p);
        S.col(col) = expand3(imm.ambient(), imm.position(p), X.col(col)).point;
      }
      std::string text = "term,value\n";
      text += row("area", ex.area) + row("linear", ex.linear) + row("quadratic", ex.quadratic) + row("value", ex.value);
      text += row("exact", nambu_goto_action(imm.with_samples(S)));
      emit(text, action_c.out, cfg.csv_path, out);
      return kPass;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const PreconditionError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFail;
  }
  return kUsage;
}

}  // namespace geodex::cli
