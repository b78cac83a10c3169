#include "singell/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

#include "singell/audit.hpp"
#include "singell/errors.hpp"
#include "singell/fem.hpp"
#include "singell/probes.hpp"
#include "singell/quadrature.hpp"
#include "singell/rng.hpp"
#include "singell/singular_map.hpp"

namespace fs = std::filesystem;

namespace singell {

namespace {

struct RunConfig {
  std::string output = "out";
  // audit
  double p = 1.5;
  std::vector<double> p_grid;
  std::size_t samples = 100'000;
  double u_max = 3.0;
  double z_max = 50.0;
  std::uint64_t seed = 20240611;
  // verify
  int n_r = 800;
  int n_theta = 32;
  double grading = 4.0;
  bool skip_origin_bumps = false;
  std::vector<std::string> test_kinds{"radial-bump", "angular-mode"};
  int strong_points = 200;
  // minimize
  double h = 0.1;
  double tol = 1e-8;
  bool no_origin_node = false;
  bool u_dependent = false;
  // probe
  std::string field = "singular";
  std::string mesh;
  std::vector<double> center{0.0, 0.0};
  std::string quantity = "all";
  double rho_max = 0.0;  // 0: choose by center
  int radii_count = 6;
};

std::ofstream open_output(const fs::path& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream out(dir / name);
  if (!out) throw InputError("cannot write " + (dir / name).string());
  out << std::setprecision(17);
  return out;
}

void save_config(const CLI::App& sub, const fs::path& dir) {
  auto out = open_output(dir, "config.ini");
  out << "[" << sub.get_name() << "]\n";
  // unset options (empty value) would not parse back, so they are left at their defaults
  std::istringstream lines(sub.config_to_str(true, false));
  for (std::string line; std::getline(lines, line);)
    if (line.size() < 3 || line.compare(line.size() - 3, 3, "=\"\"") != 0) out << line << '\n';
}

void require_p(double p) {
  if (!(p > 1.0 && p < 2.0)) throw UsageError("p must lie in (1, 2)");
}

// ---------------------------------------------------------------- audit

int cmd_audit(const RunConfig& cfg, const CLI::App& sub, std::ostream& out, std::ostream& err) {
  std::vector<double> grid = cfg.p_grid.empty() ? std::vector<double>{cfg.p} : cfg.p_grid;
  for (double p : grid) require_p(p);
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (!(grid[k] > grid[k - 1])) throw UsageError("--p-grid must be increasing");
  if (cfg.samples == 0) throw UsageError("--samples must be positive");
  const fs::path dir = cfg.output;
  save_config(sub, dir);

  SampleCloud cloud{cfg.samples, cfg.u_max, cfg.z_max, cfg.seed};
  std::vector<AuditReport> reports;
  std::vector<RatioRow> rows;
  auto params_out = open_output(dir, "params.txt");
  for (double p : grid) {
    const auto params = make_params(p);
    write_params_fixture(params_out, params);
    params_out << '\n';
    reports.push_back(audit_integrand(params, cloud));
    reports.push_back(audit_coefficients(params, cloud));
    const auto& c = reports.back();
    rows.push_back({p, params.m_g, c.nu_hat, c.L_hat, c.ratio()});
  }
  {
    auto csv = open_output(dir, "audit.csv");
    write_audit_csv(csv, reports);
    auto rc = open_output(dir, "ratio_curve.csv");
    write_ratio_csv(rc, rows);
  }
  bool ok = true;
  auto summary = open_output(dir, "summary.txt");
  for (const auto& r : reports) {
    write_audit_summary(summary, r);
    summary << '\n';
    if (!r.pass()) {
      ok = false;
      const auto samples = generate_samples(cloud);
      for (const auto& c : r.checks) {
        if (c.pass) continue;
        const Sample& s = samples[c.worst_sample];
        err << "audit failure (" << r.subject << ", p = " << r.p << "): " << c.name << " at sample " << c.worst_sample
            << " x = (" << s.x.transpose() << ") u = (" << s.u.transpose() << ") z = (" << flatten(s.z).transpose()
            << ")\n";
      }
    }
  }
  const bool tail = ratio_tail_increasing(rows);
  summary << "ratio_tail_increasing = " << (tail ? "PASS" : "FAIL") << '\n';
  if (!tail) {
    ok = false;
    err << "audit failure: L/nu is not increasing on the last three grid points\n";
  }
  out << (ok ? "audit: all checks passed\n" : "audit: check failures\n");
  return ok ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------- verify

std::vector<TestFunction> verify_family(const RunConfig& cfg) {
  std::vector<TestFunction> family;
  auto wanted = [&](TestKind k) {
    return std::find(cfg.test_kinds.begin(), cfg.test_kinds.end(), to_string(k)) != cfg.test_kinds.end();
  };
  for (const auto& phi : default_test_family())
    if (wanted(phi.kind) && !(cfg.skip_origin_bumps && phi.covers_origin())) family.push_back(phi);
  if (wanted(TestKind::PiecewiseHat)) {
    const std::vector<Vec2> centers{{0.0, 0.0}, {0.3, 0.0}, {-0.2, 0.25}, {0.1, -0.4}};
    for (const Vec2& c : centers)
      for (int comp = 0; comp < 2; ++comp) {
        auto phi = TestFunction::hat(c, 0.4, comp);
        if (!(cfg.skip_origin_bumps && phi.covers_origin())) family.push_back(phi);
      }
  }
  return family;
}

// Weak-residual bound factor relative to |D phi|_inf.
double weak_bound_factor(const TestFunction& phi) {
  return phi.covers_origin() ? 1e-5 : 1e-8;
}

int cmd_verify(const RunConfig& cfg, const CLI::App& sub, std::ostream& out, std::ostream&) {
  require_p(cfg.p);
  if (cfg.strong_points < 0) throw UsageError("--strong-points must be >= 0");
  for (const auto& k : cfg.test_kinds)
    if (k != "radial-bump" && k != "angular-mode" && k != "piecewise-hat") throw UsageError("unknown test kind " + k);
  const auto family = verify_family(cfg);
  if (family.empty()) throw UsageError("the test family is empty");
  const DiskRule rule = build_rule(cfg.n_r, cfg.n_theta, cfg.grading);
  const fs::path dir = cfg.output;
  save_config(sub, dir);
  const auto params = make_params(cfg.p);
  bool ok = true;

  {
    auto csv = open_output(dir, "weak_residuals.csv");
    csv << "test,kind,covers_origin,residual,residual_el,grad_sup,bound,bound_el,p_harmonic_residual,"
           "p_harmonic_bound,pass\n";
    for (const auto& phi : family) {
      const double r = weak_residual(params, rule, phi);
      const double rel = weak_residual_el(params, rule, phi);
      const double sup = grad_sup_norm(phi, rule);
      const double bound = weak_bound_factor(phi) * sup;
      const double bound_el = bound * el_to_coeff_factor(params);
      const auto ph = p_harmonic_parts(cfg.p, phi, rule);
      const double ph_res = ph.lhs - ph.rhs;
      const double ph_bound = 1e-6 * (std::abs(ph.lhs) + std::abs(ph.rhs) + 1.0);
      const bool pass = std::abs(r) <= bound && std::abs(rel) <= bound_el && std::abs(ph_res) <= ph_bound;
      ok = ok && pass;
      csv << phi.label() << ',' << to_string(phi.kind) << ',' << (phi.covers_origin() ? 1 : 0) << ',' << r << ','
          << rel << ',' << sup << ',' << bound << ',' << bound_el << ',' << ph_res << ',' << ph_bound << ','
          << (pass ? "PASS" : "FAIL") << '\n';
    }
  }
  {
    auto csv = open_output(dir, "strong_residuals.csv");
    csv << "x,y,h,residual,bound,pass\n";
    Rng rng(cfg.seed);
    for (int k = 0; k < cfg.strong_points; ++k) {
      const double r = rng.uniform(0.05, 0.99);
      const double t = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const Vec2 x(r * std::cos(t), r * std::sin(t));
      const double h = std::min(1e-4, r / 8.0);
      const double res = strong_divergence_residual(params, x, h).norm();
      const double bound = 1e-5 * frobenius(singular_flux(params, x)) / r;
      const bool pass = res <= bound;
      ok = ok && pass;
      csv << x(0) << ',' << x(1) << ',' << h << ',' << res << ',' << bound << ',' << (pass ? "PASS" : "FAIL") << '\n';
    }
  }
  {
    auto csv = open_output(dir, "seminorm.csv");
    const double exact = w1p_seminorm_sing(cfg.p);
    const double quad = integrate(rule, [&](const Vec2& x) { return std::pow(frobenius(du_sing(x)), cfg.p); });
    const double rel = std::abs(quad - exact) / exact;
    const bool pass = rel <= 1e-6;
    ok = ok && pass;
    csv << "p,exact,quadrature,rel_error,pass\n"
        << cfg.p << ',' << exact << ',' << quad << ',' << rel << ',' << (pass ? "PASS" : "FAIL") << '\n';
  }
  out << (ok ? "verify: all residual bounds hold\n" : "verify: residual bound violated\n");
  return ok ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------- minimize

void write_field_files(const fs::path& dir, const DiskMesh& mesh, const DiscreteField& w) {
  auto f = open_output(dir, "field.txt");
  write_field(f, w);
  auto csv = open_output(dir, "field.csv");
  csv << "x,y,w1,w2,norm\n";
  for (std::size_t k = 0; k < mesh.node_count(); ++k) {
    const Vec2& x = mesh.nodes[k];
    const Vec2& v = w.values[k];
    csv << x(0) << ',' << x(1) << ',' << v(0) << ',' << v(1) << ',' << v.norm() << '\n';
  }
}

int cmd_minimize(const RunConfig& cfg, const CLI::App& sub, std::ostream& out, std::ostream& err) {
  require_p(cfg.p);
  if (!(cfg.h > 0.0 && cfg.h < 0.5)) throw UsageError("--h must lie in (0, 0.5)");
  if (!(cfg.tol > 0.0)) throw UsageError("--tol must be positive");
  const fs::path dir = cfg.output;
  save_config(sub, dir);
  const auto params = make_params(cfg.p);
  const DiskMesh mesh = mesh_disk(cfg.h, !cfg.no_origin_node);
  {
    auto m = open_output(dir, "mesh.txt");
    write_mesh(m, mesh);
  }
  const DiscreteField interp = interpolate_singular(mesh);
  try {
    auto summary = open_output(dir, "minimize_summary.txt");
    summary << "p = " << cfg.p << "\nh = " << cfg.h << "\nnodes = " << mesh.node_count()
            << "\ntriangles = " << mesh.triangle_count() << "\nm_g = " << params.m_g << '\n';
    if (cfg.u_dependent) {
      const auto res = solve_u_dependent(params, mesh, cfg.tol);
      write_field_files(dir, mesh, res.field);
      auto log = open_output(dir, "picard_log.csv");
      log << "outer,fixed_point_residual,increment\n";
      for (std::size_t k = 0; k < res.fixed_point_residuals.size(); ++k)
        log << k << ',' << res.fixed_point_residuals[k] << ','
            << (k < res.increments.size() ? res.increments[k] : 0.0) << '\n';
      auto inner = open_output(dir, "solve_log.csv");
      write_solve_log(inner, res.inner_log);
      summary << "solver = picard\nconverged = " << (res.converged ? 1 : 0)
              << "\nfinal_fixed_point_residual = " << res.fixed_point_residuals.back()
              << "\nv_distance_to_interpolant = " << v_distance(cfg.p, mesh, res.field, interp) << '\n';
      const double r0 = res.fixed_point_residuals.front();
      const bool bounded = std::all_of(res.fixed_point_residuals.begin(), res.fixed_point_residuals.end(),
                                       [&](double r) { return r <= 10.0 * r0; });
      summary << "check.residual_bounded = " << (bounded ? "PASS" : "FAIL") << '\n';
      if (!res.converged) {
        err << "solve_u_dependent: no convergence within the outer iteration limit\n";
        return kExitSolverFailed;
      }
    } else {
      const auto res = minimize(params, mesh, cfg.tol);
      write_field_files(dir, mesh, res.field);
      auto log = open_output(dir, "solve_log.csv");
      write_solve_log(log, res.log);
      const double e_interp = energy(params, mesh, interp);
      summary << "solver = newton\nconverged = 1\niterations = " << res.log.entries.size() - 1
              << "\nenergy = " << res.log.entries.back().energy << "\ninterpolant_energy = " << e_interp
              << "\ncontinuum_energy = " << std::pow(2.0 * params.m_g, cfg.p / 2.0) * w1p_seminorm_sing(cfg.p)
              << "\nv_distance_to_singular = " << v_distance_to_singular(cfg.p, mesh, res.field) << '\n';
      const double e = res.log.entries.back().energy;
      const bool below = e <= e_interp;
      const bool monotone = res.log.energy_non_increasing();
      const bool galerkin = assemble_gradient(params, mesh, res.field).norm() <= cfg.tol * (1.0 + std::abs(e));
      auto verdict = [](bool ok) { return ok ? "PASS" : "FAIL"; };
      summary << "check.energy_below_interpolant = " << verdict(below)
              << "\ncheck.energy_non_increasing = " << verdict(monotone)
              << "\ncheck.galerkin_residual = " << verdict(galerkin) << '\n';
      if (!(below && monotone && galerkin)) {
        err << "minimize: a post-solve check failed (see minimize_summary.txt)\n";
        return kExitCheckFailed;
      }
    }
  } catch (const ConvergenceError& e) {
    err << e.what() << '\n';
    return kExitSolverFailed;
  }
  out << "minimize: done (" << mesh.node_count() << " nodes)\n";
  return kExitOk;
}

// ---------------------------------------------------------------- probe

int cmd_probe(const RunConfig& cfg, const CLI::App& sub, std::ostream& out, std::ostream&) {
  require_p(cfg.p);
  if (cfg.center.size() != 2) throw UsageError("--center expects x,y");
  const Vec2 x0(cfg.center[0], cfg.center[1]);
  if (cfg.quantity != "all" && cfg.quantity != "morrey" && cfg.quantity != "excess" && cfg.quantity != "oscillation")
    throw UsageError("--quantity must be morrey, excess, oscillation or all");

  FieldSampler sampler;
  double floor_radius = 0.0;  // P1 fields are probed only down to the mesh scale
  if (cfg.field == "singular") {
    sampler = singular_sampler();
  } else {
    const fs::path field_path = cfg.field;
    const fs::path mesh_path = cfg.mesh.empty() ? field_path.parent_path() / "mesh.txt" : fs::path(cfg.mesh);
    std::ifstream fin(field_path), min(mesh_path);
    if (!fin) throw InputError("missing field file " + field_path.string());
    if (!min) throw InputError("missing mesh file " + mesh_path.string());
    const DiskMesh mesh = read_mesh(min);
    sampler = p1_sampler(mesh, read_field(fin));
    floor_radius = mesh.h;
  }
  double rho_max = cfg.rho_max;
  int count = cfg.radii_count;
  if (floor_radius > 0.0) {
    if (rho_max <= 0.0) rho_max = 0.8 * (1.0 - x0.norm());
    const int fit = static_cast<int>(std::floor(std::log2(rho_max / floor_radius) + 1e-9)) + 1;
    count = std::min(count, std::max(fit, 4));
  } else if (rho_max <= 0.0) {
    rho_max = std::min(0.5, 0.5 * (1.0 - x0.norm()));
  }
  const auto radii = geometric_radii(rho_max, count);

  ProbeOptions opts;
  opts.p = cfg.p;
  const fs::path dir = cfg.output;
  save_config(sub, dir);
  auto summary = open_output(dir, "probe_summary.txt");
  summary << "field = " << sampler.name << "\ncenter = " << x0(0) << ',' << x0(1) << '\n';
  auto emit = [&](const DecayTable& t) {
    auto csv = open_output(dir, "decay_" + t.quantity + ".csv");
    write_decay_csv(csv, t);
    summary << t.quantity << ".slope = " << t.slope << '\n'
            << t.quantity << ".fit_residual = " << t.fit_residual << '\n'
            << t.quantity << ".slope_assertable = " << (t.slope_assertable ? 1 : 0) << '\n';
    if (t.quantity == "morrey") summary << "morrey.mu = " << t.mu() << '\n';
    if (!t.verdict.empty()) summary << t.quantity << ".verdict (heuristic) = " << t.verdict << '\n';
    out << t.quantity << ": slope " << t.slope << " (fit residual " << t.fit_residual << ")";
    if (!t.verdict.empty()) out << ", verdict (heuristic): " << t.verdict;
    out << '\n';
  };
  if (cfg.quantity == "all" || cfg.quantity == "morrey") emit(morrey_decay(sampler, x0, radii, opts));
  if (cfg.quantity == "all" || cfg.quantity == "excess") emit(excess_decay(sampler, x0, radii, opts));
  if (cfg.quantity == "all" || cfg.quantity == "oscillation") emit(oscillation_probe(sampler, x0, radii, opts));
  return kExitOk;
}

// ---------------------------------------------------------------- report

int cmd_report(const RunConfig& cfg, const CLI::App&, std::ostream& out, std::ostream&) {
  const fs::path dir = cfg.output;
  const std::vector<std::string> known{"summary.txt",          "audit.csv",         "ratio_curve.csv",
                                       "weak_residuals.csv",   "strong_residuals.csv", "seminorm.csv",
                                       "minimize_summary.txt", "solve_log.csv",     "picard_log.csv",
                                       "probe_summary.txt",    "decay_morrey.csv",  "decay_excess.csv",
                                       "decay_oscillation.csv"};
  std::vector<std::string> present;
  for (const auto& name : known)
    if (fs::exists(dir / name)) present.push_back(name);
  if (present.empty()) throw InputError("report: no prior run outputs in " + dir.string());

  std::ostringstream body;
  int pass = 0;
  int fail = 0;
  for (const auto& name : present) {
    std::ifstream in(dir / name);
    body << "==== " << name << " ====\n";
    std::string line;
    while (std::getline(in, line)) {
      body << line << '\n';
      if (line.find("PASS") != std::string::npos) ++pass;
      if (line.find("FAIL") != std::string::npos) ++fail;
    }
  }
  auto rep = open_output(dir, "report.txt");
  rep << "checks passed = " << pass << "\nchecks failed = " << fail << "\nverdict = " << (fail == 0 ? "PASS" : "FAIL")
      << "\n\n"
      << body.str();
  out << "report: " << pass << " passed, " << fail << " failed\n";
  return fail == 0 ? kExitOk : kExitCheckFailed;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Counterexample toolkit for subquadratic planar elliptic systems", "singular-elliptic"};
  app.set_help_flag("--help", "print help and exit");
  app.set_config("--config", "", "INI/TOML config file; command-line flags take precedence");
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  auto add_common = [&](CLI::App* sub) {
    sub->set_help_flag("--help", "print help and exit");
    sub->add_option("--out", cfg.output, "output directory");
  };

  auto* audit = app.add_subcommand("audit", "certify growth/ellipticity conditions by sampling");
  add_common(audit);
  audit->add_option("--p", cfg.p, "exponent in (1,2)");
  audit->add_option("--p-grid", cfg.p_grid, "increasing exponents for the ratio curve")->delimiter(',')->default_str("");
  audit->add_option("--samples", cfg.samples);
  audit->add_option("--u-max", cfg.u_max);
  audit->add_option("--z-max", cfg.z_max);
  audit->add_option("--seed", cfg.seed);

  auto* verify = app.add_subcommand("verify", "weak/strong residuals of x/|x|");
  add_common(verify);
  verify->add_option("--p", cfg.p);
  verify->add_option("--n-r", cfg.n_r);
  verify->add_option("--n-theta", cfg.n_theta);
  verify->add_option("--grading", cfg.grading);
  verify->add_flag("--skip-origin-bumps", cfg.skip_origin_bumps);
  verify->add_option("--test-kinds", cfg.test_kinds, "radial-bump,angular-mode,piecewise-hat")->delimiter(',');
  verify->add_option("--strong-points", cfg.strong_points);
  verify->add_option("--seed", cfg.seed);

  auto* minimize_cmd = app.add_subcommand("minimize", "P1 minimization of the convex functional");
  add_common(minimize_cmd);
  minimize_cmd->add_option("--p", cfg.p);
  minimize_cmd->add_option("--h", cfg.h);
  minimize_cmd->add_option("--tol", cfg.tol);
  minimize_cmd->add_flag("--no-origin-node", cfg.no_origin_node);
  minimize_cmd->add_flag("--u-dependent", cfg.u_dependent, "solve div a(u,Du) = 0 by Picard iteration instead");

  auto* probe = app.add_subcommand("probe", "decay and oscillation probes");
  add_common(probe);
  probe->add_option("--p", cfg.p);
  probe->add_option("--field", cfg.field, "\"singular\" or a saved field file");
  probe->add_option("--mesh", cfg.mesh, "mesh file for --field (default: mesh.txt next to it)");
  probe->add_option("--center", cfg.center)->delimiter(',')->expected(2);
  probe->add_option("--quantity", cfg.quantity, "morrey|excess|oscillation|all");
  probe->add_option("--rho-max", cfg.rho_max);
  probe->add_option("--radii", cfg.radii_count);
  probe->add_option("--seed", cfg.seed);

  auto* report = app.add_subcommand("report", "collect prior outputs into report.txt");
  add_common(report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (audit->parsed()) return cmd_audit(cfg, *audit, out, err);
    if (verify->parsed()) return cmd_verify(cfg, *verify, out, err);
    if (minimize_cmd->parsed()) return cmd_minimize(cfg, *minimize_cmd, out, err);
    if (probe->parsed()) return cmd_probe(cfg, *probe, out, err);
    if (report->parsed()) return cmd_report(cfg, *report, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DomainError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InputError& e) {
    err << "missing input: " << e.what() << '\n';
    return kExitMissingInput;
  } catch (const ConvergenceError& e) {
    err << "solver failure: " << e.what() << '\n';
    return kExitSolverFailed;
  }
  return kExitUsage;
}

}  // namespace singell
