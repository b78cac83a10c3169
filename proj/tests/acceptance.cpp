// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <stdlib.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "singell/audit.hpp"
#include "singell/cli.hpp"
#include "singell/fem.hpp"
#include "singell/integrand.hpp"
#include "singell/mesh.hpp"
#include "singell/probes.hpp"
#include "singell/quadrature.hpp"
#include "singell/singular_map.hpp"
#include "test_support.hpp"

using namespace singell;
using namespace testing;
namespace fs = std::filesystem;

namespace {

// Accumulates named sub-checks; a criterion passes iff all of them do.
class Ledger {
 public:
  void check(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
    ++count_;
  }
  void note(const std::string& s) { notes_ += (notes_.empty() ? "" : "; ") + s; }
  bool ok() const { return failures_.empty(); }
  std::string summary() const {
    std::ostringstream s;
    s << count_ - failures_.size() << '/' << count_ << " checks";
    if (!notes_.empty()) s << "; " << notes_;
    for (const auto& f : failures_) s << "\n    failed: " << f;
    return s.str();
  }

 private:
  std::vector<std::string> failures_;
  std::size_t count_ = 0;
  std::string notes_;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Mat2 fd_gradient(const std::function<double(const Mat2&)>& f, const Mat2& z, double h) {
  Mat2 g;
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) {
      Mat2 e = Mat2::Zero();
      e(i, k) = h;
      g(i, k) = (f(z + e) - f(z - e)) / (2 * h);
    }
  return g;
}

void identities(Ledger& L) {
  Rng rng(424242);
  double worst_pair = 0.0, worst_apply = 0.0;
  const double ps[] = {1.2, 1.5, 1.8};
  for (int n = 0; n < 100'000; ++n) {
    const auto params = make_params(ps[n % 3]);
    const double k = 2.0 * params.p / (2.0 - params.p);
    const Vec2 u = random_vec(rng, 10);
    const Mat2 z = random_mat(rng, 10), zb = random_mat(rng, 10);
    const Form4 a = bilinear_a(params, u);
    // T_u(z) = tr z + k/(1+|u|^2) u.(z u), written out independently
    auto tu = [&](const Mat2& m) { return m.trace() + k / (1.0 + u.squaredNorm()) * u.dot(m * u); };
    const double tz = tu(z), tzb = tu(zb);
    const double scale = z.norm() * zb.norm() + std::abs(tz * tzb);
    worst_pair = std::max(worst_pair, std::abs(form_pair(a, z, zb) - (dot(z, zb) + tz * tzb)) / scale);
    const Mat2 az = z + tz * (Mat2::Identity() + k / (1.0 + u.squaredNorm()) * u * u.transpose());
    worst_apply = std::max(worst_apply, (apply_form(a, z) - az).norm() / (z.norm() + std::abs(tz) * (1.0 + k)));
  }
  L.check(worst_pair <= 1e-12, "pairing identity, worst " + num(worst_pair));
  L.check(worst_apply <= 1e-12, "A(u)z display, worst " + num(worst_apply));
  L.note("worst pairing " + num(worst_pair) + ", A(u)z " + num(worst_apply));
}

void derivatives(Ledger& L) {
  Rng rng(1001);
  double w_grad = 0.0, w_hess = 0.0, w_dz = 0.0, w_du = 0.0;
  for (const double p : {1.2, 1.5, 1.8}) {
    const auto params = make_params(p);
    for (int n = 0; n < 100; ++n) {
      const Vec2 x = random_unit(rng);
      const Mat2 z = random_mat(rng, 10);
      const double h = 1e-6 * (1 + z.norm());
      const Mat2 fd = fd_gradient([&](const Mat2& w) { return integrand_f(params, x, w); }, z, h);
      w_grad = std::max(w_grad, rel_err(grad_f_z(params, x, z), fd));

      const Mat2 lambda = random_mat(rng, 1).normalized();
      const double t = 1e-4 * (1 + z.norm());
      const double fd2 = (integrand_f(params, x, z + t * lambda) - 2 * integrand_f(params, x, z) +
                          integrand_f(params, x, z - t * lambda)) /
                         (t * t);
      w_hess = std::max(w_hess, rel_err(hess_f_zz(params, x, z, lambda), fd2));

      const Vec2 u = random_vec(rng, 3);
      const Form4 dz = d_z_coeff_a(params, u, z);
      for (int c = 0; c < 4; ++c) {
        Vec4 e = Vec4::Zero();
        e(c) = 1.0;
        const Mat2 fdz = (coeff_a(params, u, z + h * unflatten(e)) - coeff_a(params, u, z - h * unflatten(e))) / (2 * h);
        w_dz = std::max(w_dz, (apply_form(dz, unflatten(e)) - fdz).norm() / std::max(dz.m.norm(), 1e-300));
      }
      const auto du = d_u_coeff_a(params, u, z);
      const double hu = 1e-6 * (1 + u.norm());
      const double scale = (du[0].cwiseAbs() + du[1].cwiseAbs()).norm();
      for (int m = 0; m < 2; ++m) {
        Vec2 e = Vec2::Zero();
        e(m) = hu;
        const Mat2 fdu = (coeff_a(params, u + e, z) - coeff_a(params, u - e, z)) / (2 * hu);
        w_du = std::max(w_du, (du[m] - fdu).norm() / std::max(scale, 1e-300));
      }
    }
  }
  L.check(w_grad <= 1e-6, "grad_f_z, worst " + num(w_grad));
  L.check(w_hess <= 1e-4, "hess_f_zz, worst " + num(w_hess));
  L.check(w_dz <= 1e-5, "d_z_coeff_a, worst " + num(w_dz));
  L.check(w_du <= 1e-5, "d_u_coeff_a, worst " + num(w_du));

  const auto params = make_params(1.5);
  const DiskMesh m = mesh_disk(0.3);
  const DofMap dofs(m);
  DiscreteField w = interpolate_singular(m);
  for (std::size_t i = 0; i < m.node_count(); ++i)
    if (!m.boundary[i]) w.values[i] += random_vec(rng, 0.3);
  const Vector g = assemble_gradient(params, m, w);
  const SparseMatrix hess = assemble_hessian(params, m, w);
  double w_ag = 0.0, w_ah = 0.0;
  for (int t = 0; t < 20; ++t) {
    Vector d(dofs.dofs());
    for (int k = 0; k < d.size(); ++k) d(k) = rng.normal();
    d.normalize();
    const double eps = 1e-6;
    const double fd = (energy(params, m, add_step(m, w, d, eps)) - energy(params, m, add_step(m, w, d, -eps))) / (2 * eps);
    w_ag = std::max(w_ag, std::abs(fd - g.dot(d)) / std::max(std::abs(g.dot(d)), g.norm()));
    const double eh = 1e-5;
    const Vector fdh =
        (assemble_gradient(params, m, add_step(m, w, d, eh)) - assemble_gradient(params, m, add_step(m, w, d, -eh))) / (2 * eh);
    w_ah = std::max(w_ah, rel_err(Vector(hess * d), fdh));
  }
  L.check(w_ag <= 1e-6, "assemble_gradient, worst " + num(w_ag));
  L.check(w_ah <= 1e-4, "assemble_hessian, worst " + num(w_ah));
  L.note("worst rel errors " + num(w_grad) + " / " + num(w_hess) + " / " + num(w_dz) + " / " + num(w_du) + " / " +
         num(w_ag) + " / " + num(w_ah));
}

void structure_audit(Ledger& L) {
  const auto fx = read_fixture("audit_constants.txt");
  auto hex = [&](const std::string& key) {
    const auto it = fx.find(key);
    if (it == fx.end()) throw std::runtime_error("missing fixture key " + key);
    return std::strtod(it->second.c_str(), nullptr);
  };
  const SampleCloud cloud;
  for (const char* tag : {"1.2", "1.5", "1.8"}) {
    const auto params = make_params(std::stod(tag));
    const AuditReport f = audit_integrand(params, cloud);
    const AuditReport a = audit_coefficients(params, cloud);
    for (const AuditReport* r : {&f, &a})
      for (const auto& c : r->checks)
        L.check(c.pass && c.margin_min > 0.0, r->subject + " " + c.name + " at p = " + tag);
    const std::string k = std::string("[") + tag + "]";
    L.check(f.nu_hat == hex("integrand.nu_hat" + k), std::string("integrand nu_hat fixture at p = ") + tag);
    L.check(f.L_hat == hex("integrand.L_hat" + k), std::string("integrand L_hat fixture at p = ") + tag);
    L.check(a.nu_hat == hex("coefficients.nu_hat" + k), std::string("coefficients nu_hat fixture at p = ") + tag);
    L.check(a.L_hat == hex("coefficients.L_hat" + k), std::string("coefficients L_hat fixture at p = ") + tag);
  }
  const auto rows = ratio_curve({1.8, 1.9, 1.95}, cloud);
  const bool up = rows[1].ratio > rows[0].ratio && rows[2].ratio > rows[1].ratio;
  L.check(up, "ratio strictly increasing over 1.8, 1.9, 1.95");
  L.note("ratios " + num(rows[0].ratio) + " < " + num(rows[1].ratio) + " < " + num(rows[2].ratio));
}

void weak_solution(Ledger& L) {
  const double p = 1.5;
  const auto params = make_params(p);
  const DiskRule& rule = default_singular_rule();
  L.check(rule.grading == 4.0 && rule.n_r == 800, "default rule is graded 4 with 800 rings");

  const double exact = w1p_seminorm_sing(p);
  const double quad = integrate(rule, [&](const Vec2& x) { return std::pow(frobenius(du_sing(x)), p); });
  const double semi_err = std::abs(quad - exact) / exact;
  L.check(std::abs(exact - 4.0 * std::numbers::pi) <= 1e-14 * exact, "closed-form seminorm is 4 pi");
  L.check(semi_err <= 1e-6, "seminorm quadrature, rel error " + num(semi_err));

  double worst_avoid = 0.0, worst_cover = 0.0, worst_ph = 0.0;
  for (const TestFunction& phi : default_test_family()) {
    const double sup = grad_sup_norm(phi, rule);
    const double r = std::abs(weak_residual(params, rule, phi)) / sup;
    const double tol = phi.covers_origin() ? 1e-5 : 1e-8;
    L.check(r <= tol, "weak residual " + phi.label() + " = " + num(r) + " |Dphi|");
    double& worst = phi.covers_origin() ? worst_cover : worst_avoid;
    worst = std::max(worst, r);

    const auto ph = p_harmonic_parts(p, phi, rule);
    const double rel = std::abs(ph.lhs - ph.rhs) / (std::abs(ph.lhs) + std::abs(ph.rhs) + 1.0);
    L.check(rel <= 1e-6, "p-harmonic residual " + phi.label() + " = " + num(rel));
    worst_ph = std::max(worst_ph, rel);
  }

  Rng rng(20240611);
  double worst_strong = 0.0;
  for (int k = 0; k < 200; ++k) {
    const double r = rng.uniform(0.05, 0.99);
    const double t = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const Vec2 x(r * std::cos(t), r * std::sin(t));
    const double h = std::min(1e-4, r / 8.0);
    const double q = strong_divergence_residual(params, x, h).norm() / (frobenius(singular_flux(params, x)) / r);
    L.check(q <= 1e-5, "strong residual at |x| = " + num(r));
    worst_strong = std::max(worst_strong, q);
  }
  L.note("seminorm err " + num(semi_err) + ", weak avoid " + num(worst_avoid) + ", weak cover " + num(worst_cover) +
         ", strong " + num(worst_strong) + ", p-harmonic " + num(worst_ph));
}

void fem_suite(Ledger& L) {
  const auto params = make_params(1.5);
  const double continuum = std::pow(2.0 * params.m_g, params.p / 2.0) * 2.0 * std::numbers::pi / (2.0 - params.p);
  double prev_err = std::numeric_limits<double>::infinity();
  std::string errs, iters;
  for (const double h : {0.2, 0.1, 0.05}) {
    const std::string at = " at h = " + num(h);
    const DiskMesh m = mesh_disk(h);
    const double e_interp = energy(params, m, interpolate_singular(m));
    const double err = std::abs(e_interp - continuum);
    L.check(err < prev_err, "interpolant error decreasing" + at);
    prev_err = err;
    errs += (errs.empty() ? "" : " > ") + num(err);

    const MinimizeResult r = minimize(params, m, 1e-8);
    const int n = r.log.entries.empty() ? 0 : r.log.entries.back().iter;
    L.check(r.log.converged, "Newton converged" + at);
    L.check(n <= 60, "Newton iterations " + std::to_string(n) + at);
    L.check(r.log.energy_non_increasing(), "energies non-increasing" + at);
    const double e_min = energy(params, m, r.field);
    L.check(e_min <= e_interp, "E_min <= E_interp" + at);
    L.check(assemble_gradient(params, m, r.field).norm() <= 1e-8 * (1.0 + std::abs(e_min)), "gradient tolerance" + at);
    iters += (iters.empty() ? "" : "/") + std::to_string(n);
  }
  L.note("interpolant error " + errs + ", Newton iterations " + iters);
}

void probe_suite(Ledger& L) {
  const double p = 1.5;
  const FieldSampler s = singular_sampler();
  const Vec2 origin = Vec2::Zero(), off(0.5, 0.0);
  const auto near = geometric_radii(0.5, 6), far = geometric_radii(0.25, 6);

  const DecayTable morrey = morrey_decay(s, origin, near);
  L.check(morrey.slope_assertable, "Morrey slope assertable");
  L.check(std::abs(morrey.slope - (2.0 - p)) <= 0.1, "Morrey slope " + num(morrey.slope));
  L.check(morrey.fit_residual <= 0.1, "Morrey fit residual " + num(morrey.fit_residual));

  const DecayTable ex_off = excess_decay(s, off, far);
  const DecayTable ex_origin = excess_decay(s, origin, near);
  L.check(ex_off.slope_assertable && ex_off.slope >= 3.0, "excess slope at (0.5, 0) = " + num(ex_off.slope));
  L.check(ex_origin.slope_assertable && ex_origin.slope <= 2.0, "excess slope at origin = " + num(ex_origin.slope));

  const DecayTable osc_origin = oscillation_probe(s, origin, near);
  const DecayTable osc_off = oscillation_probe(s, off, far);
  L.check(osc_origin.verdict == "discontinuous", "oscillation verdict at origin " + osc_origin.verdict);
  for (const double v : osc_origin.values) L.check(std::abs(v - 2.0) <= 0.2, "oscillation at origin " + num(v));
  L.check(osc_off.verdict == "continuous", "oscillation verdict at (0.5, 0) " + osc_off.verdict);
  L.note("Morrey slope " + num(morrey.slope) + " (fit " + num(morrey.fit_residual) + "), excess " + num(ex_off.slope) +
         " / " + num(ex_origin.slope) + ", osc " + osc_origin.verdict + " / " + osc_off.verdict);
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "singular-elliptic");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

void reproducibility(Ledger& L) {
  std::string tmpl = (fs::temp_directory_path() / "singell_accept_XXXXXX").string();
  if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
  const fs::path root = tmpl;
  const std::vector<std::vector<std::string>> runs{
      {"audit", "--p-grid", "1.2,1.5,1.8,1.9,1.95", "--samples", "20000"},
      {"verify"},
      {"minimize", "--h", "0.1"},
      {"minimize", "--h", "0.2", "--u-dependent"},
      {"probe", "--field", "singular", "--center", "0.3,0.2"},
  };
  std::size_t compared = 0;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    std::string label;
    for (const auto& a : runs[k]) label += (label.empty() ? "" : " ") + a;
    const fs::path a = root / ("run" + std::to_string(k) + "a"), b = root / ("run" + std::to_string(k) + "b");
    auto with_out = [&](const fs::path& dir) {
      auto args = runs[k];
      args.push_back("--out");
      args.push_back(dir.string());
      return args;
    };
    const int ca = cli(with_out(a)), cb = cli(with_out(b));
    L.check(ca == 0 && cb == 0, label + " exit codes " + std::to_string(ca) + ", " + std::to_string(cb));
    std::size_t csvs = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
      if (entry.path().extension() != ".csv") continue;
      const auto name = entry.path().filename();
      L.check(fs::exists(b / name) && slurp(entry.path().string()) == slurp((b / name).string()),
              label + ": " + name.string() + " differs");
      ++csvs;
    }
    L.check(csvs > 0, label + " wrote CSV files");
    compared += csvs;
  }
  // the probe on a saved field reads what minimize wrote
  const fs::path field = root / "run2a" / "field.txt";
  const int pa = cli({"probe", "--field", field.string(), "--out", (root / "pa").string()});
  const int pb = cli({"probe", "--field", field.string(), "--out", (root / "pb").string()});
  L.check(pa == 0 && pb == 0, "probe on saved field");
  for (const char* q : {"decay_morrey.csv", "decay_excess.csv", "decay_oscillation.csv"}) {
    L.check(slurp((root / "pa" / q).string()) == slurp((root / "pb" / q).string()), std::string("field probe ") + q);
    ++compared;
  }
  std::error_code ec;
  fs::remove_all(root, ec);
  L.note(std::to_string(compared) + " CSV pairs compared");
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    void (*run)(Ledger&);
    double budget_s;
  };
  const Criterion criteria[] = {
      {1, "identity suite", identities, 10},
      {2, "derivative suite", derivatives, 60},
      {3, "structure audit", structure_audit, 300},
      {4, "weak-solution verification", weak_solution, 300},
      {5, "FEM suite", fem_suite, 900},
      {6, "probe suite", probe_suite, 300},
      {7, "reproducibility", reproducibility, 0},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Ledger L;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(L);
    } catch (const std::exception& e) {
      L.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0) L.check(secs < c.budget_s, "runtime " + num(secs) + " s over budget " + num(c.budget_s) + " s");
    std::cout << "criterion " << c.id << " (" << c.name << "): " << (L.ok() ? "PASS" : "FAIL") << "  [" << num(secs)
              << " s; " << L.summary() << "]" << std::endl;
    if (!L.ok()) ++failed;
  }
  std::cout << (failed == 0 ? "all criteria PASS" : std::to_string(failed) + " criteria FAIL") << std::endl;
  return failed == 0 ? 0 : 1;
}
