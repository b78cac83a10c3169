#include "singell/audit.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>

#include "singell/errors.hpp"
#include "singell/parallel.hpp"
#include "singell/rng.hpp"

namespace singell {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kSubsetStride = 50;  // samples receiving the finite-difference checks

Vec4 random_unit4(Rng& rng) {
  Vec4 v;
  do {
    for (int k = 0; k < 4; ++k) v(k) = rng.normal();
  } while (v.norm() < 1e-12);
  return v.normalized();
}

Vec2 random_unit2(Rng& rng) {
  const double t = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return Vec2(std::cos(t), std::sin(t));
}

// Per-sample generator seeded from (cloud seed, index) so that results do not
// depend on the order in which samples are processed.
Rng sample_rng(std::uint64_t seed, std::size_t index, std::uint64_t stream) {
  return Rng(seed * 0x9E3779B97F4A7C15ull + index * 0xBF58476D1CE4E5B9ull + stream);
}

const std::vector<Vec4>& fixed_directions() {
  static const std::vector<Vec4> dirs = [] {
    std::vector<Vec4> out;
    for (int k = 0; k < 4; ++k) {
      Vec4 e = Vec4::Zero();
      e(k) = 1.0;
      out.push_back(e);
      out.push_back(-e);
    }
    Rng rng(31415926);
    while (out.size() < 32) out.push_back(random_unit4(rng));
    return out;
  }();
  return dirs;
}

double median(std::vector<double> values) {
  values.erase(std::remove_if(values.begin(), values.end(), [](double v) { return std::isnan(v); }), values.end());
  if (values.empty()) return kNaN;
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

enum class Bound { Lower, Upper, Tolerance };

// Reduces per-sample quotients into a check. NaN entries are "not applicable".
// Tolerance checks pass iff every quotient is at most `tol` (margin 1 - q/tol).
ConditionCheck reduce_check(std::string name, std::string inequality, const std::vector<double>& q, Bound bound,
                      double tol = 0.0) {
  ConditionCheck c;
  c.name = std::move(name);
  c.inequality = std::move(inequality);
  c.quotient_min = kInf;
  c.quotient_max = -kInf;
  c.margin_min = kInf;
  std::vector<double> margins(q.size(), kNaN);
  bool any = false;
  bool finite = true;
  for (std::size_t k = 0; k < q.size(); ++k) {
    if (std::isnan(q[k])) continue;
    any = true;
    if (!std::isfinite(q[k])) finite = false;
    c.quotient_min = std::min(c.quotient_min, q[k]);
    c.quotient_max = std::max(c.quotient_max, q[k]);
    double m = 0.0;
    switch (bound) {
      case Bound::Lower: m = q[k]; break;
      case Bound::Upper: m = q[k] > 0.0 ? 1.0 / q[k] : kInf; break;
      case Bound::Tolerance: m = 1.0 - q[k] / tol; break;
    }
    margins[k] = m;
    if (m < c.margin_min) {
      c.margin_min = m;
      c.worst_sample = k;
    }
  }
  c.margin_median = median(margins);
  c.pass = any && finite && c.margin_min > 0.0;
  if (!any) c.quotient_min = c.quotient_max = c.margin_min = kNaN;
  return c;
}

void validate(const IntegrandParams& params, const SampleCloud& cloud) {
  if (cloud.count == 0) throw UsageError("audit: the sample cloud is empty");
  if (!(params.p > 1.0 && params.p < 2.0)) throw DomainError("audit: p must lie in (1, 2)");
  if (!(cloud.u_max >= 0.0) || !(cloud.z_max > 1.0)) throw UsageError("audit: need u_max >= 0 and z_max > 1");
}

}  // namespace

std::vector<Sample> generate_samples(const SampleCloud& cloud) {
  std::vector<Sample> out;
  out.reserve(cloud.count);
  Rng rng(cloud.seed);
  for (std::size_t k = 0; k < cloud.count; ++k) {
    Sample s;
    s.x = random_unit2(rng);
    s.u = random_unit2(rng) * cloud.u_max * std::sqrt(rng.uniform());
    const double du = std::exp(rng.uniform(std::log(1e-4), std::log(10.0)));
    s.u_bar = s.u + du * random_unit2(rng);
    const Vec4 dir = random_unit4(rng);
    double radius = 0.0;
    switch (k) {
      case 0: radius = 0.0; break;
      case 1: radius = 1.0; break;
      case 2: radius = cloud.z_max; break;
      default:
        switch (k % 3) {
          case 0: radius = rng.uniform(0.0, cloud.z_max); break;
          case 1: radius = std::exp(rng.uniform(std::log(1e-3), std::log(cloud.z_max))); break;
          default: radius = rng.uniform(0.0, 1.5); break;
        }
    }
    s.z = unflatten(radius * dir);
    out.push_back(s);
  }
  return out;
}

bool AuditReport::pass() const {
  if (checks.empty()) return false;
  for (const auto& c : checks)
    if (!c.pass) return false;
  return nu_hat > 0.0 && nu_hat <= L_hat;
}

const ConditionCheck& AuditReport::check(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return c;
  throw UsageError("AuditReport: no check named " + name);
}

AuditReport audit_integrand(const IntegrandParams& params, const SampleCloud& cloud) {
  validate(params, cloud);
  const auto samples = generate_samples(cloud);
  const std::size_t n = samples.size();
  const double p = params.p;

  std::vector<double> f_lo(n, kNaN), f_hi(n), h_lo(n), h_hi(n), dir_lo(n), cont(n, kNaN), homog(n, kNaN);
  const auto& fixed = fixed_directions();

  parallel_for(n, [&](std::size_t k) {
    const Sample& s = samples[k];
    const double nz = frobenius(s.z);
    const double f = integrand_f(params, s.x, s.z);
    if (nz > 0.0) f_lo[k] = f / std::pow(nz, p);
    f_hi[k] = f / std::pow(1.0 + nz, p);

    const Mat4 hess = hess_f_matrix(params, s.x, s.z);
    const Eigen::SelfAdjointEigenSolver<Mat4> eig(hess, Eigen::EigenvaluesOnly);
    const double w = std::pow(1.0 + nz, p - 2.0);
    h_lo[k] = eig.eigenvalues()(0) / w;
    h_hi[k] = eig.eigenvalues()(3) / w;

    Rng rng = sample_rng(cloud.seed, k, 1);
    double dmin = kInf;
    for (const Vec4& d : fixed) dmin = std::min(dmin, hess_f_zz(params, s.x, s.z, unflatten(d)) / w);
    for (int r = 0; r < 32; ++r)
      dmin = std::min(dmin, hess_f_zz(params, s.x, s.z, unflatten(random_unit4(rng))) / w);
    dir_lo[k] = dmin;

    if (k % kSubsetStride == 0) {
      const Mat2 dz = unflatten(1e-6 * (1.0 + nz) * random_unit4(rng));
      cont[k] = (hess_f_matrix(params, s.x, s.z + dz) - hess).norm() / hess.norm();
      const double t = std::exp(rng.uniform(std::log(1e-3), std::log(1e3)));
      homog[k] = std::abs(integrand_f(params, Vec2(t * s.x), s.z) - f) / f;
    }
  });

  AuditReport r;
  r.subject = "integrand";
  r.p = p;
  r.m_g = params.m_g;
  r.samples = n;
  r.checks.push_back(reduce_check("GV-f1 continuity", "|D_zz f(z+dz) - D_zz f(z)| <= 1e-3 |D_zz f(z)|, |dz| = 1e-6(1+|z|)",
                            cont, Bound::Tolerance, 1e-3));
  r.checks.push_back(reduce_check("GV-f2 lower", "nu |z|^p <= f(x,z)", f_lo, Bound::Lower));
  r.checks.push_back(reduce_check("GV-f2 upper", "f(x,z) <= L (1+|z|)^p", f_hi, Bound::Upper));
  r.checks.push_back(reduce_check("GV-f3 lower", "nu (1+|z|)^{p-2} |l|^2 <= D_zz f(l,l)", h_lo, Bound::Lower));
  r.checks.push_back(reduce_check("GV-f3 upper", "D_zz f(l,l) <= L (1+|z|)^{p-2} |l|^2", h_hi, Bound::Upper));
  r.checks.push_back(reduce_check("x-homogeneity", "|f(tx,z) - f(x,z)| <= 1e-12 f(x,z)", homog, Bound::Tolerance, 1e-12));
  r.nu_hat = std::min(r.check("GV-f2 lower").quotient_min, r.check("GV-f3 lower").quotient_min);
  r.L_hat = std::max(r.check("GV-f2 upper").quotient_max, r.check("GV-f3 upper").quotient_max);
  r.direction_nu = *std::min_element(dir_lo.begin(), dir_lo.end());
  return r;
}

AuditReport audit_coefficients(const IntegrandParams& params, const SampleCloud& cloud) {
  validate(params, cloud);
  const auto samples = generate_samples(cloud);
  const std::size_t n = samples.size();
  const double p = params.p;

  std::vector<double> growth(n), ellip(n), cont_u(n), c1(n, kNaN), expo(n, kNaN);

  parallel_for(n, [&](std::size_t k) {
    const Sample& s = samples[k];
    const double nz = frobenius(s.z);
    const Mat2 a = coeff_a(params, s.u, s.z);
    const Mat4 jac = d_z_coeff_a(params, s.u, s.z).m.transpose();
    const double jac_norm = Eigen::JacobiSVD<Mat4>(jac).singularValues()(0);
    growth[k] = (frobenius(a) + jac_norm * (1.0 + nz)) / std::pow(1.0 + nz, p - 1.0);

    const Mat4 sym = 0.5 * (jac + jac.transpose());
    const Eigen::SelfAdjointEigenSolver<Mat4> eig(sym, Eigen::EigenvaluesOnly);
    ellip[k] = eig.eigenvalues()(0) / std::pow(1.0 + nz, p - 2.0);

    const double du = (s.u - s.u_bar).norm();
    cont_u[k] = frobenius(a - coeff_a(params, s.u_bar, s.z)) /
                (std::pow(1.0 + nz, p - 1.0) * std::min(du, 1.0));

    if (k % kSubsetStride == 0) {
      Rng rng = sample_rng(cloud.seed, k, 2);
      const double eps = 1e-6 * (1.0 + nz);
      Mat4 fd;
      for (int c = 0; c < 4; ++c) {
        Vec4 e = Vec4::Zero();
        e(c) = eps;
        fd.col(c) = (flatten(coeff_a(params, s.u, s.z + unflatten(e))) -
                     flatten(coeff_a(params, s.u, s.z - unflatten(e)))) / (2.0 * eps);
      }
      c1[k] = (fd - jac).norm() / std::max(jac.norm(), 1e-300);

      const Vec2 d = 1e-3 * random_unit2(rng);
      const double e1 = frobenius(coeff_a(params, s.u + d, s.z) - a);
      const double e2 = frobenius(coeff_a(params, s.u + 0.5 * d, s.z) - a);
      if (e1 > 1e-12 * frobenius(a) && e2 > 0.0) expo[k] = std::log2(e1 / e2);
    }
  });

  AuditReport r;
  r.subject = "coefficients";
  r.p = p;
  r.m_g = params.m_g;
  r.samples = n;
  r.checks.push_back(reduce_check("GV1 C1-in-z", "|D_z a - finite differences| <= 1e-4 |D_z a|", c1, Bound::Tolerance, 1e-4));
  r.checks.push_back(reduce_check("GV2 growth", "|a| + |D_z a| (1+|z|) <= L (1+|z|)^{p-1}", growth, Bound::Upper));
  r.checks.push_back(reduce_check("GV3 ellipticity", "D_z a l . l >= nu (1+|z|)^{p-2} |l|^2", ellip, Bound::Lower));
  r.checks.push_back(reduce_check("GV4 u-continuity", "|a(u,z) - a(v,z)| <= L (1+|z|)^{p-1} min{|u-v|,1}", cont_u,
                            Bound::Upper));
  r.nu_hat = r.check("GV3 ellipticity").quotient_min;
  r.L_hat = std::max(r.check("GV2 growth").quotient_max, r.check("GV4 u-continuity").quotient_max);
  r.u_exponent = median(expo);
  return r;
}

MatchedEllipticity matched_ellipticity(const IntegrandParams& params, const SampleCloud& cloud) {
  validate(params, cloud);
  const auto samples = generate_samples(cloud);
  MatchedEllipticity out;
  out.integrand.resize(samples.size());
  out.coefficients.resize(samples.size());
  const double p = params.p;
  parallel_for(samples.size(), [&](std::size_t k) {
    const Sample& s = samples[k];
    const double w = std::pow(1.0 + frobenius(s.z), p - 2.0);
    // the coefficients are frozen at u = x so both quotients see the same A
    const Eigen::SelfAdjointEigenSolver<Mat4> ef(hess_f_matrix(params, s.x, s.z), Eigen::EigenvaluesOnly);
    const Mat4 jac = d_z_coeff_a(params, s.x, s.z).m.transpose();
    const Eigen::SelfAdjointEigenSolver<Mat4> ea(0.5 * (jac + jac.transpose()), Eigen::EigenvaluesOnly);
    out.integrand[k] = ef.eigenvalues()(0) / (p * params.m_g * w);
    out.coefficients[k] = ea.eigenvalues()(0) / w;
  });
  return out;
}

std::vector<RatioRow> ratio_curve(const std::vector<double>& p_grid, const SampleCloud& cloud) {
  if (p_grid.empty()) throw UsageError("ratio_curve: empty grid");
  for (std::size_t k = 0; k < p_grid.size(); ++k) {
    if (!(p_grid[k] > 1.0 && p_grid[k] < 2.0)) throw DomainError("ratio_curve: grid points must lie in (1, 2)");
    if (k > 0 && !(p_grid[k] > p_grid[k - 1])) throw UsageError("ratio_curve: grid must be increasing");
  }
  std::vector<RatioRow> rows;
  for (double p : p_grid) {
    const auto params = make_params(p);
    const auto rep = audit_coefficients(params, cloud);
    rows.push_back({p, params.m_g, rep.nu_hat, rep.L_hat, rep.ratio()});
  }
  return rows;
}

bool ratio_tail_increasing(const std::vector<RatioRow>& rows) {
  if (rows.size() < 3) return true;
  const std::size_t n = rows.size();
  return rows[n - 2].ratio > rows[n - 3].ratio && rows[n - 1].ratio > rows[n - 2].ratio;
}

void write_audit_csv(std::ostream& out, const std::vector<AuditReport>& reports, bool header) {
  const auto old = out.precision(17);
  if (header) out << "subject,p,condition,quotient_min,quotient_max,margin_min,margin_median,worst_sample,pass\n";
  for (const auto& r : reports)
    for (const auto& c : r.checks)
      out << r.subject << ',' << r.p << ',' << c.name << ',' << c.quotient_min << ',' << c.quotient_max << ','
          << c.margin_min << ',' << c.margin_median << ',' << c.worst_sample << ',' << (c.pass ? "PASS" : "FAIL")
          << '\n';
  out.precision(old);
}

void write_ratio_csv(std::ostream& out, const std::vector<RatioRow>& rows) {
  const auto old = out.precision(17);
  out << "p,m_g,nu_hat,L_hat,ratio\n";
  for (const auto& r : rows) out << r.p << ',' << r.m_g << ',' << r.nu_hat << ',' << r.L_hat << ',' << r.ratio << '\n';
  out.precision(old);
}

void write_audit_summary(std::ostream& out, const AuditReport& r) {
  const auto old = out.precision(17);
  out << "[" << r.subject << "]\n"
      << "p = " << r.p << "\nm_g = " << r.m_g << "\nsamples = " << r.samples << "\nnu_hat = " << r.nu_hat
      << "\nL_hat = " << r.L_hat << "\nratio = " << r.ratio() << '\n';
  if (r.subject == "integrand") out << "direction_nu = " << r.direction_nu << '\n';
  if (r.subject == "coefficients") out << "u_exponent = " << r.u_exponent << '\n';
  for (const auto& c : r.checks)
    out << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.inequality << " (min margin " << c.margin_min
        << ", worst sample " << c.worst_sample << ")\n";
  out << "verdict = " << (r.pass() ? "PASS" : "FAIL") << '\n';
  out.precision(old);
}

}  // namespace singell
