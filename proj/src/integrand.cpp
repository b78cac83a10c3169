#include "singell/integrand.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "singell/errors.hpp"

namespace singell {

double Cutoff::value(double s) const {
  if (std::abs(s) >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - s * s));
}

double Cutoff::d1(double s) const {
  if (std::abs(s) >= 1.0) return 0.0;
  const double h = 1.0 / (1.0 - s * s);
  return -2.0 * s * h * h * value(s);
}

double Cutoff::d2(double s) const {
  if (std::abs(s) >= 1.0) return 0.0;
  const double h = 1.0 / (1.0 - s * s);
  const double h2 = h * h;
  return value(s) * (4.0 * s * s * h2 * h2 - 8.0 * s * s * h2 * h - 2.0 * h2);
}

double cutoff_sup_scan(int points) {
  if (points < 2) throw UsageError("cutoff_sup_scan: need at least 2 points");
  const Cutoff g;
  double sup = 0.0;  // value outside [-1, 1]
  for (int k = 0; k < points; ++k) {
    const double s = -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(points - 1);
    sup = std::max(sup, std::abs(g.d1(s)) + 2.0 * std::abs(g.d2(s)) * s);
  }
  return sup;
}

IntegrandParams make_params(double p, double safety) {
  if (!(p > 1.0 && p < 2.0)) throw DomainError("make_params: p must lie in (1, 2)");
  if (!(safety >= 0.0)) throw DomainError("make_params: safety must be >= 0");
  static const double sup = cutoff_sup_scan();
  IntegrandParams params;
  params.p = p;
  params.cutoff_sup = sup;
  params.safety = safety;
  params.m_g = (1.0 + sup) / (p - 1.0) * (1.0 + safety);
  return params;
}

void write_params_fixture(std::ostream& out, const IntegrandParams& params) {
  const auto old = out.precision(17);
  out << "cutoff = " << params.cutoff.name() << '\n'
      << "p = " << params.p << '\n'
      << "cutoff_sup = " << params.cutoff_sup << '\n'
      << "safety = " << params.safety << '\n'
      << "m_g = " << params.m_g << '\n';
  out.precision(old);
}

Mat2 amplified_identity(const IntegrandParams& params, const Vec2& u) {
  return Mat2::Identity() + params.amplification() / (1.0 + u.squaredNorm()) * outer(u, u);
}

double t_u(const IntegrandParams& params, const Vec2& u, const Mat2& z) {
  return trace(z) + params.amplification() * u.dot(z * u) / (1.0 + u.squaredNorm());
}

Form4 bilinear_a(const IntegrandParams& params, const Vec2& u) {
  const Vec4 b = flatten(amplified_identity(params, u));
  return Form4{Mat4::Identity() + b * b.transpose()};
}

namespace {

void require_nonzero(const Vec2& x, const char* where) {
  if (!x.allFinite()) throw DomainError(std::string(where) + ": non-finite x");
  if (x.squaredNorm() == 0.0) throw DomainError(std::string(where) + ": x = 0 is outside the domain");
}

// Shared pieces of f and its derivatives at (u, z) with A = A(u).
struct Pieces {
  Mat4 a;        // A(u) as a 4x4 matrix
  Vec4 z;        // flattened gradient variable
  Vec4 az;       // A z
  double g;      // g(|z|^2)
  double g1;     // g'(|z|^2)
  double g2;     // g''(|z|^2)
  double s;      // g + m_g A(z, z)
};

Pieces pieces(const IntegrandParams& params, const Vec2& u, const Mat2& z) {
  Pieces k;
  k.a = bilinear_a(params, u).m;
  k.z = flatten(z);
  k.az = k.a * k.z;
  const double zz = k.z.squaredNorm();
  k.g = params.cutoff.value(zz);
  k.g1 = params.cutoff.d1(zz);
  k.g2 = params.cutoff.d2(zz);
  k.s = k.g + params.m_g * k.z.dot(k.az);
  return k;
}

}  // namespace

double integrand_f(const IntegrandParams& params, const Vec2& x, const Mat2& z) {
  require_nonzero(x, "integrand_f");
  const Pieces k = pieces(params, x.normalized(), z);
  return std::pow(k.s, params.p / 2.0);
}

Mat2 grad_f_z(const IntegrandParams& params, const Vec2& x, const Mat2& z) {
  require_nonzero(x, "grad_f_z");
  const Pieces k = pieces(params, x.normalized(), z);
  const double p = params.p;
  return unflatten(p * std::pow(k.s, (p - 2.0) / 2.0) * (k.g1 * k.z + params.m_g * k.az));
}

Mat2 flux(const IntegrandParams& params, const Vec2& x, const Mat2& z) {
  return grad_f_z(params, x, z) / params.p;
}

double hess_f_zz(const IntegrandParams& params, const Vec2& x, const Mat2& z, const Mat2& lambda) {
  require_nonzero(x, "hess_f_zz");
  const Pieces k = pieces(params, x.normalized(), z);
  const double p = params.p;
  const double mg = params.m_g;
  const Vec4 l = flatten(lambda);
  const double zl = k.z.dot(l);
  const double a_ll = l.dot(k.a * l);
  const double a_zl = k.az.dot(l);
  const double bracket = k.s * (k.g1 * l.squaredNorm() + 2.0 * k.g2 * zl * zl + mg * a_ll) -
                         (2.0 - p) * std::pow(k.g1 * zl + mg * a_zl, 2);
  return p * std::pow(k.s, (p - 4.0) / 2.0) * bracket;
}

Mat4 hess_f_matrix(const IntegrandParams& params, const Vec2& x, const Mat2& z) {
  require_nonzero(x, "hess_f_matrix");
  const Pieces k = pieces(params, x.normalized(), z);
  const double p = params.p;
  const double mg = params.m_g;
  const Vec4 v = k.g1 * k.z + mg * k.az;
  const Mat4 inner = k.s * (k.g1 * Mat4::Identity() + 2.0 * k.g2 * k.z * k.z.transpose() + mg * k.a) -
                     (2.0 - p) * v * v.transpose();
  return p * std::pow(k.s, (p - 4.0) / 2.0) * inner;
}

Mat2 coeff_a(const IntegrandParams& params, const Vec2& u, const Mat2& z) {
  const Pieces k = pieces(params, u, z);
  return unflatten(std::pow(k.s, (params.p - 2.0) / 2.0) * k.az);
}

Form4 d_z_coeff_a(const IntegrandParams& params, const Vec2& u, const Mat2& z) {
  const Pieces k = pieces(params, u, z);
  const double p = params.p;
  const Vec4 ds_half = k.g1 * k.z + params.m_g * k.az;  // (1/2) dS/dz
  // jac(out, in) = d (a)_out / d z_in
  const Mat4 jac = std::pow(k.s, (p - 4.0) / 2.0) * (k.s * k.a - (2.0 - p) * k.az * ds_half.transpose());
  return Form4{jac.transpose()};
}

std::array<Mat2, 2> d_u_coeff_a(const IntegrandParams& params, const Vec2& u, const Mat2& z) {
  const double p = params.p;
  const double mg = params.m_g;
  const double k = params.amplification();
  const double q = 1.0 + u.squaredNorm();
  const Mat2 b = amplified_identity(params, u);
  const double t = dot(b, z);
  const double zz = z.squaredNorm();
  const double s = params.cutoff.value(zz) + mg * (zz + t * t);
  const Mat2 az = z + t * b;

  std::array<Mat2, 2> out;
  for (int m = 0; m < 2; ++m) {
    Vec2 e = Vec2::Zero();
    e(m) = 1.0;
    const Mat2 db = k * ((outer(e, u) + outer(u, e)) / q - 2.0 * u(m) * outer(u, u) / (q * q));
    const double dt = dot(db, z);
    const double ds = 2.0 * mg * t * dt;
    out[m] = (p - 2.0) / 2.0 * std::pow(s, (p - 4.0) / 2.0) * ds * az +
             std::pow(s, (p - 2.0) / 2.0) * (dt * b + t * db);
  }
  return out;
}

}  // namespace singell
