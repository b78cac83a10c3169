#include "singell/singular_map.hpp"

#include <cmath>
#include <numbers>

#include "singell/errors.hpp"

namespace singell {

namespace {

double checked_norm(const Vec2& x, const char* where) {
  if (!x.allFinite()) throw DomainError(std::string(where) + ": non-finite x");
  const double r = x.norm();
  if (r == 0.0) throw DomainError(std::string(where) + ": x = 0 is outside the domain");
  return r;
}

}  // namespace

Vec2 u_sing(const Vec2& x) { return x / checked_norm(x, "u_sing"); }

Mat2 du_sing(const Vec2& x) {
  const double r = checked_norm(x, "du_sing");
  return Mat2::Identity() / r - outer(x, x) / (r * r * r);
}

Mat2 a_du_sing(const IntegrandParams& params, const Vec2& x) {
  const double r = checked_norm(x, "a_du_sing");
  const double p = params.p;
  return 2.0 * Mat2::Identity() / r + 2.0 * (p - 1.0) / (2.0 - p) * outer(x, x) / (r * r * r);
}

Mat2 singular_flux(const IntegrandParams& params, const Vec2& x) {
  const double r = checked_norm(x, "singular_flux");
  return std::pow(r, 2.0 - params.p) * a_du_sing(params, x);
}

namespace {

// Central-difference divergence (div F)_i = sum_k d_k F(i, k); `order` is 2 or 4.
template <typename Field>
Vec2 central_divergence(const Vec2& x, double h, int order, Field&& field) {
  const double r = checked_norm(x, "divergence");
  if (!(h > 0.0) || !(h < r / 4.0)) throw DomainError("divergence: step must satisfy 0 < h < |x|/4");
  Vec2 div = Vec2::Zero();
  for (int k = 0; k < 2; ++k) {
    Vec2 e = Vec2::Zero();
    e(k) = h;
    const Mat2 d1 = field(Vec2(x + e)) - field(Vec2(x - e));
    if (order == 2) {
      div += d1.col(k) / (2.0 * h);
    } else {
      const Mat2 d2 = field(Vec2(x + 2.0 * e)) - field(Vec2(x - 2.0 * e));
      div += (8.0 * d1.col(k) - d2.col(k)) / (12.0 * h);
    }
  }
  return div;
}

}  // namespace

Vec2 strong_divergence_residual(const IntegrandParams& params, const Vec2& x, double h) {
  return central_divergence(x, h, 2, [&](const Vec2& y) { return singular_flux(params, y); });
}

Vec2 radial_tensor_divergence(const Vec2& x, double h) {
  return central_divergence(x, h, 4, [](const Vec2& y) {
    const double r = y.norm();
    return Mat2(outer(y, y) / (r * r * r));
  });
}

double w1p_seminorm_sing(double p) {
  if (!(p > 1.0)) throw DomainError("w1p_seminorm_sing: p must exceed 1");
  if (!(p < 2.0)) throw DomainError("w1p_seminorm_sing: the integral diverges for p >= 2");
  return 2.0 * std::numbers::pi / (2.0 - p);
}

PHarmonicParts p_harmonic_parts(double p, const TestFunction& phi, const DiskRule& rule) {
  if (!(p > 1.0)) throw DomainError("p_harmonic_parts: p must exceed 1");
  PHarmonicParts out;
  if (phi.amplitude == 0.0) return out;
  // |Du| = 1/|x|
  if (phi.kind == TestKind::PiecewiseHat) {
    out.lhs = integrate_hat(phi, [&](const Vec2& x, const Vec2&, const Mat2& dphi) {
      return std::pow(x.norm(), 2.0 - p) * dot(du_sing(x), dphi);
    });
    out.rhs = integrate_hat(phi, [&](const Vec2& x, const Vec2& v, const Mat2&) {
      return std::pow(x.norm(), -p) * u_sing(x).dot(v);
    });
    return out;
  }
  out.lhs = integrate(rule, [&](const Vec2& x) { return std::pow(x.norm(), 2.0 - p) * dot(du_sing(x), phi.grad(x)); });
  out.rhs = integrate(rule, [&](const Vec2& x) { return std::pow(x.norm(), -p) * u_sing(x).dot(phi.value(x)); });
  return out;
}

double p_harmonic_residual(double p, const TestFunction& phi, const DiskRule& rule) {
  const PHarmonicParts parts = p_harmonic_parts(p, phi, rule);
  return parts.lhs - parts.rhs;
}

const DiskRule& default_singular_rule() {
  static const DiskRule rule = build_rule(800, 32, 4.0);
  return rule;
}

double p_harmonic_residual(double p, const TestFunction& phi) {
  return p_harmonic_residual(p, phi, default_singular_rule());
}

}  // namespace singell
