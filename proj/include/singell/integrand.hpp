#pragma once

// The convex integrand f(x, z) = (g(|z|^2) + m_g A(x/|x|)(z, z))^{p/2}, the
// u-dependent coefficients a(u, z) = (g(|z|^2) + m_g A(u)(z, z))^{(p-2)/2} A(u) z,
// and their closed-form derivatives.

#include <array>
#include <iosfwd>
#include <string>

#include "singell/tensor.hpp"

namespace singell {

/// Smooth symmetric bump g(s) = exp(1 - 1/(1 - s^2)) on (-1, 1), zero elsewhere.
struct Cutoff {
  double value(double s) const;
  double d1(double s) const;
  double d2(double s) const;
  std::string name() const { return "exp(1-1/(1-s^2)) on |s|<1, 0 otherwise"; }
};

/// One instance of the construction: exponent p in (1, 2), cutoff g and m_g.
struct IntegrandParams {
  double p = 1.5;
  Cutoff cutoff;
  double m_g = 0.0;
  /// Scanned sup_s { |g'(s)| + 2 |g''(s)| s } used for m_g.
  double cutoff_sup = 0.0;
  double safety = 1e-3;

  /// 2p / (2 - p), the amplification factor inside A(u).
  double amplification() const { return 2.0 * p / (2.0 - p); }
};

/// Structure constants of the growth/ellipticity conditions.
struct StructureBounds {
  double nu = 0.0;
  double L = 0.0;
  double alpha = 1.0;
  double alpha1 = 1.0;
  double alpha2 = 1.0;
};

/// Dense scan of |g'(s)| + 2|g''(s)| s on `points` equispaced nodes of [-1, 1].
/// Outside [-1, 1] the expression vanishes identically.
double cutoff_sup_scan(int points = 1'000'001);

/// Builds the parameters for exponent p; m_g = (p-1)^{-1} (1 + sup) (1 + safety).
/// Throws DomainError unless 1 < p < 2.
IntegrandParams make_params(double p, double safety = 1e-3);

/// Structured-text record of the chosen cutoff, m_g and safety factor.
void write_params_fixture(std::ostream& out, const IntegrandParams& params);

/// T_u(z) = Tr(z) + 2p/(2-p) (z . u (x) u) / (1 + |u|^2).
double t_u(const IntegrandParams& params, const Vec2& u, const Mat2& z);

/// The matrix B_u = I + 2p/(2-p) u (x) u / (1 + |u|^2); T_u(z) = B_u . z.
Mat2 amplified_identity(const IntegrandParams& params, const Vec2& u);

/// A^{kappa lambda}_{ij}(u) = delta_{kappa lambda} delta_{ij} + (B_u)_{i kappa} (B_u)_{j lambda}.
Form4 bilinear_a(const IntegrandParams& params, const Vec2& u);

double integrand_f(const IntegrandParams& params, const Vec2& x, const Mat2& z);

/// D_z f(x, z) = p S^{(p-2)/2} (g'(|z|^2) z + m_g A(x/|x|) z).
Mat2 grad_f_z(const IntegrandParams& params, const Vec2& x, const Mat2& z);

/// grad_f_z / p: the flux appearing in the Euler-Lagrange system.
Mat2 flux(const IntegrandParams& params, const Vec2& x, const Mat2& z);

/// D_zz f(x, z)(lambda, lambda), evaluated directly from the three-term expression.
double hess_f_zz(const IntegrandParams& params, const Vec2& x, const Mat2& z, const Mat2& lambda);

/// Full Hessian D_zz f(x, z) as a symmetric 4x4 matrix in flattened coordinates.
Mat4 hess_f_matrix(const IntegrandParams& params, const Vec2& x, const Mat2& z);

Mat2 coeff_a(const IntegrandParams& params, const Vec2& u, const Mat2& z);

/// D_z a(u, z) as a Form4: F[kappa,lambda,i,j] = d a_j^lambda / d z_i^kappa,
/// so apply_form(F, lambda) is the directional derivative. Not symmetric in general.
Form4 d_z_coeff_a(const IntegrandParams& params, const Vec2& u, const Mat2& z);

/// D_u a(u, z): entry m is d a / d u_m.
std::array<Mat2, 2> d_u_coeff_a(const IntegrandParams& params, const Vec2& u, const Mat2& z);

}  // namespace singell
