#pragma once

// Closed forms for the singular map u(x) = x/|x| on the punctured unit disk.

#include "singell/integrand.hpp"
#include "singell/quadrature.hpp"
#include "singell/tensor.hpp"

namespace singell {

/// x/|x|. Throws DomainError at x = 0.
Vec2 u_sing(const Vec2& x);

/// Du(x) = I/|x| - x (x) x / |x|^3; |Du| = Tr(Du) = 1/|x|.
Mat2 du_sing(const Vec2& x);

/// A(x/|x|) Du(x) = 2 I/|x| + 2(p-1)/(2-p) x (x) x / |x|^3.
Mat2 a_du_sing(const IntegrandParams& params, const Vec2& x);

/// Phi(x) = |x|^{2-p} A(x/|x|) Du(x): the Euler-Lagrange flux along u up to the
/// constant 2^{(p-2)/2} m_g^{p/2}.
Mat2 singular_flux(const IntegrandParams& params, const Vec2& x);

/// Central-difference divergence (div Phi)_i = sum_kappa d_kappa Phi(i, kappa) at x.
/// Requires 0 < h < |x|/4, otherwise DomainError.
Vec2 strong_divergence_residual(const IntegrandParams& params, const Vec2& x, double h);

/// Fourth-order central-difference divergence of |x|^{-3} x (x) x, which vanishes
/// identically in 2D. Same step restriction as above.
Vec2 radial_tensor_divergence(const Vec2& x, double h);

/// int_B |Du|^p dx = 2 pi / (2 - p). Throws DomainError for p >= 2 (divergent) or p <= 1.
double w1p_seminorm_sing(double p);

struct PHarmonicParts {
  double lhs = 0.0;  // int_B |Du|^{p-2} Du . D phi dx
  double rhs = 0.0;  // int_B |Du|^p u . phi dx
};
/// Hats ignore `rule` and use integrate_hat.
PHarmonicParts p_harmonic_parts(double p, const TestFunction& phi, const DiskRule& rule);

/// int_B |Du|^{p-2} Du . D phi dx - int_B |Du|^p u . phi dx by quadrature.
double p_harmonic_residual(double p, const TestFunction& phi, const DiskRule& rule);
double p_harmonic_residual(double p, const TestFunction& phi);

/// Default rule for origin-covering integrands: grading 4, n_r = 800, n_theta = 32.
const DiskRule& default_singular_rule();

}  // namespace singell
