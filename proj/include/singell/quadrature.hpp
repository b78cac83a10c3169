#pragma once

// Graded polar quadrature on the unit disk, test functions vanishing on the
// boundary, and weak-form residuals of the singular map x/|x|.

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "singell/integrand.hpp"
#include "singell/tensor.hpp"

namespace singell {

/// Tensor rule in (r, theta). Radial cells [r_{k-1}, r_k] with r_k = (k/n_r)^grading,
/// `gauss_order` Gauss-Legendre points per cell, n_theta equispaced angles at
/// half-offsets. Weights carry the Jacobian r; they sum to pi * radius^2.
struct DiskRule {
  std::vector<Vec2> nodes;
  std::vector<double> weights;
  double grading = 1.0;
  int n_r = 0;
  int n_theta = 0;
  int gauss_order = 0;
  Vec2 center = Vec2::Zero();
  double radius = 1.0;

  std::size_t size() const { return nodes.size(); }
};

/// Throws UsageError for n_r < 2, n_theta < 2, grading < 1 or gauss_order outside [1, 10].
DiskRule build_rule(int n_r, int n_theta, double grading, int gauss_order = 5);

/// The rule mapped onto the ball B_radius(center).
DiskRule scaled_rule(const DiskRule& unit, const Vec2& center, double radius);

/// sum_k w_k f(x_k) with pairwise summation in node order.
double integrate(const DiskRule& rule, const std::function<double(const Vec2&)>& f);

/// CSV with header "x,y,weight", 17 significant digits.
void write_rule_csv(std::ostream& out, const DiskRule& rule);
/// Reads nodes and weights back; metadata fields are left at defaults. Throws InputError.
DiskRule read_rule_csv(std::istream& in);

enum class TestKind { RadialBump, AngularMode, PiecewiseHat };

std::string to_string(TestKind kind);

/// Vector-valued test function phi in W_0^{1,p} cap L^inf on the unit disk.
///
/// Radial/angular kinds: phi(x) = psi(|x|) Re((x_1 + i x_2)^mode) e_component, where psi
/// is a smooth bump on (inner, outer); inner = 0 means the support covers the origin.
/// PiecewiseHat: P1 pyramid over the regular hexagon of circumradius `outer` at `center`.
struct TestFunction {
  TestKind kind = TestKind::RadialBump;
  double inner = 0.0;
  double outer = 0.5;
  int mode = 0;
  int component = 0;
  Vec2 center = Vec2::Zero();
  double amplitude = 1.0;

  Vec2 value(const Vec2& x) const;
  Mat2 grad(const Vec2& x) const;
  bool covers_origin() const;
  std::string label() const;

  static TestFunction zero();
  static TestFunction bump(double inner, double outer, int mode, int component);
  static TestFunction hat(const Vec2& center, double radius, int component);
};

/// The default family: 12 radial profiles x {cover origin, avoid origin} x modes {0,1,2}
/// x components {0,1}.
std::vector<TestFunction> default_test_family();

using HatIntegrand = std::function<double(const Vec2& x, const Vec2& phi, const Mat2& dphi)>;

/// int_B F(x, phi(x), D phi(x)) dx for a PiecewiseHat, face by face (D phi is constant
/// on each of the six faces) with rules graded toward the origin. F may be singular
/// like |x|^{-p}, p < 2, at the origin. Throws UsageError for other kinds.
double integrate_hat(const TestFunction& phi, const HatIntegrand& f);

/// max over rule nodes of |D phi|.
double grad_sup_norm(const TestFunction& phi, const DiskRule& rule);

/// Quadrature of int_B a(u, Du) . D phi dx with u = x/|x|. Hats are integrated face by
/// face with rules graded toward the origin instead of `rule`, since D phi jumps across faces.
double weak_residual(const IntegrandParams& params, const DiskRule& rule, const TestFunction& phi);

/// Quadrature of int_B D_z f(x, Du) . D phi dx with u = x/|x|; hats as above.
double weak_residual_el(const IntegrandParams& params, const DiskRule& rule, const TestFunction& phi);

/// Ratio D_z f(x, Du)/a(u, Du) along the singular map: p m_g (g and g' vanish there).
double el_to_coeff_factor(const IntegrandParams& params);

}  // namespace singell
