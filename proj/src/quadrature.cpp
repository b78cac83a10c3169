#include "singell/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "singell/errors.hpp"
#include "singell/parallel.hpp"
#include "singell/singular_map.hpp"

namespace singell {

namespace {

struct Gauss1d {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;  // sum to 2
};

template <unsigned N>
Gauss1d gauss_legendre() {
  using G = boost::math::quadrature::gauss<double, N>;
  const auto& x = G::abscissa();
  const auto& w = G::weights();
  Gauss1d out;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (x[k] == 0.0) {
      out.nodes.push_back(0.0);
      out.weights.push_back(w[k]);
    } else {
      out.nodes.push_back(-x[k]);
      out.weights.push_back(w[k]);
      out.nodes.push_back(x[k]);
      out.weights.push_back(w[k]);
    }
  }
  return out;
}

Gauss1d gauss_legendre(int order) {
  switch (order) {
    case 1: return {{0.0}, {2.0}};
    case 2: return gauss_legendre<2>();
    case 3: return gauss_legendre<3>();
    case 4: return gauss_legendre<4>();
    case 5: return gauss_legendre<5>();
    case 6: return gauss_legendre<6>();
    case 7: return gauss_legendre<7>();
    case 8: return gauss_legendre<8>();
    case 9: return gauss_legendre<9>();
    case 10: return gauss_legendre<10>();
    default: throw UsageError("build_rule: gauss_order must lie in [1, 10]");
  }
}

}  // namespace

DiskRule build_rule(int n_r, int n_theta, double grading, int gauss_order) {
  if (n_r < 2 || n_theta < 2) throw UsageError("build_rule: n_r and n_theta must be >= 2");
  if (!(grading >= 1.0) || !std::isfinite(grading)) throw UsageError("build_rule: grading must be >= 1");
  const Gauss1d g = gauss_legendre(gauss_order);

  DiskRule rule;
  rule.grading = grading;
  rule.n_r = n_r;
  rule.n_theta = n_theta;
  rule.gauss_order = gauss_order;
  rule.nodes.reserve(static_cast<std::size_t>(n_r) * g.nodes.size() * n_theta);
  rule.weights.reserve(rule.nodes.capacity());

  const double dtheta = 2.0 * std::numbers::pi / n_theta;
  for (int k = 1; k <= n_r; ++k) {
    const double r0 = std::pow(static_cast<double>(k - 1) / n_r, grading);
    const double r1 = std::pow(static_cast<double>(k) / n_r, grading);
    const double half = 0.5 * (r1 - r0);
    const double mid = 0.5 * (r1 + r0);
    for (std::size_t q = 0; q < g.nodes.size(); ++q) {
      const double r = mid + half * g.nodes[q];
      const double wr = half * g.weights[q] * r;
      for (int j = 0; j < n_theta; ++j) {
        const double theta = (j + 0.5) * dtheta;
        rule.nodes.emplace_back(r * std::cos(theta), r * std::sin(theta));
        rule.weights.push_back(wr * dtheta);
      }
    }
  }
  return rule;
}

DiskRule scaled_rule(const DiskRule& unit, const Vec2& center, double radius) {
  if (!(radius > 0.0)) throw UsageError("scaled_rule: radius must be positive");
  DiskRule out = unit;
  out.center = center;
  out.radius = radius;
  for (std::size_t k = 0; k < out.size(); ++k) {
    out.nodes[k] = center + radius * unit.nodes[k];
    out.weights[k] = radius * radius * unit.weights[k];
  }
  return out;
}

double integrate(const DiskRule& rule, const std::function<double(const Vec2&)>& f) {
  std::vector<double> terms(rule.size());
  parallel_for(rule.size(), [&](std::size_t k) { terms[k] = rule.weights[k] * f(rule.nodes[k]); });
  return pairwise_sum(terms);
}

void write_rule_csv(std::ostream& out, const DiskRule& rule) {
  const auto old = out.precision(17);
  out << "x,y,weight\n";
  for (std::size_t k = 0; k < rule.size(); ++k)
    out << rule.nodes[k](0) << ',' << rule.nodes[k](1) << ',' << rule.weights[k] << '\n';
  out.precision(old);
}

DiskRule read_rule_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "x,y,weight") throw InputError("rule csv: missing header");
  DiskRule rule;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    double x, y, w;
    char c1, c2;
    if (!(row >> x >> c1 >> y >> c2 >> w) || c1 != ',' || c2 != ',')
      throw InputError("rule csv: malformed line " + std::to_string(lineno));
    rule.nodes.emplace_back(x, y);
    rule.weights.push_back(w);
  }
  return rule;
}

std::string to_string(TestKind kind) {
  switch (kind) {
    case TestKind::RadialBump: return "radial-bump";
    case TestKind::AngularMode: return "angular-mode";
    case TestKind::PiecewiseHat: return "piecewise-hat";
  }
  return "unknown";
}

namespace {

// psi and psi'(r)/r for the radial profile; the quotient is formed without
// dividing by r so origin-covering bumps stay regular at small r.
struct Profile {
  double psi = 0.0;
  double dpsi_over_r = 0.0;
};

Profile radial_profile(double inner, double outer, double r) {
  Profile out;
  if (inner == 0.0) {
    const double s = r / outer;
    if (s >= 1.0) return out;
    const double h = 1.0 / (1.0 - s * s);
    out.psi = std::exp(1.0 - h);
    out.dpsi_over_r = -2.0 * h * h * out.psi / (outer * outer);
    return out;
  }
  if (r <= inner || r >= outer) return out;
  const double t = (2.0 * r - inner - outer) / (outer - inner);
  const double h = 1.0 / (1.0 - t * t);
  out.psi = std::exp(1.0 - h);
  const double dpsi = -2.0 * t * h * h * out.psi * 2.0 / (outer - inner);
  out.dpsi_over_r = dpsi / r;
  return out;
}

double angular_factor(int mode, const Vec2& x) {
  switch (mode) {
    case 0: return 1.0;
    case 1: return x(0);
    case 2: return x(0) * x(0) - x(1) * x(1);
    default: throw UsageError("TestFunction: mode must be 0, 1 or 2");
  }
}

Vec2 angular_grad(int mode, const Vec2& x) {
  switch (mode) {
    case 0: return Vec2::Zero();
    case 1: return Vec2(1.0, 0.0);
    case 2: return Vec2(2.0 * x(0), -2.0 * x(1));
    default: throw UsageError("TestFunction: mode must be 0, 1 or 2");
  }
}

constexpr double kApothemFactor = 0.86602540378443864676;  // cos(pi/6)

// Index of the active hexagon face (largest n_k . d) and its value.
std::pair<int, double> hex_face(const Vec2& d) {
  int best = 0;
  double best_val = -1e300;
  for (int k = 0; k < 6; ++k) {
    const double a = std::numbers::pi / 6.0 + k * std::numbers::pi / 3.0;
    const double v = std::cos(a) * d(0) + std::sin(a) * d(1);
    if (v > best_val) {
      best_val = v;
      best = k;
    }
  }
  return {best, best_val};
}

}  // namespace

Vec2 TestFunction::value(const Vec2& x) const {
  Vec2 e = Vec2::Zero();
  e(component) = amplitude;
  if (kind == TestKind::PiecewiseHat) {
    const double apothem = outer * kApothemFactor;
    const double v = 1.0 - hex_face(x - center).second / apothem;
    return v > 0.0 ? Vec2(v * e) : Vec2(Vec2::Zero());
  }
  const Profile prof = radial_profile(inner, outer, x.norm());
  return prof.psi * angular_factor(mode, x) * e;
}

Mat2 TestFunction::grad(const Vec2& x) const {
  Mat2 out = Mat2::Zero();
  if (kind == TestKind::PiecewiseHat) {
    const double apothem = outer * kApothemFactor;
    const auto [face, val] = hex_face(x - center);
    if (1.0 - val / apothem <= 0.0) return out;
    const double a = std::numbers::pi / 6.0 + face * std::numbers::pi / 3.0;
    out.row(component) = -amplitude / apothem * Vec2(std::cos(a), std::sin(a)).transpose();
    return out;
  }
  const Profile prof = radial_profile(inner, outer, x.norm());
  const Vec2 d = prof.dpsi_over_r * angular_factor(mode, x) * x + prof.psi * angular_grad(mode, x);
  out.row(component) = amplitude * d.transpose();
  return out;
}

bool TestFunction::covers_origin() const {
  if (amplitude == 0.0) return false;
  if (kind == TestKind::PiecewiseHat) return center.norm() < outer * kApothemFactor;
  return inner == 0.0;
}

std::string TestFunction::label() const {
  std::ostringstream s;
  s << to_string(kind);
  if (kind == TestKind::PiecewiseHat)
    s << "[c=(" << center(0) << ';' << center(1) << ") rho=" << outer;
  else
    s << "[r=" << inner << ".." << outer << " m=" << mode;
  s << " comp=" << component << ']';
  return s.str();
}

TestFunction TestFunction::zero() {
  TestFunction phi;
  phi.amplitude = 0.0;
  return phi;
}

TestFunction TestFunction::bump(double inner, double outer, int mode, int component) {
  if (!(inner >= 0.0 && outer > inner && outer <= 1.0)) throw UsageError("bump: need 0 <= inner < outer <= 1");
  if (mode < 0 || mode > 2) throw UsageError("bump: mode must be 0, 1 or 2");
  if (component < 0 || component > 1) throw UsageError("bump: component must be 0 or 1");
  TestFunction phi;
  phi.kind = mode == 0 ? TestKind::RadialBump : TestKind::AngularMode;
  phi.inner = inner;
  phi.outer = outer;
  phi.mode = mode;
  phi.component = component;
  return phi;
}

TestFunction TestFunction::hat(const Vec2& center, double radius, int component) {
  if (!(radius > 0.0) || center.norm() + radius > 1.0) throw UsageError("hat: support must lie in the unit disk");
  if (component < 0 || component > 1) throw UsageError("hat: component must be 0 or 1");
  TestFunction phi;
  phi.kind = TestKind::PiecewiseHat;
  phi.center = center;
  phi.outer = radius;
  phi.component = component;
  return phi;
}

std::vector<TestFunction> default_test_family() {
  std::vector<TestFunction> family;
  for (int k = 0; k < 12; ++k) {
    const double cover = 0.3 + 0.05 * k;
    const double inner = 0.1 + 0.04 * k;
    for (int mode = 0; mode <= 2; ++mode)
      for (int c = 0; c < 2; ++c) {
        family.push_back(TestFunction::bump(0.0, cover, mode, c));
        family.push_back(TestFunction::bump(inner, inner + 0.3, mode, c));
      }
  }
  return family;
}

double grad_sup_norm(const TestFunction& phi, const DiskRule& rule) {
  double sup = 0.0;
  for (const Vec2& x : rule.nodes) sup = std::max(sup, frobenius(phi.grad(x)));
  return sup;
}

namespace {

// int over the triangle (0, b, c) of f, signed by its orientation. Duffy map
// x = s((1-t) b + t c), dx = s det(b, c) ds dt, with s = sigma^4 graded toward the apex
// and t graded toward the point of [b, c] nearest the origin.
double apex_triangle_integral(const std::function<double(const Vec2&)>& f, const Vec2& b, const Vec2& c) {
  const double det = b(0) * c(1) - b(1) * c(0);
  if (det == 0.0) return 0.0;
  constexpr int kPanels = 8;
  constexpr double kGrading = 4.0;
  static const Gauss1d g = gauss_legendre(10);

  // graded nodes on [0, 1] clustered at 0: (position, weight)
  static const std::vector<std::pair<double, double>> graded = [] {
    std::vector<std::pair<double, double>> out;
    for (int panel = 0; panel < kPanels; ++panel)
      for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const double sigma = (panel + 0.5 * (g.nodes[i] + 1.0)) / kPanels;
        out.emplace_back(std::pow(sigma, kGrading),
                         0.5 * g.weights[i] / kPanels * kGrading * std::pow(sigma, kGrading - 1.0));
      }
    return out;
  }();

  const Vec2 edge = c - b;
  const double t_star = std::clamp(-b.dot(edge) / edge.squaredNorm(), 0.0, 1.0);
  std::vector<std::pair<double, double>> t_nodes;
  for (const auto& [x, w] : graded) {
    if (t_star > 0.0) t_nodes.emplace_back(t_star - t_star * x, t_star * w);
    if (t_star < 1.0) t_nodes.emplace_back(t_star + (1.0 - t_star) * x, (1.0 - t_star) * w);
  }

  std::vector<double> terms;
  terms.reserve(graded.size() * t_nodes.size());
  for (const auto& [s, ws] : graded)
    for (const auto& [t, wt] : t_nodes) terms.push_back(ws * wt * s * det * f(s * ((1.0 - t) * b + t * c)));
  return pairwise_sum(terms);
}

}  // namespace

double integrate_hat(const TestFunction& phi, const HatIntegrand& f) {
  if (phi.kind != TestKind::PiecewiseHat) throw UsageError("integrate_hat: not a piecewise hat");
  const double apothem = phi.outer * kApothemFactor;
  std::vector<double> faces;
  for (int k = 0; k < 6; ++k) {
    const double a0 = k * std::numbers::pi / 3.0;
    const double a1 = (k + 1) * std::numbers::pi / 3.0;
    const Vec2 v0 = phi.center + phi.outer * Vec2(std::cos(a0), std::sin(a0));
    const Vec2 v1 = phi.center + phi.outer * Vec2(std::cos(a1), std::sin(a1));
    const double angle = std::numbers::pi / 6.0 + k * std::numbers::pi / 3.0;
    const Vec2 normal(std::cos(angle), std::sin(angle));
    Vec2 e = Vec2::Zero();
    e(phi.component) = phi.amplitude;
    Mat2 dphi = Mat2::Zero();
    dphi.row(phi.component) = -phi.amplitude / apothem * normal.transpose();
    // the face's affine extension, also used outside the face by the signed decomposition
    const auto g = [&](const Vec2& x) { return f(x, Vec2((1.0 - normal.dot(x - phi.center) / apothem) * e), dphi); };
    faces.push_back(apex_triangle_integral(g, phi.center, v0) + apex_triangle_integral(g, v0, v1) +
                    apex_triangle_integral(g, v1, phi.center));
  }
  return pairwise_sum(faces);
}

double weak_residual(const IntegrandParams& params, const DiskRule& rule, const TestFunction& phi) {
  if (phi.amplitude == 0.0) return 0.0;
  if (phi.kind == TestKind::PiecewiseHat)
    return integrate_hat(phi, [&](const Vec2& x, const Vec2&, const Mat2& dphi) {
      return dot(coeff_a(params, u_sing(x), du_sing(x)), dphi);
    });
  return integrate(rule, [&](const Vec2& x) {
    const Mat2 dphi = phi.grad(x);
    if (dphi.isZero(0.0)) return 0.0;
    return dot(coeff_a(params, u_sing(x), du_sing(x)), dphi);
  });
}

double weak_residual_el(const IntegrandParams& params, const DiskRule& rule, const TestFunction& phi) {
  if (phi.amplitude == 0.0) return 0.0;
  if (phi.kind == TestKind::PiecewiseHat)
    return integrate_hat(phi, [&](const Vec2& x, const Vec2&, const Mat2& dphi) {
      return dot(grad_f_z(params, x, du_sing(x)), dphi);
    });
  return integrate(rule, [&](const Vec2& x) {
    const Mat2 dphi = phi.grad(x);
    if (dphi.isZero(0.0)) return 0.0;
    return dot(grad_f_z(params, x, du_sing(x)), dphi);
  });
}

double el_to_coeff_factor(const IntegrandParams& params) { return params.p * params.m_g; }

}  // namespace singell
