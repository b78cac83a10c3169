#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "singell/errors.hpp"
#include "singell/quadrature.hpp"
#include "singell/singular_map.hpp"
#include "test_support.hpp"

using namespace singell;
using namespace testing;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("u_sing") {
  CHECK(u_sing(Vec2(0.5, 0)) == Vec2(1, 0));
  CHECK((u_sing(Vec2(3, 4)) - Vec2(0.6, 0.8)).norm() <= 1e-16);
  Rng rng(1);
  for (int k = 0; k < 10000; ++k) CHECK_THAT(u_sing(random_vec(rng, 5.0)).norm(), WithinRel(1.0, 1e-15));
  CHECK_THROWS_AS(u_sing(Vec2::Zero()), DomainError);
}

TEST_CASE("du_sing closed form") {
  CHECK((du_sing(Vec2(1, 0)) - (Mat2() << 0, 0, 0, 1).finished()).norm() <= 1e-16);
  CHECK_THROWS_AS(du_sing(Vec2::Zero()), DomainError);
  Rng rng(2);
  double worst_fd = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const Vec2 x = random_vec(rng, 1.0);
    const Mat2 d = du_sing(x);
    CHECK_THAT(frobenius(d), WithinRel(1.0 / x.norm(), 1e-12));
    CHECK_THAT(trace(d), WithinRel(1.0 / x.norm(), 1e-12));
    CHECK((d * x).norm() <= 1e-12 * d.norm() * x.norm());                   // x in the kernel
    CHECK((u_sing(x).transpose() * d).norm() <= 1e-12 * d.norm());           // columns orthogonal to u
    if (x.norm() >= 0.05 && k % 10 == 0) {
      const double h = 1e-6 * x.norm();
      Mat2 fd;
      for (int c = 0; c < 2; ++c) {
        Vec2 e = Vec2::Zero();
        e(c) = h;
        fd.col(c) = (u_sing(x + e) - u_sing(x - e)) / (2 * h);
      }
      worst_fd = std::max(worst_fd, rel_err(fd, d));
    }
  }
  CHECK(worst_fd <= 1e-6);
}

TEST_CASE("A(x/|x|) Du closed form") {
  const auto params = make_params(1.5);
  CHECK((a_du_sing(params, Vec2(1, 0)) - (Mat2() << 4, 0, 0, 2).finished()).norm() <= 1e-14);
  Rng rng(3);
  for (double p : {1.2, 1.5, 1.8, 1.95}) {
    const auto pp = make_params(p);
    for (int k = 0; k < 2000; ++k) {
      const Vec2 x = random_vec(rng, 1.0);
      const Form4 a = bilinear_a(pp, u_sing(x));
      CHECK(rel_err(a_du_sing(pp, x), apply_form(a, du_sing(x))) <= 1e-12);
      CHECK_THAT(form_pair(a, du_sing(x), du_sing(x)), WithinRel(2.0 / x.squaredNorm(), 1e-12));
      const double s = du_sing(x).squaredNorm();
      CHECK(pp.cutoff.value(s) == 0.0);
      CHECK(pp.cutoff.d1(s) == 0.0);
    }
  }
}

TEST_CASE("strong divergence residual") {
  const auto params = make_params(1.5);
  const Vec2 x(0.5, 0.3);
  const Vec2 r = strong_divergence_residual(params, x, 1e-4);
  CHECK(r.norm() <= 1e-5 * frobenius(singular_flux(params, x)) / x.norm());

  // second order: halving h divides the residual by about 4
  Rng rng(4);
  for (int k = 0; k < 50; ++k) {
    Vec2 y = random_vec(rng, 1.0);
    if (y.norm() < 0.2) continue;
    double last = INFINITY;
    for (double h : {0.04, 0.02, 0.01, 0.005}) {
      const double res = strong_divergence_residual(params, y, h * y.norm()).norm();
      CHECK(res <= last);
      last = res;
    }
  }
  const double r1 = strong_divergence_residual(params, x, 0.02).norm();
  const double r2 = strong_divergence_residual(params, x, 0.01).norm();
  CHECK_THAT(r1 / r2, WithinAbs(4.0, 0.1));

  CHECK_THROWS_AS(strong_divergence_residual(params, x, x.norm() / 4), DomainError);
  CHECK_THROWS_AS(strong_divergence_residual(params, x, 0.0), DomainError);
  CHECK_THROWS_AS(strong_divergence_residual(params, Vec2::Zero(), 1e-4), DomainError);
}

TEST_CASE("auxiliary identity div(|x|^-3 x (x) x) = 0") {
  Rng rng(5);
  for (int k = 0; k < 1000; ++k) {
    const Vec2 x = std::max(0.3, rng.uniform(0.3, 1.0)) * random_unit(rng);
    CHECK(radial_tensor_divergence(x, 1e-5).norm() <= 1e-8);
  }
}

TEST_CASE("flux integrability bound") {
  Rng rng(6);
  for (double p : {1.2, 1.5, 1.8}) {
    const auto params = make_params(p);
    double c = 0.0;
    for (int k = 0; k < 1000; ++k) {
      const double r = std::pow(10.0, -rng.uniform(0.0, 8.0));
      const Vec2 x = r * random_unit(rng);
      c = std::max(c, frobenius(singular_flux(params, x)) * std::pow(r, p - 1));
    }
    // |Phi| r^{p-1} = |A Du| r is a constant of p only
    CHECK_THAT(c, WithinRel(frobenius(a_du_sing(params, Vec2(1, 0))), 1e-12));
  }
}

TEST_CASE("W^{1,p} seminorm of x/|x|") {
  CHECK_THAT(w1p_seminorm_sing(1.5), WithinRel(4 * std::numbers::pi, 1e-15));
  double last = 0.0;
  for (double p = 1.01; p < 1.999; p += 0.01) {
    CHECK(w1p_seminorm_sing(p) > last);
    last = w1p_seminorm_sing(p);
  }
  CHECK_THROWS_AS(w1p_seminorm_sing(2.0), DomainError);
  CHECK_THROWS_AS(w1p_seminorm_sing(1.0), DomainError);
  const double quad = integrate(default_singular_rule(), [](const Vec2& x) { return std::pow(frobenius(du_sing(x)), 1.5); });
  CHECK_THAT(quad, WithinRel(w1p_seminorm_sing(1.5), 1e-6));
}

TEST_CASE("p-harmonic identity for sphere-valued x/|x|") {
  CHECK(p_harmonic_residual(1.5, TestFunction::zero()) == 0.0);
  auto bound = [](const PHarmonicParts& parts) { return 1e-6 * (std::abs(parts.lhs) + std::abs(parts.rhs) + 1.0); };
  for (int c = 0; c < 2; ++c) {
    const auto phi = TestFunction::bump(0.0, 0.7, 0, c);
    const auto parts = p_harmonic_parts(1.5, phi, default_singular_rule());
    CHECK(std::abs(parts.lhs - parts.rhs) <= bound(parts));
    CHECK(p_harmonic_residual(1.5, phi) == parts.lhs - parts.rhs);
  }
  const auto family = default_test_family();
  Rng rng(8);
  for (int k = 0; k < 20; ++k) {
    const auto& phi = family[static_cast<std::size_t>(rng.uniform() * family.size())];
    const double p = rng.uniform(1.1, 1.9);
    const auto parts = p_harmonic_parts(p, phi, default_singular_rule());
    CHECK(std::abs(parts.lhs - parts.rhs) <= bound(parts));
  }
}
