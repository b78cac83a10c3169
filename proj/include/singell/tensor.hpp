#pragma once

// Fixed-size linear algebra for the planar setting n = N = 2.
//
// Index convention: a matrix z in R^{2x2} is stored with row = component i
// and column = direction kappa, so z(i, kappa) = z_i^kappa. Flattened
// 4-vectors use index 2*i + kappa.

#include <Eigen/Dense>

#include <array>
#include <span>

namespace singell {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

constexpr int flat_index(int i, int kappa) { return 2 * i + kappa; }

Vec4 flatten(const Mat2& z);
Mat2 unflatten(const Vec4& v);

inline double frobenius(const Mat2& z) { return z.norm(); }
inline double trace(const Mat2& z) { return z(0, 0) + z(1, 1); }
/// Frobenius inner product z . zbar.
inline double dot(const Mat2& z, const Mat2& zbar) { return (z.array() * zbar.array()).sum(); }

/// outer(u, v)(i, kappa) = u_i v_kappa.
Mat2 outer(const Vec2& u, const Vec2& v);

/// Rank-4 form F[kappa, lambda, i, j] acting on 2x2 matrices.
///
/// Stored as a 4x4 matrix m with m(2i+kappa, 2j+lambda) = F[kappa, lambda, i, j];
/// the pairing F(z, zbar) is then flatten(z)^T m flatten(zbar), and the form is
/// symmetric (F[kappa,lambda,i,j] = F[lambda,kappa,j,i]) iff m is.
struct Form4 {
  Mat4 m = Mat4::Zero();

  double& operator()(int kappa, int lambda, int i, int j) {
    return m(flat_index(i, kappa), flat_index(j, lambda));
  }
  double operator()(int kappa, int lambda, int i, int j) const {
    return m(flat_index(i, kappa), flat_index(j, lambda));
  }

  static Form4 identity() { return Form4{Mat4::Identity()}; }
  bool is_symmetric(double tol = 0.0) const;
  bool all_finite() const { return m.allFinite(); }
};

/// (F z)_j^lambda = sum_{kappa,i} F[kappa,lambda,i,j] z_i^kappa.
Mat2 apply_form(const Form4& form, const Mat2& z);

/// apply_form(F, z) . zbar.
double form_pair(const Form4& form, const Mat2& z, const Mat2& zbar);

/// V(xi) = (1 + |xi|^2)^{(p-2)/4} xi for xi in R^2 or R^4 (flattened matrices).
/// Throws DomainError on non-finite input or p < 1.
Vec2 v_map(const Vec2& xi, double p);
Vec4 v_map(const Vec4& xi, double p);
Mat2 v_map(const Mat2& xi, double p);

/// Pairwise (cascade) summation in index order; result is independent of
/// how the terms were produced.
double pairwise_sum(std::span<const double> terms);

}  // namespace singell
