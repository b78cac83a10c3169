#include "singell/tensor.hpp"

#include <cmath>

#include "singell/errors.hpp"

namespace singell {

Vec4 flatten(const Mat2& z) {
  Vec4 v;
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) v(flat_index(i, k)) = z(i, k);
  return v;
}

Mat2 unflatten(const Vec4& v) {
  Mat2 z;
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 2; ++k) z(i, k) = v(flat_index(i, k));
  return z;
}

Mat2 outer(const Vec2& u, const Vec2& v) { return u * v.transpose(); }

bool Form4::is_symmetric(double tol) const {
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol;
}

Mat2 apply_form(const Form4& form, const Mat2& z) {
  return unflatten(form.m.transpose() * flatten(z));
}

double form_pair(const Form4& form, const Mat2& z, const Mat2& zbar) {
  return flatten(z).dot(form.m * flatten(zbar));
}

namespace {

template <typename V>
V v_map_impl(const V& xi, double p) {
  if (!std::isfinite(p) || p < 1.0) throw DomainError("v_map: exponent p must be >= 1");
  if (!xi.allFinite()) throw DomainError("v_map: non-finite argument");
  return std::pow(1.0 + xi.squaredNorm(), (p - 2.0) / 4.0) * xi;
}

}  // namespace

Vec2 v_map(const Vec2& xi, double p) { return v_map_impl(xi, p); }
Vec4 v_map(const Vec4& xi, double p) { return v_map_impl(xi, p); }
Mat2 v_map(const Mat2& xi, double p) { return v_map_impl(xi, p); }

double pairwise_sum(std::span<const double> terms) {
  constexpr std::size_t kBlock = 64;
  if (terms.size() <= kBlock) {
    double s = 0.0;
    for (double t : terms) s += t;
    return s;
  }
  const std::size_t half = terms.size() / 2;
  return pairwise_sum(terms.first(half)) + pairwise_sum(terms.subspan(half));
}

}  // namespace singell
