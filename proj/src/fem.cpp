#include "singell/fem.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "singell/errors.hpp"
#include "singell/parallel.hpp"
#include "singell/singular_map.hpp"

namespace singell {

namespace {

constexpr double kMajor = 2.0 / 3.0;
constexpr double kMinor = 1.0 / 6.0;

using Triplet = Eigen::Triplet<double>;

// Barycentric weight of vertex v at quadrature point q.
// Relative energy changes below this are round-off.
constexpr double kEnergyFloor = 1e-12;

double bary(int q, int v) { return q == v ? kMajor : kMinor; }

}  // namespace

DofMap::DofMap(const DiskMesh& mesh) : node_to_free(mesh.node_count(), -1) {
  for (std::size_t k = 0; k < mesh.node_count(); ++k)
    if (!mesh.boundary[k]) node_to_free[k] = free_nodes++;
}

std::vector<ElementData> element_data(const DiskMesh& mesh) {
  std::vector<ElementData> out(mesh.triangle_count());
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    ElementData& e = out[t];
    e.area = mesh.area(t);
    for (int v = 0; v < 3; ++v) {
      const Vec2& pj = mesh.nodes[tri[(v + 1) % 3]];
      const Vec2& pk = mesh.nodes[tri[(v + 2) % 3]];
      e.grad_basis[v] = Vec2(pj(1) - pk(1), pk(0) - pj(0)) / (2.0 * e.area);
    }
    for (int q = 0; q < 3; ++q) {
      Vec2 x = Vec2::Zero();
      for (int v = 0; v < 3; ++v) x += bary(q, v) * mesh.nodes[tri[v]];
      if (x.squaredNorm() == 0.0) throw std::logic_error("element_data: quadrature point at the origin");
      e.quad_points[q] = x;
    }
  }
  return out;
}

Mat2 element_gradient(const DiskMesh& mesh, const ElementData& e, std::size_t t, const DiscreteField& w) {
  Mat2 z = Mat2::Zero();
  for (int v = 0; v < 3; ++v) z += outer(w.values[mesh.triangles[t][v]], e.grad_basis[v]);
  return z;
}

DiscreteField interpolate_singular(const DiskMesh& mesh) {
  DiscreteField w;
  w.values.reserve(mesh.node_count());
  for (const Vec2& x : mesh.nodes) w.values.push_back(x.squaredNorm() == 0.0 ? Vec2(Vec2::Zero()) : u_sing(x));
  return w;
}

namespace {

void check_field(const DiskMesh& mesh, const DiscreteField& w) {
  if (w.values.size() != mesh.node_count()) throw UsageError("field size does not match the mesh");
}

}  // namespace

double energy(const IntegrandParams& params, const DiskMesh& mesh, const DiscreteField& w) {
  check_field(mesh, w);
  const auto elems = element_data(mesh);
  std::vector<double> terms(elems.size());
  parallel_for(elems.size(), [&](std::size_t t) {
    const Mat2 z = element_gradient(mesh, elems[t], t, w);
    double s = 0.0;
    for (const Vec2& x : elems[t].quad_points) s += integrand_f(params, x, z);
    terms[t] = elems[t].area * s / 3.0;
  });
  return pairwise_sum(terms);
}

Vector assemble_gradient(const IntegrandParams& params, const DiskMesh& mesh, const DiscreteField& w) {
  check_field(mesh, w);
  const DofMap dofs(mesh);
  const auto elems = element_data(mesh);
  std::vector<Mat2> local(elems.size());
  parallel_for(elems.size(), [&](std::size_t t) {
    const Mat2 z = element_gradient(mesh, elems[t], t, w);
    Mat2 g = Mat2::Zero();
    for (const Vec2& x : elems[t].quad_points) g += grad_f_z(params, x, z);
    local[t] = elems[t].area / 3.0 * g;
  });
  Vector out = Vector::Zero(dofs.dofs());
  for (std::size_t t = 0; t < elems.size(); ++t)
    for (int v = 0; v < 3; ++v) {
      const int f = dofs.node_to_free[mesh.triangles[t][v]];
      if (f < 0) continue;
      out.segment<2>(2 * f) += local[t] * elems[t].grad_basis[v];
    }
  return out;
}

namespace {

// Scatters per-element 4x4 blocks M(2i+kappa, 2j+lambda) into free-dof triplets:
// K[(a,i),(b,j)] = sum_{kappa,lambda} M(2i+kappa, 2j+lambda) dphi_a(kappa) dphi_b(lambda).
SparseMatrix scatter_blocks(const DiskMesh& mesh, const std::vector<ElementData>& elems,
                            const std::vector<Mat4>& blocks) {
  const DofMap dofs(mesh);
  std::vector<Triplet> trips;
  trips.reserve(elems.size() * 36);
  for (std::size_t t = 0; t < elems.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    for (int a = 0; a < 3; ++a) {
      const int fa = dofs.node_to_free[tri[a]];
      if (fa < 0) continue;
      for (int b = 0; b < 3; ++b) {
        const int fb = dofs.node_to_free[tri[b]];
        if (fb < 0) continue;
        const Vec2& ga = elems[t].grad_basis[a];
        const Vec2& gb = elems[t].grad_basis[b];
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) {
            double k = 0.0;
            for (int ka = 0; ka < 2; ++ka)
              for (int la = 0; la < 2; ++la) k += blocks[t](flat_index(i, ka), flat_index(j, la)) * ga(ka) * gb(la);
            trips.emplace_back(2 * fa + i, 2 * fb + j, k);
          }
      }
    }
  }
  SparseMatrix out(dofs.dofs(), dofs.dofs());
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

}  // namespace

SparseMatrix assemble_hessian(const IntegrandParams& params, const DiskMesh& mesh, const DiscreteField& w) {
  check_field(mesh, w);
  const auto elems = element_data(mesh);
  std::vector<Mat4> blocks(elems.size());
  parallel_for(elems.size(), [&](std::size_t t) {
    const Mat2 z = element_gradient(mesh, elems[t], t, w);
    Mat4 h = Mat4::Zero();
    for (const Vec2& x : elems[t].quad_points) h += hess_f_matrix(params, x, z);
    blocks[t] = elems[t].area / 3.0 * h;
  });
  return scatter_blocks(mesh, elems, blocks);
}

DiscreteField add_step(const DiskMesh& mesh, const DiscreteField& w, const Vector& step, double scale) {
  const DofMap dofs(mesh);
  if (step.size() != dofs.dofs()) throw UsageError("add_step: step size does not match the dof count");
  DiscreteField out = w;
  for (std::size_t k = 0; k < mesh.node_count(); ++k) {
    const int f = dofs.node_to_free[k];
    if (f >= 0) out.values[k] += scale * step.segment<2>(2 * f);
  }
  return out;
}

bool SolveLog::energy_non_increasing() const {
  for (std::size_t k = 1; k < entries.size(); ++k)
    if (entries[k].energy > entries[k - 1].energy + kEnergyFloor * (1.0 + std::abs(entries[k - 1].energy)))
      return false;
  return true;
}

void write_solve_log(std::ostream& out, const SolveLog& log) {
  const auto old = out.precision(17);
  out << "iter,energy,grad_norm,step,cg_iters\n";
  for (const auto& e : log.entries)
    out << e.iter << ',' << e.energy << ',' << e.grad_norm << ',' << e.step << ',' << e.cg_iters << '\n';
  out.precision(old);
}

namespace {

std::string log_text(const SolveLog& log) {
  std::ostringstream s;
  write_solve_log(s, log);
  return s.str();
}

}  // namespace

MinimizeResult minimize(const IntegrandParams& params, const DiskMesh& mesh, double tol,
                        const MinimizeOptions& options) {
  if (!(tol > 0.0)) throw UsageError("minimize: tol must be positive");
  MinimizeResult result;
  DiscreteField w = options.initial ? *options.initial : interpolate_singular(mesh);
  check_field(mesh, w);

  double e = energy(params, mesh, w);
  double step = 0.0;
  int cg_iters = 0;
  for (int it = 0;; ++it) {
    const Vector g = assemble_gradient(params, mesh, w);
    const double gn = g.norm();
    result.log.entries.push_back({it, e, gn, step, cg_iters});
    if (gn <= tol * (1.0 + std::abs(e))) {
      result.log.converged = true;
      break;
    }
    if (it >= options.max_iterations)
      throw ConvergenceError("minimize: no convergence within the iteration limit\n" + log_text(result.log));

    const SparseMatrix h = assemble_hessian(params, mesh, w);
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
    cg.setTolerance(options.cg_tolerance);
    cg.setMaxIterations(std::max<Eigen::Index>(10 * g.size(), 100));
    cg.compute(h);
    Vector d = cg.solve(-g);
    cg_iters = static_cast<int>(cg.iterations());
    double slope = g.dot(d);
    if (!d.allFinite() || !(slope < 0.0)) {
      d = -g;
      slope = -gn * gn;
    }
    double t = 1.0;
    bool accepted = false;
    const double floor = kEnergyFloor * (1.0 + std::abs(e));
    if (-slope <= floor) {
      // energy cannot certify this step; require a smaller gradient instead
      DiscreteField trial = add_step(mesh, w, d, 1.0);
      const double et = energy(params, mesh, trial);
      if (std::isfinite(et) && et <= e + floor && assemble_gradient(params, mesh, trial).norm() < gn) {
        w = std::move(trial);
        e = et;
        accepted = true;
      }
    }
    for (int halving = 0; !accepted && halving <= options.max_halvings; ++halving) {
      DiscreteField trial = add_step(mesh, w, d, t);
      const double et = energy(params, mesh, trial);
      if (std::isfinite(et) && et <= e + options.armijo_slope * t * slope) {
        w = std::move(trial);
        e = et;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted)
      throw ConvergenceError("minimize: line search failed after " + std::to_string(options.max_halvings) +
                             " halvings\n" + log_text(result.log));
    step = t;
  }
  result.field = std::move(w);
  return result;
}

namespace {

// u evaluated at quadrature point q of triangle t.
using FrozenAt = std::function<Vec2(std::size_t, int)>;

FrozenAt frozen_at(const DiskMesh& mesh, const DiscreteField& u) {
  return [&mesh, &u](std::size_t t, int q) {
    Vec2 out = Vec2::Zero();
    for (int v = 0; v < 3; ++v) out += bary(q, v) * u.values[mesh.triangles[t][v]];
    return out;
  };
}

FrozenAt frozen_at(const std::vector<ElementData>& elems, const PointField& u) {
  return [&elems, &u](std::size_t t, int q) { return u(elems[t].quad_points[q]); };
}

Vector residual_impl(const IntegrandParams& params, const DiskMesh& mesh, const std::vector<ElementData>& elems,
                     const FrozenAt& u, const DiscreteField& w) {
  const DofMap dofs(mesh);
  std::vector<Mat2> local(elems.size());
  parallel_for(elems.size(), [&](std::size_t t) {
    const Mat2 z = element_gradient(mesh, elems[t], t, w);
    Mat2 a = Mat2::Zero();
    for (int q = 0; q < 3; ++q) a += coeff_a(params, u(t, q), z);
    local[t] = elems[t].area / 3.0 * a;
  });
  Vector out = Vector::Zero(dofs.dofs());
  for (std::size_t t = 0; t < elems.size(); ++t)
    for (int v = 0; v < 3; ++v) {
      const int f = dofs.node_to_free[mesh.triangles[t][v]];
      if (f >= 0) out.segment<2>(2 * f) += local[t] * elems[t].grad_basis[v];
    }
  return out;
}

SparseMatrix jacobian_impl(const IntegrandParams& params, const DiskMesh& mesh, const std::vector<ElementData>& elems,
                           const FrozenAt& u, const DiscreteField& w) {
  std::vector<Mat4> blocks(elems.size());
  parallel_for(elems.size(), [&](std::size_t t) {
    const Mat2 z = element_gradient(mesh, elems[t], t, w);
    Mat4 j = Mat4::Zero();
    for (int q = 0; q < 3; ++q) j += d_z_coeff_a(params, u(t, q), z).m.transpose();
    blocks[t] = elems[t].area / 3.0 * j;
  });
  return scatter_blocks(mesh, elems, blocks);
}

// Newton on R(w) = 0 with u frozen, backtracking on |R|. Returns when |R| <= tol
// or when no step reduces the residual any further.
DiscreteField frozen_newton(const IntegrandParams& params, const DiskMesh& mesh, const std::vector<ElementData>& elems,
                            const FrozenAt& u, DiscreteField w, double tol, int max_steps, SolveLog& log) {
  Vector res = residual_impl(params, mesh, elems, u, w);
  for (int k = 0; k < max_steps; ++k) {
    const double rn = res.norm();
    const int iter = log.entries.empty() ? 0 : log.entries.back().iter + 1;
    log.entries.push_back({iter, rn, rn, 0.0, 0});
    if (rn <= tol) break;
    SparseMatrix jac = jacobian_impl(params, mesh, elems, u, w);
    jac.makeCompressed();
    Eigen::SparseLU<SparseMatrix> lu;
    lu.compute(jac);
    if (lu.info() != Eigen::Success) throw ConvergenceError("frozen-coefficient solve: singular Jacobian");
    const Vector d = lu.solve(-res);
    double t = 1.0;
    bool accepted = false;
    for (int h = 0; h <= 50; ++h) {
      DiscreteField trial = add_step(mesh, w, d, t);
      Vector tr = residual_impl(params, mesh, elems, u, trial);
      if (tr.allFinite() && tr.norm() <= (1.0 - 1e-4 * t) * rn) {
        w = std::move(trial);
        res = std::move(tr);
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    log.entries.back().step = accepted ? t : 0.0;
    if (!accepted) break;
  }
  return w;
}

}  // namespace

Vector coefficient_residual(const IntegrandParams& params, const DiskMesh& mesh, const DiscreteField& u,
                            const DiscreteField& w) {
  check_field(mesh, u);
  check_field(mesh, w);
  return residual_impl(params, mesh, element_data(mesh), frozen_at(mesh, u), w);
}

Vector coefficient_residual(const IntegrandParams& params, const DiskMesh& mesh, const PointField& u,
                            const DiscreteField& w) {
  check_field(mesh, w);
  const auto elems = element_data(mesh);
  return residual_impl(params, mesh, elems, frozen_at(elems, u), w);
}

SparseMatrix coefficient_jacobian(const IntegrandParams& params, const DiskMesh& mesh, const DiscreteField& u,
                                  const DiscreteField& w) {
  check_field(mesh, u);
  check_field(mesh, w);
  return jacobian_impl(params, mesh, element_data(mesh), frozen_at(mesh, u), w);
}

DiscreteField solve_frozen(const IntegrandParams& params, const DiskMesh& mesh, const PointField& u,
                           const DiscreteField& initial, double tol, SolveLog* log) {
  if (!(tol > 0.0)) throw UsageError("solve_frozen: tol must be positive");
  check_field(mesh, initial);
  const auto elems = element_data(mesh);
  SolveLog local;
  DiscreteField w = frozen_newton(params, mesh, elems, frozen_at(elems, u), initial, tol, 50, log ? *log : local);
  return w;
}

UDependentResult solve_u_dependent(const IntegrandParams& params, const DiskMesh& mesh, double tol,
                                   const UDependentOptions& options) {
  if (!(tol > 0.0)) throw UsageError("solve_u_dependent: tol must be positive");
  UDependentResult result;
  DiscreteField w = options.initial ? *options.initial : interpolate_singular(mesh);
  check_field(mesh, w);
  // boundary data is always x/|x|
  for (std::size_t k = 0; k < mesh.node_count(); ++k)
    if (mesh.boundary[k]) w.values[k] = u_sing(mesh.nodes[k]);
  const auto elems = element_data(mesh);

  for (int outer_it = 0;; ++outer_it) {
    const double r = residual_impl(params, mesh, elems, frozen_at(mesh, w), w).norm();
    result.fixed_point_residuals.push_back(r);
    if (r <= tol) {
      result.converged = true;
      break;
    }
    auto fail = [&](const char* what) {
      std::ostringstream msg;
      msg << "solve_u_dependent: " << what << ", residuals";
      for (double v : result.fixed_point_residuals) msg << ' ' << v;
      throw ConvergenceError(msg.str());
    };
    if (r > options.divergence_factor * result.fixed_point_residuals.front()) fail("Picard divergence");
    // a hump is a transient, a window of flat residuals is stagnation
    const int window = options.stagnation_window;
    if (outer_it >= window) {
      const auto first = result.fixed_point_residuals.end() - (window + 1);
      const auto [lo, hi] = std::minmax_element(first, result.fixed_point_residuals.end());
      if (*hi - *lo < 0.01 * *hi) fail("Picard stagnation");
    }
    if (outer_it >= options.max_outer) break;

    const DiscreteField frozen = w;
    DiscreteField next =
        frozen_newton(params, mesh, elems, frozen_at(mesh, frozen), w, 0.1 * tol, options.max_inner, result.inner_log);
    double inc = 0.0;
    for (std::size_t k = 0; k < mesh.node_count(); ++k) inc = std::max(inc, (next.values[k] - w.values[k]).norm());
    result.increments.push_back(inc);
    w = std::move(next);
  }
  result.field = std::move(w);
  return result;
}

double v_distance(double p, const DiskMesh& mesh, const DiscreteField& w, const DiscreteField& v) {
  check_field(mesh, w);
  check_field(mesh, v);
  const auto elems = element_data(mesh);
  std::vector<double> terms(elems.size());
  for (std::size_t t = 0; t < elems.size(); ++t) {
    const Mat2 d = v_map(element_gradient(mesh, elems[t], t, w), p) - v_map(element_gradient(mesh, elems[t], t, v), p);
    terms[t] = elems[t].area * d.squaredNorm();
  }
  return std::sqrt(pairwise_sum(terms));
}

double v_distance_to_singular(double p, const DiskMesh& mesh, const DiscreteField& w) {
  check_field(mesh, w);
  const auto elems = element_data(mesh);
  std::vector<double> terms(elems.size());
  for (std::size_t t = 0; t < elems.size(); ++t) {
    const Mat2 vw = v_map(element_gradient(mesh, elems[t], t, w), p);
    double s = 0.0;
    for (const Vec2& x : elems[t].quad_points) s += (vw - v_map(du_sing(x), p)).squaredNorm();
    terms[t] = elems[t].area * s / 3.0;
  }
  return std::sqrt(pairwise_sum(terms));
}

}  // namespace singell
