#pragma once

// P1 finite elements for F[w] = int_B f(x, Dw) dx with boundary data x/|x|.

#include <Eigen/Sparse>

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "singell/integrand.hpp"
#include "singell/mesh.hpp"

namespace singell {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

/// Maps interior nodes to unknowns: dof = 2 * free_index + component.
struct DofMap {
  std::vector<int> node_to_free;  // -1 on boundary nodes
  int free_nodes = 0;

  explicit DofMap(const DiskMesh& mesh);
  int dofs() const { return 2 * free_nodes; }
};

/// Per-triangle geometry and the interior 3-point rule (barycentric 2/3, 1/6, 1/6).
struct ElementData {
  double area = 0.0;
  std::array<Vec2, 3> grad_basis;
  std::array<Vec2, 3> quad_points;
};

/// Throws std::logic_error if a quadrature point coincides with the origin.
std::vector<ElementData> element_data(const DiskMesh& mesh);

/// Elementwise constant gradient Dw on triangle t.
Mat2 element_gradient(const DiskMesh& mesh, const ElementData& e, std::size_t t, const DiscreteField& w);

/// Nodal interpolant of x/|x|; a node at the origin receives (0, 0).
DiscreteField interpolate_singular(const DiskMesh& mesh);

double energy(const IntegrandParams& params, const DiskMesh& mesh, const DiscreteField& w);

/// Derivative of `energy` with respect to the interior nodal values.
Vector assemble_gradient(const IntegrandParams& params, const DiskMesh& mesh, const DiscreteField& w);

/// Second derivative of `energy` with respect to the interior nodal values (symmetric).
SparseMatrix assemble_hessian(const IntegrandParams& params, const DiskMesh& mesh, const DiscreteField& w);

/// Field with the interior values shifted by `step` (dof layout of DofMap).
DiscreteField add_step(const DiskMesh& mesh, const DiscreteField& w, const Vector& step, double scale = 1.0);

struct SolveLogEntry {
  int iter = 0;
  double energy = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;
  int cg_iters = 0;
};

struct SolveLog {
  std::vector<SolveLogEntry> entries;
  bool converged = false;

  bool energy_non_increasing() const;
};

/// CSV "iter,energy,grad_norm,step,cg_iters".
void write_solve_log(std::ostream& out, const SolveLog& log);

struct MinimizeOptions {
  int max_iterations = 100;
  double cg_tolerance = 1e-8;
  int max_halvings = 50;
  double armijo_slope = 1e-4;
  std::optional<DiscreteField> initial;
};

struct MinimizeResult {
  DiscreteField field;
  SolveLog log;
};

/// Damped Newton with Armijo backtracking; diagonal-preconditioned CG inner solves.
/// Stops when |grad| <= tol (1 + |energy|). Throws ConvergenceError (message carries
/// the log) after max_halvings failed halvings or max_iterations Newton steps.
MinimizeResult minimize(const IntegrandParams& params, const DiskMesh& mesh, double tol,
                        const MinimizeOptions& options = {});

/// Residual covector of the u-dependent system: int_B a(u_h, Dw) . D phi over
/// interior hat functions, with u_h the P1 field `u` evaluated at quadrature points.
Vector coefficient_residual(const IntegrandParams& params, const DiskMesh& mesh, const DiscreteField& u,
                            const DiscreteField& w);

/// Pointwise field, e.g. u_sing.
using PointField = std::function<Vec2(const Vec2&)>;

/// As above with u evaluated exactly at the quadrature points.
Vector coefficient_residual(const IntegrandParams& params, const DiskMesh& mesh, const PointField& u,
                            const DiscreteField& w);

/// Jacobian of coefficient_residual with respect to the interior values of w (u frozen).
SparseMatrix coefficient_jacobian(const IntegrandParams& params, const DiskMesh& mesh, const DiscreteField& u,
                                  const DiscreteField& w);

/// One Picard step: solves the discrete system with u frozen, from `initial`.
DiscreteField solve_frozen(const IntegrandParams& params, const DiskMesh& mesh, const PointField& u,
                           const DiscreteField& initial, double tol, SolveLog* log = nullptr);

struct UDependentOptions {
  int max_outer = 200;
  int max_inner = 50;
  /// Stagnation window: fail when the last window + 1 residuals all lie within 1% of their maximum.
  int stagnation_window = 10;
  /// Fail when the residual exceeds this multiple of its initial value.
  double divergence_factor = 10.0;
  std::optional<DiscreteField> initial;
};

struct UDependentResult {
  DiscreteField field;
  SolveLog inner_log;                  // inner Newton steps, energy column = |residual|
  std::vector<double> fixed_point_residuals;  // |R(w_k; w_k)| per outer iteration
  std::vector<double> increments;      // max nodal |w_{k+1} - w_k|
  bool converged = false;
};

/// Picard iteration freezing u in A(u), inner Newton on the gradient variable.
/// Throws ConvergenceError on stagnation.
UDependentResult solve_u_dependent(const IntegrandParams& params, const DiskMesh& mesh, double tol,
                                   const UDependentOptions& options = {});

/// (int_B |V(Dw) - V(Dv)|^2 dx)^{1/2} for two P1 fields on the same mesh.
double v_distance(double p, const DiskMesh& mesh, const DiscreteField& w, const DiscreteField& v);

/// (int_B |V(Dw) - V(Du_sing)|^2 dx)^{1/2} with the element 3-point rule.
double v_distance_to_singular(double p, const DiskMesh& mesh, const DiscreteField& w);

}  // namespace singell
