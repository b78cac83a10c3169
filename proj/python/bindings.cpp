// Python bindings: the integrand, the singular map, disk meshes, the Newton
// minimizer, decay probes and the command line.
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

#include "singell/cli.hpp"
#include "singell/errors.hpp"
#include "singell/fem.hpp"
#include "singell/integrand.hpp"
#include "singell/mesh.hpp"
#include "singell/probes.hpp"
#include "singell/singular_map.hpp"

namespace py = pybind11;
using namespace singell;

namespace {

using NodeArray = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

NodeArray to_array(const std::vector<Vec2>& v) {
  NodeArray a(static_cast<Eigen::Index>(v.size()), 2);
  for (std::size_t k = 0; k < v.size(); ++k) a.row(static_cast<Eigen::Index>(k)) = v[k].transpose();
  return a;
}

DiscreteField to_field(const DiskMesh& mesh, const NodeArray& a) {
  if (static_cast<std::size_t>(a.rows()) != mesh.node_count())
    throw UsageError("field has " + std::to_string(a.rows()) + " rows, mesh has " + std::to_string(mesh.node_count()) +
                     " nodes");
  DiscreteField w;
  w.values.reserve(mesh.node_count());
  for (Eigen::Index k = 0; k < a.rows(); ++k) w.values.emplace_back(a(k, 0), a(k, 1));
  return w;
}

std::vector<double> probe_radii(const Vec2& center, double rho_max, int count) {
  if (rho_max <= 0.0) rho_max = std::min(0.5, 0.5 * (1.0 - center.norm()));
  return geometric_radii(rho_max, count);
}

}  // namespace

PYBIND11_MODULE(singell, m) {
  m.doc() = "Energy integrand with a point singularity: evaluation, verification and discrete minimization.";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
  py::register_exception<ResourceError>(m, "ResourceError", PyExc_MemoryError);
  py::register_exception<InputError>(m, "InputError", PyExc_IOError);

  py::class_<IntegrandParams>(m, "Params")
      .def_readonly("p", &IntegrandParams::p)
      .def_readonly("m_g", &IntegrandParams::m_g)
      .def_readonly("cutoff_sup", &IntegrandParams::cutoff_sup)
      .def_readonly("safety", &IntegrandParams::safety)
      .def_property_readonly("amplification", &IntegrandParams::amplification)
      .def("__repr__", [](const IntegrandParams& p) {
        std::ostringstream s;
        s << "Params(p=" << p.p << ", m_g=" << p.m_g << ")";
        return s.str();
      });
  m.def("make_params", &make_params, py::arg("p"), py::arg("safety") = 1e-3);

  m.def("t_u", &t_u, py::arg("params"), py::arg("u"), py::arg("z"));
  m.def("integrand_f", &integrand_f, py::arg("params"), py::arg("x"), py::arg("z"));
  m.def("grad_f_z", &grad_f_z, py::arg("params"), py::arg("x"), py::arg("z"));
  m.def("hess_f_matrix", &hess_f_matrix, py::arg("params"), py::arg("x"), py::arg("z"),
        "4x4 Hessian in the flattened index 2*i + kappa.");
  m.def("coeff_a", &coeff_a, py::arg("params"), py::arg("u"), py::arg("z"));
  m.def(
      "d_z_coeff_a", [](const IntegrandParams& p, const Vec2& u, const Mat2& z) { return d_z_coeff_a(p, u, z).m; },
      py::arg("params"), py::arg("u"), py::arg("z"));

  m.def("u_sing", &u_sing, py::arg("x"));
  m.def("du_sing", &du_sing, py::arg("x"));
  m.def("singular_flux", &singular_flux, py::arg("params"), py::arg("x"));
  m.def("strong_divergence_residual", &strong_divergence_residual, py::arg("params"), py::arg("x"), py::arg("h"));
  m.def("w1p_seminorm_sing", &w1p_seminorm_sing, py::arg("p"));

  py::class_<DiskMesh>(m, "DiskMesh")
      .def_property_readonly("nodes", [](const DiskMesh& d) { return to_array(d.nodes); })
      .def_property_readonly("triangles", [](const DiskMesh& d) { return d.triangles; })
      .def_property_readonly("boundary", [](const DiskMesh& d) { return d.boundary; })
      .def_readonly("h", &DiskMesh::h)
      .def_property_readonly("node_count", &DiskMesh::node_count)
      .def_property_readonly("triangle_count", &DiskMesh::triangle_count);
  m.def("mesh_disk", &mesh_disk, py::arg("h"), py::arg("origin_node") = true);

  m.def(
      "interpolate_singular", [](const DiskMesh& mesh) { return to_array(interpolate_singular(mesh).values); },
      py::arg("mesh"));
  m.def(
      "energy",
      [](const IntegrandParams& p, const DiskMesh& mesh, const NodeArray& w) { return energy(p, mesh, to_field(mesh, w)); },
      py::arg("params"), py::arg("mesh"), py::arg("field"));
  m.def(
      "minimize",
      [](const IntegrandParams& p, const DiskMesh& mesh, double tol) {
        const MinimizeResult r = minimize(p, mesh, tol);
        std::vector<double> energies, grad_norms;
        for (const auto& e : r.log.entries) {
          energies.push_back(e.energy);
          grad_norms.push_back(e.grad_norm);
        }
        py::dict out;
        out["field"] = to_array(r.field.values);
        out["energies"] = energies;
        out["grad_norms"] = grad_norms;
        out["converged"] = r.log.converged;
        return out;
      },
      py::arg("params"), py::arg("mesh"), py::arg("tol") = 1e-8,
      "Newton minimization from the interpolant of x/|x|. Returns a dict with the nodal field and the solve log.");

  py::class_<DecayTable>(m, "DecayTable")
      .def_readonly("quantity", &DecayTable::quantity)
      .def_readonly("radii", &DecayTable::radii)
      .def_readonly("values", &DecayTable::values)
      .def_readonly("slope", &DecayTable::slope)
      .def_readonly("fit_residual", &DecayTable::fit_residual)
      .def_readonly("slope_assertable", &DecayTable::slope_assertable)
      .def_readonly("verdict", &DecayTable::verdict);

  m.def(
      "probe_singular",
      [](const std::string& quantity, const Vec2& center, double p, double rho_max, int count) {
        ProbeOptions o;
        o.p = p;
        const auto radii = probe_radii(center, rho_max, count);
        const FieldSampler s = singular_sampler();
        if (quantity == "morrey") return morrey_decay(s, center, radii, o);
        if (quantity == "excess") return excess_decay(s, center, radii, o);
        if (quantity == "oscillation") return oscillation_probe(s, center, radii, o);
        throw UsageError("unknown quantity " + quantity);
      },
      py::arg("quantity"), py::arg("center"), py::arg("p") = 1.5, py::arg("rho_max") = 0.0, py::arg("count") = 6,
      "Decay table of x/|x| on geometric radii; quantity is morrey, excess or oscillation.");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv{"singular-elliptic"};
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command line in-process; returns (exit_code, stdout, stderr).");
}
