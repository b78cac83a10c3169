#include "singell/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "singell/errors.hpp"

namespace singell {

namespace {

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * ((b(0) - a(0)) * (c(1) - a(1)) - (b(1) - a(1)) * (c(0) - a(0)));
}

void push_oriented(DiskMesh& mesh, int a, int b, int c) {
  if (signed_area(mesh.nodes[a], mesh.nodes[b], mesh.nodes[c]) < 0.0) std::swap(b, c);
  mesh.triangles.push_back({a, b, c});
}

}  // namespace

double DiskMesh::area(std::size_t t) const {
  const auto& tri = triangles[t];
  return signed_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
}

DiskMesh mesh_disk(double h, bool origin_node) {
  if (!(h > 0.0 && h < 0.5)) throw UsageError("mesh_disk: h must lie in (0, 0.5)");
  const int rings = static_cast<int>(std::ceil(1.0 / h - 1e-12));
  const double estimate = 1.0 + 3.0 * rings * (rings + 1.0);
  if (estimate > 5e6) throw ResourceError("mesh_disk: mesh size h is too small for the memory budget");

  DiskMesh mesh;
  mesh.h = h;
  mesh.rings = rings;
  std::vector<int> ring_start(rings + 1, 0);
  if (origin_node) {
    mesh.nodes.emplace_back(0.0, 0.0);
    mesh.boundary.push_back(false);
  }
  for (int k = 1; k <= rings; ++k) {
    ring_start[k] = static_cast<int>(mesh.nodes.size());
    const int count = 6 * k;
    const double radius = static_cast<double>(k) / rings;
    for (int j = 0; j < count; ++j) {
      const double theta = 2.0 * std::numbers::pi * j / count;
      if (k == rings)
        mesh.nodes.emplace_back(std::cos(theta), std::sin(theta));
      else
        mesh.nodes.emplace_back(radius * std::cos(theta), radius * std::sin(theta));
      mesh.boundary.push_back(k == rings);
    }
  }

  // innermost cap
  const int r1 = ring_start[1];
  if (origin_node) {
    for (int j = 0; j < 6; ++j) push_oriented(mesh, 0, r1 + j, r1 + (j + 1) % 6);
  } else {
    for (int j = 1; j < 5; ++j) push_oriented(mesh, r1, r1 + j, r1 + j + 1);
  }

  // strips between consecutive rings, merged by angle
  for (int k = 2; k <= rings; ++k) {
    const int n_in = 6 * (k - 1);
    const int n_out = 6 * k;
    const int in0 = ring_start[k - 1];
    const int out0 = ring_start[k];
    int i = 0;
    int j = 0;
    while (i < n_in || j < n_out) {
      const double next_in = static_cast<double>(i + 1) / n_in;
      const double next_out = static_cast<double>(j + 1) / n_out;
      if (j < n_out && (i == n_in || next_out <= next_in)) {
        push_oriented(mesh, in0 + i % n_in, out0 + j, out0 + (j + 1) % n_out);
        ++j;
      } else {
        push_oriented(mesh, in0 + i, out0 + j % n_out, in0 + (i + 1) % n_in);
        ++i;
      }
    }
  }
  return mesh;
}

MeshQuality check_mesh(const DiskMesh& mesh) {
  MeshQuality q;
  q.min_angle_deg = 180.0;
  q.positively_oriented = true;
  std::vector<double> areas;
  std::map<std::pair<int, int>, int> edge_use;
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const auto& tri = mesh.triangles[t];
    const double a = mesh.area(t);
    if (!(a > 0.0)) q.positively_oriented = false;
    areas.push_back(a);
    for (int v = 0; v < 3; ++v) {
      const Vec2& p0 = mesh.nodes[tri[v]];
      const Vec2 e1 = mesh.nodes[tri[(v + 1) % 3]] - p0;
      const Vec2 e2 = mesh.nodes[tri[(v + 2) % 3]] - p0;
      const double cosang = std::clamp(e1.dot(e2) / (e1.norm() * e2.norm()), -1.0, 1.0);
      q.min_angle_deg = std::min(q.min_angle_deg, std::acos(cosang) * 180.0 / std::numbers::pi);
      const int lo = std::min(tri[v], tri[(v + 1) % 3]);
      const int hi = std::max(tri[v], tri[(v + 1) % 3]);
      ++edge_use[{lo, hi}];
    }
  }
  q.area_sum = pairwise_sum(areas);
  q.conforming = true;
  for (const auto& [edge, uses] : edge_use) {
    const bool on_boundary = mesh.boundary[edge.first] && mesh.boundary[edge.second];
    if (uses > 2 || (uses == 1 && !on_boundary) || (uses == 2 && on_boundary)) q.conforming = false;
  }
  for (std::size_t k = 0; k < mesh.node_count(); ++k)
    if (mesh.boundary[k])
      q.max_boundary_radius_error = std::max(q.max_boundary_radius_error, std::abs(mesh.nodes[k].norm() - 1.0));
  return q;
}

void write_mesh(std::ostream& out, const DiskMesh& mesh) {
  const auto old = out.precision(17);
  out << "NODES " << mesh.node_count() << '\n';
  for (std::size_t k = 0; k < mesh.node_count(); ++k)
    out << k << ' ' << mesh.nodes[k](0) << ' ' << mesh.nodes[k](1) << ' ' << (mesh.boundary[k] ? 1 : 0) << '\n';
  out << "TRIANGLES " << mesh.triangle_count() << '\n';
  for (const auto& t : mesh.triangles) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out.precision(old);
}

DiskMesh read_mesh(std::istream& in) {
  DiskMesh mesh;
  std::string tag;
  std::size_t count = 0;
  if (!(in >> tag >> count) || tag != "NODES") throw InputError("mesh: expected NODES section");
  for (std::size_t k = 0; k < count; ++k) {
    std::size_t idx;
    double x, y;
    int flag;
    if (!(in >> idx >> x >> y >> flag) || idx != k) throw InputError("mesh: malformed node " + std::to_string(k));
    mesh.nodes.emplace_back(x, y);
    mesh.boundary.push_back(flag != 0);
  }
  if (!(in >> tag >> count) || tag != "TRIANGLES") throw InputError("mesh: expected TRIANGLES section");
  for (std::size_t k = 0; k < count; ++k) {
    std::array<int, 3> t;
    if (!(in >> t[0] >> t[1] >> t[2])) throw InputError("mesh: malformed triangle " + std::to_string(k));
    for (int v : t)
      if (v < 0 || static_cast<std::size_t>(v) >= mesh.node_count())
        throw InputError("mesh: triangle index out of range");
    mesh.triangles.push_back(t);
  }
  double hmax = 0.0;
  for (const auto& t : mesh.triangles)
    for (int v = 0; v < 3; ++v) hmax = std::max(hmax, (mesh.nodes[t[v]] - mesh.nodes[t[(v + 1) % 3]]).norm());
  mesh.h = hmax;
  return mesh;
}

void write_field(std::ostream& out, const DiscreteField& field) {
  const auto old = out.precision(17);
  for (const Vec2& v : field.values) out << v(0) << ' ' << v(1) << '\n';
  out.precision(old);
}

DiscreteField read_field(std::istream& in) {
  DiscreteField field;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    double x, y;
    if (!(row >> x >> y)) throw InputError("field: malformed line " + std::to_string(lineno));
    field.values.emplace_back(x, y);
  }
  return field;
}

MeshLocator::MeshLocator(const DiskMesh& mesh, int buckets)
    : mesh_(mesh), buckets_(buckets), cells_(static_cast<std::size_t>(buckets) * buckets) {
  auto cell_of = [&](double v) {
    return std::clamp(static_cast<int>(std::floor((v + 1.0) / 2.0 * buckets_)), 0, buckets_ - 1);
  };
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    Vec2 lo(1e300, 1e300), hi(-1e300, -1e300);
    for (int v : mesh.triangles[t]) {
      lo = lo.cwiseMin(mesh.nodes[v]);
      hi = hi.cwiseMax(mesh.nodes[v]);
    }
    for (int i = cell_of(lo(0)); i <= cell_of(hi(0)); ++i)
      for (int j = cell_of(lo(1)); j <= cell_of(hi(1)); ++j) cells_[i * buckets_ + j].push_back(static_cast<int>(t));
  }
}

int MeshLocator::locate(const Vec2& x, std::array<double, 3>* barycentric) const {
  if (std::abs(x(0)) > 1.0 + 1e-12 || std::abs(x(1)) > 1.0 + 1e-12) return -1;
  auto cell_of = [&](double v) {
    return std::clamp(static_cast<int>(std::floor((v + 1.0) / 2.0 * buckets_)), 0, buckets_ - 1);
  };
  constexpr double kTol = -1e-12;
  for (int t : cells_[cell_of(x(0)) * buckets_ + cell_of(x(1))]) {
    const auto& tri = mesh_.triangles[t];
    const Vec2& a = mesh_.nodes[tri[0]];
    const Vec2& b = mesh_.nodes[tri[1]];
    const Vec2& c = mesh_.nodes[tri[2]];
    const double area = signed_area(a, b, c);
    const double l0 = signed_area(x, b, c) / area;
    const double l1 = signed_area(a, x, c) / area;
    const double l2 = 1.0 - l0 - l1;
    if (l0 >= kTol && l1 >= kTol && l2 >= kTol) {
      if (barycentric) *barycentric = {l0, l1, l2};
      return t;
    }
  }
  return -1;
}

}  // namespace singell
