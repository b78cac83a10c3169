#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "singell/errors.hpp"
#include "singell/fem.hpp"
#include "singell/mesh.hpp"
#include "test_support.hpp"

using namespace singell;
using namespace testing;

namespace {

constexpr double kPi = 3.141592653589793;

// Shoelace area of the polygon through the boundary nodes, sorted by angle.
double boundary_polygon_area(const DiskMesh& m) {
  std::vector<Vec2> b;
  for (std::size_t i = 0; i < m.node_count(); ++i)
    if (m.boundary[i]) b.push_back(m.nodes[i]);
  std::sort(b.begin(), b.end(), [](const Vec2& a, const Vec2& c) { return std::atan2(a.y(), a.x()) < std::atan2(c.y(), c.x()); });
  double s = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const Vec2& a = b[i];
    const Vec2& c = b[(i + 1) % b.size()];
    s += a.x() * c.y() - a.y() * c.x();
  }
  return 0.5 * s;
}

// Edge -> number of incident triangles.
std::map<std::pair<int, int>, int> edge_counts(const DiskMesh& m) {
  std::map<std::pair<int, int>, int> e;
  for (const auto& t : m.triangles)
    for (int k = 0; k < 3; ++k) {
      const int a = t[k], b = t[(k + 1) % 3];
      ++e[{std::min(a, b), std::max(a, b)}];
    }
  return e;
}

}  // namespace

TEST_CASE("coarse mesh has the expected size and quality", "[mesh]") {
  const DiskMesh m = mesh_disk(0.2);
  CHECK(m.node_count() >= 60);
  CHECK(m.node_count() <= 200);
  const MeshQuality q = check_mesh(m);
  CHECK(q.min_angle_deg > 15.0);
  CHECK(q.max_boundary_radius_error <= 1e-12);
  CHECK(q.positively_oriented);
  CHECK(q.conforming);
  CHECK(std::abs(q.area_sum - boundary_polygon_area(m)) < 1e-12);
}

TEST_CASE("meshes are conforming and cover the inscribed polygon", "[mesh]") {
  for (const bool origin : {true, false}) {
    for (const double h : {0.3, 0.2, 0.1, 0.05}) {
      INFO("h = " << h << " origin = " << origin);
      const DiskMesh m = mesh_disk(h, origin);
      REQUIRE(m.boundary.size() == m.node_count());
      for (std::size_t i = 0; i < m.node_count(); ++i) {
        CHECK(m.nodes[i].norm() <= 1.0 + 1e-12);
        if (m.boundary[i]) CHECK(std::abs(m.nodes[i].norm() - 1.0) <= 1e-12);
      }
      for (std::size_t t = 0; t < m.triangle_count(); ++t) CHECK(m.area(t) > 0.0);

      int single = 0;
      for (const auto& [edge, n] : edge_counts(m)) {
        CHECK((n == 1 || n == 2));
        if (n == 1) {
          ++single;
          CHECK(m.boundary[edge.first]);
          CHECK(m.boundary[edge.second]);
        }
      }
      CHECK(single == std::count(m.boundary.begin(), m.boundary.end(), true));

      double area = 0.0;
      for (std::size_t t = 0; t < m.triangle_count(); ++t) area += m.area(t);
      CHECK(std::abs(area - boundary_polygon_area(m)) < 1e-12);
      const MeshQuality q = check_mesh(m);
      CHECK(q.conforming);
      CHECK(q.positively_oriented);
      CHECK(q.min_angle_deg > 15.0);
      CHECK(std::abs(q.area_sum - area) < 1e-12);
      CHECK(m.h <= h);

      const bool has_origin = std::any_of(m.nodes.begin(), m.nodes.end(), [](const Vec2& x) { return x.norm() == 0.0; });
      CHECK(has_origin == origin);
    }
  }
}

TEST_CASE("fine mesh area is close to pi", "[mesh]") {
  const DiskMesh m = mesh_disk(0.025);
  const MeshQuality q = check_mesh(m);
  CHECK(std::abs(q.area_sum - kPi) <= 1e-3);
  CHECK(q.area_sum < kPi);
}

TEST_CASE("quadrature points avoid the origin", "[mesh]") {
  for (const bool origin : {true, false}) {
    const DiskMesh m = mesh_disk(0.1, origin);
    const auto el = element_data(m);
    REQUIRE(el.size() == m.triangle_count());
    double nearest = 1.0;
    for (const auto& e : el)
      for (const Vec2& q : e.quad_points) nearest = std::min(nearest, q.norm());
    CHECK(nearest > 0.0);
    // the basis gradients of a triangle sum to zero
    for (const auto& e : el) CHECK((e.grad_basis[0] + e.grad_basis[1] + e.grad_basis[2]).norm() < 1e-9 / e.area);
  }
}

TEST_CASE("mesh_disk validates h", "[mesh]") {
  CHECK_THROWS_AS(mesh_disk(0.5), UsageError);
  CHECK_THROWS_AS(mesh_disk(0.7), UsageError);
  CHECK_THROWS_AS(mesh_disk(0.0), UsageError);
  CHECK_THROWS_AS(mesh_disk(-0.1), UsageError);
  CHECK_THROWS_AS(mesh_disk(std::nan("")), UsageError);
  CHECK_THROWS_AS(mesh_disk(1e-5), ResourceError);
}

TEST_CASE("mesh and field text round trip", "[mesh]") {
  const DiskMesh m = mesh_disk(0.2);
  std::stringstream s;
  write_mesh(s, m);
  const DiskMesh r = read_mesh(s);
  REQUIRE(r.node_count() == m.node_count());
  REQUIRE(r.triangle_count() == m.triangle_count());
  for (std::size_t i = 0; i < m.node_count(); ++i) {
    CHECK(r.nodes[i] == m.nodes[i]);
    CHECK(r.boundary[i] == m.boundary[i]);
  }
  CHECK(r.triangles == m.triangles);

  const DiscreteField w = interpolate_singular(m);
  std::stringstream f;
  write_field(f, w);
  const DiscreteField back = read_field(f);
  REQUIRE(back.values.size() == w.values.size());
  for (std::size_t i = 0; i < w.values.size(); ++i) CHECK(back.values[i] == w.values[i]);
}

TEST_CASE("malformed mesh input is rejected", "[mesh]") {
  std::istringstream empty("");
  CHECK_THROWS_AS(read_mesh(empty), InputError);
  std::istringstream bad("NODES 2\n0 0 0 0\n");
  CHECK_THROWS_AS(read_mesh(bad), InputError);
  std::istringstream junk("NODES x\n");
  CHECK_THROWS_AS(read_mesh(junk), InputError);
  std::istringstream bad_field("0.5 abc\n");
  CHECK_THROWS_AS(read_field(bad_field), InputError);
}

TEST_CASE("locator finds the containing triangle", "[mesh]") {
  const DiskMesh m = mesh_disk(0.1);
  const MeshLocator loc(m);
  Rng rng(3);
  for (int k = 0; k < 2000; ++k) {
    const Vec2 x = random_vec(rng, 0.98);
    std::array<double, 3> bary{};
    const int t = loc.locate(x, &bary);
    REQUIRE(t >= 0);
    const auto& tri = m.triangles[static_cast<std::size_t>(t)];
    Vec2 back = Vec2::Zero();
    for (int j = 0; j < 3; ++j) {
      CHECK(bary[j] >= -1e-12);
      back += bary[j] * m.nodes[static_cast<std::size_t>(tri[j])];
    }
    CHECK((back - x).norm() < 1e-12);
    CHECK(std::abs(bary[0] + bary[1] + bary[2] - 1.0) < 1e-12);
  }
  CHECK(loc.locate(Vec2(1.5, 0.0)) == -1);
  for (std::size_t i = 0; i < m.node_count(); i += 17) CHECK(loc.locate(m.nodes[i]) >= 0);
}

TEST_CASE("singular interpolant matches x/|x| at the nodes", "[mesh]") {
  const DiskMesh m = mesh_disk(0.1);
  const DiscreteField w = interpolate_singular(m);
  for (std::size_t i = 0; i < m.node_count(); ++i) {
    const double r = m.nodes[i].norm();
    if (r == 0.0)
      CHECK(w.values[i].norm() == 0.0);
    else
      CHECK((w.values[i] - m.nodes[i] / r).norm() < 1e-15);
  }
}
