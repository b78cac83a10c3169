#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include "singell/tensor.hpp"

namespace singell {

/// Triangulation of the unit disk by concentric polar rings (ring k carries 6k
/// nodes) with an origin fan, or a hexagonal cap when no origin node is wanted.
struct DiskMesh {
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> triangles;
  std::vector<bool> boundary;
  double h = 0.0;
  int rings = 0;

  std::size_t node_count() const { return nodes.size(); }
  std::size_t triangle_count() const { return triangles.size(); }
  double area(std::size_t t) const;
};

/// Throws UsageError unless 0 < h < 0.5; ResourceError if the mesh would exceed
/// the memory budget (about 5e6 nodes).
DiskMesh mesh_disk(double h, bool origin_node = true);

struct MeshQuality {
  double min_angle_deg = 0.0;
  double area_sum = 0.0;
  double max_boundary_radius_error = 0.0;
  bool positively_oriented = false;
  bool conforming = false;
};

MeshQuality check_mesh(const DiskMesh& mesh);

/// Text format: "NODES <n>" then "index x y flag" lines, "TRIANGLES <m>" then "a b c" lines.
void write_mesh(std::ostream& out, const DiskMesh& mesh);
/// Throws InputError on malformed input.
DiskMesh read_mesh(std::istream& in);

/// Nodal values of a P1 field; the mesh is passed alongside.
struct DiscreteField {
  std::vector<Vec2> values;
};

/// One "x y" line per node, 17 significant digits.
void write_field(std::ostream& out, const DiscreteField& field);
DiscreteField read_field(std::istream& in);

/// Point location on a bucket grid; returns the containing triangle or -1.
class MeshLocator {
 public:
  explicit MeshLocator(const DiskMesh& mesh, int buckets = 64);
  int locate(const Vec2& x, std::array<double, 3>* barycentric = nullptr) const;

 private:
  const DiskMesh& mesh_;
  int buckets_;
  std::vector<std::vector<int>> cells_;
};

}  // namespace singell
