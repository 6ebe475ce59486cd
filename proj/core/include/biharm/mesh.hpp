#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace biharm {

/// Error with a machine-readable class tag, used for CLI exit reporting.
class Error : public std::runtime_error {
public:
  Error(std::string error_class, const std::string& what)
      : std::runtime_error(what), error_class_(std::move(error_class)) {}
  const std::string& error_class() const { return error_class_; }

private:
  std::string error_class_;
};

class MeshError : public Error {
public:
  explicit MeshError(const std::string& what) : Error("mesh_error", what) {}
};

/// Oriented mesh edge. The stored unit normal is the outer normal of the
/// first adjacent triangle K+ (the one with the lower index); the second
/// adjacent triangle K- sees the negated normal.
struct Edge {
  std::array<int, 2> vertices;  // sorted, vertices[0] < vertices[1]
  int tri_plus = -1;            // K+
  int tri_minus = -1;           // K-, or -1 on the boundary
  Eigen::Vector2d normal;       // unit outer normal of K+
  Eigen::Vector2d midpoint;
  double length = 0.0;  // h_E

  bool on_boundary() const { return tri_minus < 0; }
};

/// Conforming triangulation of a polygonal domain. Immutable after
/// construction; all queries are safe for concurrent reads.
class Triangulation {
public:
  /// Builds the mesh from raw vertex/triangle data and validates the
  /// conformity invariants. Throws MeshError on violation.
  Triangulation(std::vector<Eigen::Vector2d> vertices,
                std::vector<std::array<int, 3>> triangles);

  /// Unit square [0,1]^2 split into n x n cells of two right-isosceles
  /// triangles each. Requires n >= 1.
  static Triangulation structured_square(int n);

  /// L-shaped domain (-1,1)^2 \ [0,1)x(-1,0] as the canonical 6-triangle
  /// mesh fanned around the reentrant corner at the origin.
  static Triangulation lshape();

  /// Plain-text mesh file: "nv nt" header, nv lines "x y", nt lines
  /// "i j k" (0-based, counterclockwise). Rejects malformed input with
  /// line-numbered messages and validates all invariants.
  static Triangulation load(const std::filesystem::path& file);
  void save(const std::filesystem::path& file) const;

  /// Red refinement: each triangle splits into 4 congruent children via
  /// edge midpoints. Child triangles carry their parent's index.
  Triangulation refined() const;

  int vertex_count() const { return static_cast<int>(vertices_.size()); }
  int triangle_count() const { return static_cast<int>(triangles_.size()); }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  int interior_edge_count() const { return interior_edge_count_; }
  int interior_vertex_count() const { return interior_vertex_count_; }

  const Eigen::Vector2d& vertex(int v) const { return vertices_[v]; }
  const std::array<int, 3>& triangle(int t) const { return triangles_[t]; }
  const Edge& edge(int e) const { return edges_[e]; }

  bool vertex_on_boundary(int v) const { return vertex_boundary_[v]; }

  /// Edge opposite the local vertex `lv` of triangle `t`.
  int triangle_edge(int t, int lv) const { return tri_edges_[t][lv]; }
  /// Triangles attached to vertex `v`, ascending indices.
  const std::vector<int>& triangles_at_vertex(int v) const {
    return vertex_tris_[v];
  }

  double area(int t) const { return tri_area_[t]; }
  double domain_area() const { return total_area_; }
  double h(int t) const { return tri_diameter_[t]; }
  double h_max() const { return h_max_; }
  /// max_K h_K / inradius_K over all triangles.
  double shape_regularity() const { return shape_regularity_; }

  Eigen::Vector2d centroid(int t) const;
  /// Barycentric coordinates of x with respect to triangle t.
  Eigen::Vector3d barycentric(int t, const Eigen::Vector2d& x) const;
  bool contains(int t, const Eigen::Vector2d& x, double tol = 1e-12) const;
  /// Index of a triangle whose closure contains x; -1 if outside.
  int locate(const Eigen::Vector2d& x) const;

  /// Parent triangle in the mesh this one was refined from; -1 for verbatim
  /// constructed meshes.
  int parent(int t) const { return parents_.empty() ? -1 : parents_[t]; }

  /// FNV-1a hash over the raw vertex and connectivity data. Used to key
  /// saved coefficient files to their mesh.
  std::uint64_t content_hash() const;

private:
  Triangulation() = default;
  void build_topology();  // edges, adjacency, flags, sizes; validates

  std::vector<Eigen::Vector2d> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<Edge> edges_;
  std::vector<std::array<int, 3>> tri_edges_;  // edge opposite local vertex
  std::vector<std::vector<int>> vertex_tris_;
  std::vector<bool> vertex_boundary_;
  std::vector<double> tri_area_;
  std::vector<double> tri_diameter_;
  std::vector<int> parents_;
  int interior_edge_count_ = 0;
  int interior_vertex_count_ = 0;
  double total_area_ = 0.0;
  double h_max_ = 0.0;
  double shape_regularity_ = 0.0;
};

}  // namespace biharm
