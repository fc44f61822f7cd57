#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stgen/geometry.hpp"

namespace stgen {

using Triangle = std::array<std::size_t, 3>;

/// Boundary edge with the gmsh physical tag it was read with (0 = untagged).
struct BoundaryEdge {
  std::array<std::size_t, 2> nodes{};
  int tag = 0;

  friend bool operator==(const BoundaryEdge&, const BoundaryEdge&) = default;
};

/// Immutable 2D triangular mesh.
///
/// Construction enforces the invariants every consumer relies on: triangles
/// are counter-clockwise with positive area, the boundary edge list is exactly
/// the set of edges used by one triangle, and the mesh is a single connected
/// component. Boundary edges are stored sorted by node pair, oriented so the
/// mesh interior lies on the left.
class Mesh {
 public:
  Mesh() = default;

  /// Builds a mesh; clockwise triangles are flipped. Tags given in `tagged`
  /// are attached to matching boundary edges (either orientation); entries
  /// that are not boundary edges are ignored.
  Mesh(std::vector<Point2> nodes, std::vector<Triangle> triangles,
       std::span<const BoundaryEdge> tagged = {});

  const std::vector<Point2>& nodes() const { return nodes_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const std::vector<BoundaryEdge>& boundary_edges() const { return boundary_edges_; }

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t triangle_count() const { return triangles_.size(); }

  std::array<Point2, 3> triangle_coords(std::size_t t) const;
  double triangle_area(std::size_t t) const;
  double total_area() const;

  /// Per-node flag: true when the node lies on a boundary edge.
  const std::vector<bool>& boundary_node_mask() const { return boundary_mask_; }
  std::vector<std::size_t> boundary_nodes() const;

  /// Boundary edges chained into closed loops of node indices (outer and holes).
  std::vector<std::vector<std::size_t>> boundary_loops() const;

  BoundingBox bounds() const { return bounding_box(nodes_); }

 private:
  std::vector<Point2> nodes_;
  std::vector<Triangle> triangles_;
  std::vector<BoundaryEdge> boundary_edges_;
  std::vector<bool> boundary_mask_;
};

/// Parses gmsh MSH 2.2 ASCII. Triangles (type 2) form the mesh; lines
/// (type 1) supply physical tags for boundary edges; points (type 15) are
/// skipped. Any other element type is rejected.
Mesh parse_msh(std::string_view text);
Mesh read_msh(const std::filesystem::path& path);

std::string write_msh(const Mesh& mesh);
void write_msh(const Mesh& mesh, const std::filesystem::path& path);

/// Structured grid split along the (i,j)-(i+1,j+1) diagonals. Boundary tags:
/// 1 bottom, 2 right, 3 top, 4 left.
Mesh generate_rect_mesh(double xmin, double xmax, double ymin, double ymax, std::size_t nx,
                        std::size_t ny);

/// Unstructured mesh of a simple polygon: boundary sampled at `spacing`,
/// interior filled with a hexagonal lattice, Delaunay-triangulated and clipped.
/// All boundary edges get `boundary_tag`.
Mesh generate_polygon_mesh(std::span<const Point2> polygon, double spacing, int boundary_tag = 1);

/// Probe locations with opaque string ids.
class PointSet {
 public:
  PointSet() = default;
  PointSet(std::vector<Point2> points, std::vector<std::string> ids);

  const std::vector<Point2>& points() const { return points_; }
  const std::vector<std::string>& ids() const { return ids_; }
  std::size_t size() const { return points_.size(); }

  /// Index of `id`, or size() when absent.
  std::size_t find(std::string_view id) const;

 private:
  std::vector<Point2> points_;
  std::vector<std::string> ids_;
};

/// CSV with header `id,x,y`.
PointSet parse_points_csv(std::string_view text);
PointSet read_points_csv(const std::filesystem::path& path);
std::string write_points_csv(const PointSet& ps);

/// Delaunay triangulation (Bowyer-Watson) of a point set. Triangles are
/// counter-clockwise, rotated so the smallest index comes first, and sorted.
/// Cocircular configurations resolve to the lexicographically smallest
/// triangles.
std::vector<Triangle> delaunay(std::span<const Point2> points);
std::vector<Triangle> delaunay(const PointSet& ps);

/// Undirected edges (i < j) of a triangle list, sorted.
std::vector<std::array<std::size_t, 2>> triangle_edges(std::span<const Triangle> triangles);

}  // namespace stgen
