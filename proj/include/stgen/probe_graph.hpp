#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stgen/field_series.hpp"
#include "stgen/mesh.hpp"

namespace stgen {

struct ProbeLocation {
  std::size_t triangle = 0;
  std::array<std::size_t, 3> vertices{};
  std::array<double, 3> lambda{};  ///< barycentric weights of the triangle's vertices
};

/// Probe positions inside a fixed mesh, computed once and reused for every state.
struct ProbeMap {
  std::vector<ProbeLocation> probes;
  std::size_t node_count = 0;  ///< mesh node count the map refers to
};

/// Points on a boundary edge go to the lowest-index containing triangle.
/// Points farther than 1e-9·diameter from the mesh are rejected.
ProbeMap locate_points(const Mesh& mesh, const PointSet& ps);

/// Dense [T, N, d] tensor, row-major.
struct Tensor3 {
  std::size_t t = 0, n = 0, d = 0;
  std::vector<double> data;

  Tensor3() = default;
  Tensor3(std::size_t t_, std::size_t n_, std::size_t d_) : t(t_), n(n_), d(d_), data(t_ * n_ * d_, 0.0) {}

  double& operator()(std::size_t i, std::size_t j, std::size_t k) { return data[(i * n + j) * d + k]; }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const { return data[(i * n + j) * d + k]; }
  std::array<std::size_t, 3> shape() const { return {t, n, d}; }
  friend bool operator==(const Tensor3&, const Tensor3&) = default;
};

/// Samples states [first, size()) of the series at the probes.
Tensor3 sample_series(const FieldSeries& series, const ProbeMap& pm, std::size_t first = 0);

struct Edge {
  std::size_t src;  ///< position in the graph's point list
  std::size_t dst;
  double weight;    ///< 1/metres

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct Graph {
  PointSet nodes;
  std::vector<Edge> edges;  ///< sorted by (src, dst), both directions present
};

using IdPair = std::array<std::string, 2>;

/// Inverse-distance weighted graph from undirected id pairs.
Graph build_graph_adjacency(const PointSet& ps, std::span<const IdPair> pairs);
/// Inverse-distance weighted graph over the Delaunay edges of the points.
Graph build_graph_delaunay(const PointSet& ps);

/// `src,dst` header, each undirected pair once.
std::vector<IdPair> parse_pairs_csv(std::string_view text);
std::vector<IdPair> read_pairs_csv(const std::filesystem::path& path);
std::string write_pairs_csv(std::span<const IdPair> pairs);

/// `src,dst,weight` with point ids, both directions.
std::string write_edges_csv(const Graph& g);
std::vector<Edge> parse_edges_csv(std::string_view text, const PointSet& nodes);

}  // namespace stgen
