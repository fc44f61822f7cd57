#include "stgen/probe_graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "stgen/error.hpp"
#include "text_util.hpp"

namespace stgen {

namespace {

std::array<double, 3> barycentric(const std::array<Point2, 3>& c, Point2 p) {
  const double det = orient2d(c[0], c[1], c[2]);
  const double l1 = orient2d(p, c[1], c[2]) / det;
  const double l2 = orient2d(c[0], p, c[2]) / det;
  return {l1, l2, 1.0 - l1 - l2};
}

double distance_to_triangle(const std::array<Point2, 3>& c, Point2 p) {
  return std::min({segment_distance(p, c[0], c[1]), segment_distance(p, c[1], c[2]), segment_distance(p, c[2], c[0])});
}

}  // namespace

ProbeMap locate_points(const Mesh& mesh, const PointSet& ps) {
  const std::size_t nt = mesh.triangle_count();
  std::vector<BoundingBox> boxes(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    const auto c = mesh.triangle_coords(t);
    boxes[t] = bounding_box(c);
  }
  const double diam = mesh.bounds().diameter();
  const double snap = 1e-9 * diam;

  ProbeMap pm;
  pm.node_count = mesh.node_count();
  pm.probes.reserve(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const Point2 p = ps.points()[i];
    bool found = false;
    double best_dist = std::numeric_limits<double>::infinity();
    std::size_t best_tri = 0;
    for (std::size_t t = 0; t < nt && !found; ++t) {
      if (!boxes[t].contains(p, snap)) continue;
      const auto c = mesh.triangle_coords(t);
      const auto lam = barycentric(c, p);
      // Relative slack absorbs rounding for points on shared edges.
      if (lam[0] >= -1e-12 && lam[1] >= -1e-12 && lam[2] >= -1e-12) {
        pm.probes.push_back({t, mesh.triangles()[t], lam});
        found = true;
        break;
      }
      const double d = distance_to_triangle(c, p);
      if (d < best_dist) {
        best_dist = d;
        best_tri = t;
      }
    }
    if (found) continue;
    if (best_dist <= snap) {
      // Project onto the nearest triangle by clamping the weights.
      const auto c = mesh.triangle_coords(best_tri);
      auto lam = barycentric(c, p);
      for (auto& l : lam) l = std::max(l, 0.0);
      const double s = lam[0] + lam[1] + lam[2];
      for (auto& l : lam) l /= s;
      pm.probes.push_back({best_tri, mesh.triangles()[best_tri], lam});
      continue;
    }
    double dist = best_dist;
    if (!std::isfinite(dist)) {
      for (std::size_t t = 0; t < nt; ++t) dist = std::min(dist, distance_to_triangle(mesh.triangle_coords(t), p));
    }
    throw InvalidArgument("point '" + ps.ids()[i] + "' lies outside the mesh (distance " + std::to_string(dist) +
                          " m to the nearest element)");
  }
  return pm;
}

Tensor3 sample_series(const FieldSeries& series, const ProbeMap& pm, std::size_t first) {
  if (series.node_count != pm.node_count) throw InvalidArgument("series and probe map refer to different meshes");
  if (first > series.size()) throw InvalidArgument("first sampled state out of range");
  const std::size_t d = series.components;
  Tensor3 out(series.size() - first, pm.probes.size(), d);
  for (std::size_t k = first; k < series.size(); ++k) {
    for (std::size_t c = 0; c < d; ++c) {
      const auto v = series.component(k, c);
      for (std::size_t j = 0; j < pm.probes.size(); ++j) {
        const auto& p = pm.probes[j];
        out(k - first, j, c) = p.lambda[0] * v[p.vertices[0]] + p.lambda[1] * v[p.vertices[1]] +
                               p.lambda[2] * v[p.vertices[2]];
      }
    }
  }
  return out;
}

namespace {

Graph graph_from_pairs(const PointSet& ps, const std::vector<std::array<std::size_t, 2>>& pairs) {
  Graph g;
  g.nodes = ps;
  g.edges.reserve(2 * pairs.size());
  for (const auto& [a, b] : pairs) {
    const double dist = distance(ps.points()[a], ps.points()[b]);
    if (!(dist > 0.0)) {
      throw InvalidArgument("points '" + ps.ids()[a] + "' and '" + ps.ids()[b] + "' coincide");
    }
    g.edges.push_back({a, b, 1.0 / dist});
    g.edges.push_back({b, a, 1.0 / dist});
  }
  std::sort(g.edges.begin(), g.edges.end(),
            [](const Edge& l, const Edge& r) { return l.src != r.src ? l.src < r.src : l.dst < r.dst; });
  return g;
}

}  // namespace

Graph build_graph_adjacency(const PointSet& ps, std::span<const IdPair> pairs) {
  std::set<std::array<std::size_t, 2>> unique;
  for (const auto& [a, b] : pairs) {
    const auto ia = ps.find(a);
    const auto ib = ps.find(b);
    if (ia == ps.size()) throw InvalidArgument("unknown point id '" + a + "' in pair list");
    if (ib == ps.size()) throw InvalidArgument("unknown point id '" + b + "' in pair list");
    if (ia == ib) throw InvalidArgument("self pair for point '" + a + "'");
    unique.insert({std::min(ia, ib), std::max(ia, ib)});
  }
  return graph_from_pairs(ps, {unique.begin(), unique.end()});
}

Graph build_graph_delaunay(const PointSet& ps) {
  const auto tris = delaunay(ps);
  return graph_from_pairs(ps, triangle_edges(tris));
}

std::vector<IdPair> parse_pairs_csv(std::string_view text) {
  const auto lines = detail::split_lines(text);
  if (lines.empty()) throw ParseError("pairs CSV: empty file");
  std::string_view header = lines[0];
  if (header.starts_with("\xEF\xBB\xBF")) header.remove_prefix(3);
  const auto cols = detail::split_csv(header);
  if (cols.size() != 2 || detail::trim(cols[0]) != "src" || detail::trim(cols[1]) != "dst") {
    throw ParseError("pairs CSV: expected header 'src,dst'");
  }
  std::vector<IdPair> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (detail::trim(lines[i]).empty()) continue;
    const auto f = detail::split_csv(lines[i]);
    if (f.size() != 2) throw ParseError("pairs CSV line " + std::to_string(i + 1) + ": expected 2 fields");
    out.push_back({std::string(detail::trim(f[0])), std::string(detail::trim(f[1]))});
  }
  return out;
}

std::vector<IdPair> read_pairs_csv(const std::filesystem::path& path) {
  return parse_pairs_csv(detail::read_file(path));
}

std::string write_pairs_csv(std::span<const IdPair> pairs) {
  std::string out = "src,dst\n";
  for (const auto& [a, b] : pairs) out += detail::csv_field(a) + ',' + detail::csv_field(b) + '\n';
  return out;
}

std::string write_edges_csv(const Graph& g) {
  std::string out = "src,dst,weight\n";
  for (const auto& e : g.edges) {
    out += detail::csv_field(g.nodes.ids()[e.src]) + ',' + detail::csv_field(g.nodes.ids()[e.dst]) + ',' +
           detail::format_double(e.weight) + '\n';
  }
  return out;
}

std::vector<Edge> parse_edges_csv(std::string_view text, const PointSet& nodes) {
  const auto lines = detail::split_lines(text);
  if (lines.empty()) throw ParseError("edges CSV: empty file");
  const auto cols = detail::split_csv(lines[0]);
  if (cols.size() != 3 || cols[0] != "src" || cols[1] != "dst" || cols[2] != "weight") {
    throw ParseError("edges CSV: expected header 'src,dst,weight'");
  }
  std::vector<Edge> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (detail::trim(lines[i]).empty()) continue;
    const auto f = detail::split_csv(lines[i]);
    if (f.size() != 3) throw ParseError("edges CSV line " + std::to_string(i + 1) + ": expected 3 fields");
    const auto a = nodes.find(f[0]);
    const auto b = nodes.find(f[1]);
    if (a == nodes.size() || b == nodes.size()) {
      throw ParseError("edges CSV line " + std::to_string(i + 1) + ": unknown node id");
    }
    out.push_back({a, b, detail::parse_double(f[2], "weight")});
  }
  return out;
}

}  // namespace stgen
