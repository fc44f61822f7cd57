#include "stgen/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <utility>

#include "stgen/error.hpp"
#include "text_util.hpp"

namespace stgen {

namespace {

using EdgeKey = std::pair<std::size_t, std::size_t>;

EdgeKey edge_key(std::size_t a, std::size_t b) { return a < b ? EdgeKey{a, b} : EdgeKey{b, a}; }

}  // namespace

Mesh::Mesh(std::vector<Point2> nodes, std::vector<Triangle> triangles,
           std::span<const BoundaryEdge> tagged)
    : nodes_(std::move(nodes)), triangles_(std::move(triangles)) {
  const std::size_t n = nodes_.size();
  if (triangles_.empty()) throw InvalidArgument("mesh has no triangles");
  for (const auto& p : nodes_) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw InvalidArgument("non-finite node coordinate");
  }

  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    auto& tri = triangles_[t];
    for (auto v : tri) {
      if (v >= n) {
        throw InvalidArgument("triangle " + std::to_string(t) + " references missing node " +
                              std::to_string(v));
      }
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
      throw InvalidArgument("triangle " + std::to_string(t) + " repeats a node");
    }
    const double a = orient2d(nodes_[tri[0]], nodes_[tri[1]], nodes_[tri[2]]);
    const double scale = std::max({distance(nodes_[tri[0]], nodes_[tri[1]]),
                                   distance(nodes_[tri[1]], nodes_[tri[2]]),
                                   distance(nodes_[tri[2]], nodes_[tri[0]])});
    if (std::abs(a) <= 1e-14 * scale * scale) {
      throw InvalidArgument("triangle " + std::to_string(t) + " has zero area");
    }
    if (a < 0) std::swap(tri[1], tri[2]);
  }

  // Edge use counts; boundary edges keep the orientation of their triangle.
  std::map<EdgeKey, std::pair<int, std::array<std::size_t, 2>>> uses;
  for (const auto& tri : triangles_) {
    for (int k = 0; k < 3; ++k) {
      const std::size_t a = tri[k];
      const std::size_t b = tri[(k + 1) % 3];
      auto& entry = uses[edge_key(a, b)];
      entry.first += 1;
      entry.second = {a, b};
    }
  }

  std::map<EdgeKey, int> tags;
  for (const auto& e : tagged) tags[edge_key(e.nodes[0], e.nodes[1])] = e.tag;

  boundary_mask_.assign(n, false);
  for (const auto& [key, entry] : uses) {
    if (entry.first > 2) {
      throw InvalidArgument("non-manifold edge (" + std::to_string(key.first) + ", " +
                            std::to_string(key.second) + ")");
    }
    if (entry.first == 1) {
      const auto it = tags.find(key);
      boundary_edges_.push_back({entry.second, it == tags.end() ? 0 : it->second});
      boundary_mask_[key.first] = true;
      boundary_mask_[key.second] = true;
    }
  }

  // Connectivity over triangle-shared nodes; isolated nodes form their own component.
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& tri : triangles_) {
    parent[find(tri[1])] = find(tri[0]);
    parent[find(tri[2])] = find(tri[0]);
  }
  const std::size_t root = find(0);
  for (std::size_t i = 1; i < n; ++i) {
    if (find(i) != root) throw InvalidArgument("mesh is not connected (node " + std::to_string(i) + ")");
  }
}

std::array<Point2, 3> Mesh::triangle_coords(std::size_t t) const {
  const auto& tri = triangles_[t];
  return {nodes_[tri[0]], nodes_[tri[1]], nodes_[tri[2]]};
}

double Mesh::triangle_area(std::size_t t) const {
  const auto c = triangle_coords(t);
  return signed_area(c[0], c[1], c[2]);
}

double Mesh::total_area() const {
  double a = 0.0;
  for (std::size_t t = 0; t < triangles_.size(); ++t) a += triangle_area(t);
  return a;
}

std::vector<std::size_t> Mesh::boundary_nodes() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < boundary_mask_.size(); ++i) {
    if (boundary_mask_[i]) out.push_back(i);
  }
  return out;
}

std::vector<std::vector<std::size_t>> Mesh::boundary_loops() const {
  // A node can start several boundary edges only at pinch points; take them in order.
  std::multimap<std::size_t, std::size_t> next;
  for (const auto& e : boundary_edges_) next.emplace(e.nodes[0], e.nodes[1]);
  std::vector<std::vector<std::size_t>> loops;
  while (!next.empty()) {
    auto it = next.begin();
    const std::size_t start = it->first;
    std::vector<std::size_t> loop{start};
    std::size_t cur = it->second;
    next.erase(it);
    while (cur != start) {
      loop.push_back(cur);
      auto nit = next.find(cur);
      if (nit == next.end()) throw InvalidArgument("open boundary chain");
      cur = nit->second;
      next.erase(nit);
    }
    loops.push_back(std::move(loop));
  }
  return loops;
}

// ---------------------------------------------------------------------------
// gmsh MSH 2.2

namespace {

struct MshCursor {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;

  bool done() const { return pos >= lines.size(); }
  std::string_view peek() const { return detail::trim(lines[pos]); }
  std::string_view next(std::string_view section) {
    if (done()) throw ParseError("unexpected end of file in " + std::string(section));
    return detail::trim(lines[pos++]);
  }
};

}  // namespace

Mesh parse_msh(std::string_view text) {
  MshCursor cur{detail::split_lines(text)};
  bool have_format = false;
  std::vector<Point2> nodes;
  std::unordered_map<long long, std::size_t> node_index;
  std::vector<std::array<long long, 3>> raw_tris;
  std::vector<std::pair<std::array<long long, 2>, int>> raw_lines;
  bool have_nodes = false;
  bool have_elements = false;

  auto expect_end = [&](std::string_view section, std::string_view end_tag) {
    const auto line = cur.next(section);
    if (line != end_tag) {
      throw ParseError(std::string(section) + ": expected " + std::string(end_tag) + ", got '" +
                       std::string(line) + "'");
    }
  };

  while (!cur.done()) {
    const auto header = cur.next("file");
    if (header.empty()) continue;
    if (header.front() != '$') {
      throw ParseError("malformed section header '" + std::string(header) + "'");
    }
    if (header == "$MeshFormat") {
      const auto tok = detail::split_ws(cur.next("$MeshFormat"));
      if (tok.size() != 3) throw ParseError("$MeshFormat: expected 'version file-type data-size'");
      if (tok[0] != "2.2" && tok[0] != "2.2.0") {
        throw ParseError("$MeshFormat: unsupported MSH version " + std::string(tok[0]) +
                         " (only 2.2 is supported)");
      }
      if (tok[1] != "0") throw ParseError("$MeshFormat: only ASCII (file-type 0) is supported");
      expect_end("$MeshFormat", "$EndMeshFormat");
      have_format = true;
    } else if (header == "$Nodes") {
      const auto count = detail::parse_int(cur.next("$Nodes"), "$Nodes count");
      if (count < 0) throw ParseError("$Nodes: negative count");
      nodes.reserve(static_cast<std::size_t>(count));
      std::size_t listed = 0;
      while (!cur.done() && cur.peek() != "$EndNodes") {
        const auto line = cur.next("$Nodes");
        if (line.empty()) continue;
        const auto tok = detail::split_ws(line);
        if (tok.size() < 3) throw ParseError("$Nodes: expected 'id x y z', got '" + std::string(line) + "'");
        const auto id = detail::parse_int(tok[0], "$Nodes id");
        if (!node_index.emplace(id, nodes.size()).second) {
          throw ParseError("$Nodes: duplicate node id " + std::to_string(id));
        }
        nodes.push_back({detail::parse_double(tok[1], "$Nodes x"), detail::parse_double(tok[2], "$Nodes y")});
        ++listed;
      }
      if (listed != static_cast<std::size_t>(count)) {
        throw ParseError("$Nodes: header declares " + std::to_string(count) + " nodes, found " +
                         std::to_string(listed));
      }
      expect_end("$Nodes", "$EndNodes");
      have_nodes = true;
    } else if (header == "$Elements") {
      const auto count = detail::parse_int(cur.next("$Elements"), "$Elements count");
      if (count < 0) throw ParseError("$Elements: negative count");
      std::size_t listed = 0;
      while (!cur.done() && cur.peek() != "$EndElements") {
        const auto line = cur.next("$Elements");
        if (line.empty()) continue;
        const auto tok = detail::split_ws(line);
        if (tok.size() < 3) throw ParseError("$Elements: malformed element '" + std::string(line) + "'");
        const auto type = detail::parse_int(tok[1], "$Elements type");
        const auto ntags = detail::parse_int(tok[2], "$Elements tag count");
        if (ntags < 0) throw ParseError("$Elements: negative tag count");
        const std::size_t first_node = 3 + static_cast<std::size_t>(ntags);
        auto node_ids = [&](std::size_t k) {
          if (tok.size() != first_node + k) {
            throw ParseError("$Elements: element '" + std::string(line) + "' has wrong node count");
          }
          std::vector<long long> ids;
          for (std::size_t i = 0; i < k; ++i) ids.push_back(detail::parse_int(tok[first_node + i], "$Elements node"));
          return ids;
        };
        if (type == 2) {
          const auto ids = node_ids(3);
          raw_tris.push_back({ids[0], ids[1], ids[2]});
        } else if (type == 1) {
          const auto ids = node_ids(2);
          const int tag = ntags > 0 ? static_cast<int>(detail::parse_int(tok[3], "$Elements tag")) : 0;
          raw_lines.push_back({{ids[0], ids[1]}, tag});
        } else if (type == 15) {
          // geometry points carry no mesh information
        } else {
          throw ParseError("$Elements: unsupported element type " + std::to_string(type));
        }
        ++listed;
      }
      if (listed != static_cast<std::size_t>(count)) {
        throw ParseError("$Elements: header declares " + std::to_string(count) + " elements, found " +
                         std::to_string(listed));
      }
      expect_end("$Elements", "$EndElements");
      have_elements = true;
    } else {
      // Skip unknown sections ($PhysicalNames, $NodeData, ...) up to their end tag.
      const std::string end_tag = "$End" + std::string(header.substr(1));
      while (true) {
        const auto line = cur.next(header);
        if (line == end_tag) break;
      }
    }
  }

  if (!have_format) throw ParseError("missing $MeshFormat section");
  if (!have_nodes) throw ParseError("missing $Nodes section");
  if (!have_elements) throw ParseError("missing $Elements section");

  auto resolve = [&](long long id) {
    const auto it = node_index.find(id);
    if (it == node_index.end()) {
      throw ParseError("$Elements: element references missing node " + std::to_string(id));
    }
    return it->second;
  };
  std::vector<Triangle> tris;
  tris.reserve(raw_tris.size());
  for (const auto& t : raw_tris) tris.push_back({resolve(t[0]), resolve(t[1]), resolve(t[2])});
  std::vector<BoundaryEdge> tagged;
  for (const auto& [ids, tag] : raw_lines) tagged.push_back({{resolve(ids[0]), resolve(ids[1])}, tag});

  try {
    return Mesh(std::move(nodes), std::move(tris), tagged);
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("invalid mesh: ") + e.what());
  }
}

Mesh read_msh(const std::filesystem::path& path) { return parse_msh(detail::read_file(path)); }

std::string write_msh(const Mesh& mesh) {
  std::ostringstream out;
  out << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n";
  out << "$Nodes\n" << mesh.node_count() << "\n";
  for (std::size_t i = 0; i < mesh.node_count(); ++i) {
    const auto& p = mesh.nodes()[i];
    out << i + 1 << ' ' << detail::format_double(p.x) << ' ' << detail::format_double(p.y) << " 0\n";
  }
  out << "$EndNodes\n";
  const auto& edges = mesh.boundary_edges();
  out << "$Elements\n" << edges.size() + mesh.triangle_count() << "\n";
  std::size_t id = 1;
  for (const auto& e : edges) {
    out << id++ << " 1 2 " << e.tag << ' ' << e.tag << ' ' << e.nodes[0] + 1 << ' ' << e.nodes[1] + 1 << "\n";
  }
  for (const auto& t : mesh.triangles()) {
    out << id++ << " 2 2 0 0 " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << "\n";
  }
  out << "$EndElements\n";
  return out.str();
}

void write_msh(const Mesh& mesh, const std::filesystem::path& path) {
  detail::write_file(path, write_msh(mesh));
}

// ---------------------------------------------------------------------------
// Generators

Mesh generate_rect_mesh(double xmin, double xmax, double ymin, double ymax, std::size_t nx,
                        std::size_t ny) {
  if (!(xmax > xmin) || !(ymax > ymin)) throw InvalidArgument("degenerate rectangle extent");
  if (nx < 1 || ny < 1) throw InvalidArgument("rectangle mesh needs nx, ny >= 1");
  std::vector<Point2> nodes;
  nodes.reserve((nx + 1) * (ny + 1));
  for (std::size_t j = 0; j <= ny; ++j) {
    const double y = j == ny ? ymax : ymin + (ymax - ymin) * static_cast<double>(j) / static_cast<double>(ny);
    for (std::size_t i = 0; i <= nx; ++i) {
      const double x = i == nx ? xmax : xmin + (xmax - xmin) * static_cast<double>(i) / static_cast<double>(nx);
      nodes.push_back({x, y});
    }
  }
  auto id = [nx](std::size_t i, std::size_t j) { return j * (nx + 1) + i; };
  std::vector<Triangle> tris;
  tris.reserve(2 * nx * ny);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      tris.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      tris.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  std::vector<BoundaryEdge> tagged;
  for (std::size_t i = 0; i < nx; ++i) {
    tagged.push_back({{id(i, 0), id(i + 1, 0)}, 1});
    tagged.push_back({{id(i, ny), id(i + 1, ny)}, 3});
  }
  for (std::size_t j = 0; j < ny; ++j) {
    tagged.push_back({{id(nx, j), id(nx, j + 1)}, 2});
    tagged.push_back({{id(0, j), id(0, j + 1)}, 4});
  }
  return Mesh(std::move(nodes), std::move(tris), tagged);
}

Mesh generate_polygon_mesh(std::span<const Point2> polygon, double spacing, int boundary_tag) {
  if (polygon.size() < 3) throw InvalidArgument("polygon needs at least 3 vertices");
  if (!(spacing > 0)) throw InvalidArgument("mesh spacing must be positive");
  std::vector<Point2> ring(polygon.begin(), polygon.end());
  if (polygon_area(ring) < 0) std::reverse(ring.begin(), ring.end());

  std::vector<Point2> pts;
  const std::size_t nv = ring.size();
  for (std::size_t i = 0; i < nv; ++i) {
    const Point2 a = ring[i];
    const Point2 b = ring[(i + 1) % nv];
    const auto segs = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(distance(a, b) / spacing)));
    for (std::size_t k = 0; k < segs; ++k) {
      pts.push_back(a + (static_cast<double>(k) / static_cast<double>(segs)) * (b - a));
    }
  }
  const std::size_t n_boundary = pts.size();

  auto boundary_distance = [&](Point2 p) {
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < nv; ++i) d = std::min(d, segment_distance(p, ring[i], ring[(i + 1) % nv]));
    return d;
  };
  const auto box = bounding_box(ring);
  const double dy = spacing * std::sqrt(3.0) / 2.0;
  std::size_t row = 0;
  for (double y = box.lo.y + dy / 2; y < box.hi.y; y += dy, ++row) {
    const double shift = (row % 2 == 0) ? 0.0 : spacing / 2;
    for (double x = box.lo.x + shift; x < box.hi.x; x += spacing) {
      const Point2 p{x, y};
      if (point_in_polygon(ring, p) && boundary_distance(p) > 0.6 * spacing) pts.push_back(p);
    }
  }

  const auto all = delaunay(pts);
  std::vector<Triangle> kept;
  for (const auto& t : all) {
    const Point2 c = centroid(pts[t[0]], pts[t[1]], pts[t[2]]);
    if (point_in_polygon(ring, c)) kept.push_back(t);
  }
  std::vector<BoundaryEdge> tagged;
  for (std::size_t i = 0; i < n_boundary; ++i) tagged.push_back({{i, (i + 1) % n_boundary}, boundary_tag});
  return Mesh(std::move(pts), std::move(kept), tagged);
}

// ---------------------------------------------------------------------------
// Point sets

PointSet::PointSet(std::vector<Point2> points, std::vector<std::string> ids)
    : points_(std::move(points)), ids_(std::move(ids)) {
  if (points_.size() != ids_.size()) throw InvalidArgument("point and id counts differ");
  std::vector<std::string_view> sorted(ids_.begin(), ids_.end());
  std::sort(sorted.begin(), sorted.end());
  const auto dup = std::adjacent_find(sorted.begin(), sorted.end());
  if (dup != sorted.end()) throw InvalidArgument("duplicate point id '" + std::string(*dup) + "'");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!std::isfinite(points_[i].x) || !std::isfinite(points_[i].y)) {
      throw InvalidArgument("point '" + ids_[i] + "' has non-finite coordinates");
    }
  }
}

std::size_t PointSet::find(std::string_view id) const {
  const auto it = std::find(ids_.begin(), ids_.end(), id);
  return static_cast<std::size_t>(it - ids_.begin());
}

PointSet parse_points_csv(std::string_view text) {
  auto lines = detail::split_lines(text);
  if (lines.empty()) throw ParseError("points CSV: empty file");
  std::string_view header = lines[0];
  if (header.starts_with("\xEF\xBB\xBF")) header.remove_prefix(3);
  const auto cols = detail::split_csv(header);
  if (cols.size() != 3 || detail::trim(cols[0]) != "id" || detail::trim(cols[1]) != "x" ||
      detail::trim(cols[2]) != "y") {
    throw ParseError("points CSV: expected header 'id,x,y'");
  }
  std::vector<Point2> pts;
  std::vector<std::string> ids;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (detail::trim(lines[i]).empty()) continue;
    const auto f = detail::split_csv(lines[i]);
    if (f.size() != 3) throw ParseError("points CSV line " + std::to_string(i + 1) + ": expected 3 fields");
    ids.emplace_back(detail::trim(f[0]));
    pts.push_back({detail::parse_double(f[1], "x"), detail::parse_double(f[2], "y")});
  }
  try {
    return PointSet(std::move(pts), std::move(ids));
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("points CSV: ") + e.what());
  }
}

PointSet read_points_csv(const std::filesystem::path& path) {
  return parse_points_csv(detail::read_file(path));
}

std::string write_points_csv(const PointSet& ps) {
  std::string out = "id,x,y\n";
  for (std::size_t i = 0; i < ps.size(); ++i) {
    out += detail::csv_field(ps.ids()[i]) + ',' + detail::format_double(ps.points()[i].x) + ',' +
           detail::format_double(ps.points()[i].y) + '\n';
  }
  return out;
}

std::vector<Triangle> delaunay(const PointSet& ps) { return delaunay(ps.points()); }

std::vector<std::array<std::size_t, 2>> triangle_edges(std::span<const Triangle> triangles) {
  std::vector<std::array<std::size_t, 2>> edges;
  edges.reserve(triangles.size() * 3);
  for (const auto& t : triangles) {
    for (int k = 0; k < 3; ++k) {
      const auto a = t[k];
      const auto b = t[(k + 1) % 3];
      edges.push_back({std::min(a, b), std::max(a, b)});
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

}  // namespace stgen
