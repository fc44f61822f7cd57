// Bowyer-Watson triangulation with a super-triangle, followed by hull repair
// and a Lawson flip pass that also settles cocircular ties.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>

#include "stgen/error.hpp"
#include "stgen/mesh.hpp"

namespace stgen {

namespace {

constexpr double kIncircleTol = 1e-9;

struct Tri {
  std::array<std::size_t, 3> v;
  bool alive = true;
};

Triangle canonical(Triangle t) {
  // Keep orientation, rotate smallest index first.
  while (t[0] > t[1] || t[0] > t[2]) t = {t[1], t[2], t[0]};
  return t;
}

Triangle sorted_triple(Triangle t) {
  std::sort(t.begin(), t.end());
  return t;
}

double quad_scale4(const std::vector<Point2>& p, std::size_t a, std::size_t b, std::size_t c,
                   std::size_t d) {
  double s = 0.0;
  for (auto [i, j] : {std::pair{a, b}, {b, c}, {c, a}, {a, d}, {b, d}, {c, d}}) {
    const Point2 e = p[i] - p[j];
    s = std::max(s, dot(e, e));
  }
  return s * s;
}

class BowyerWatson {
 public:
  BowyerWatson(std::vector<Point2> pts, double super_scale) : p_(std::move(pts)), n_(p_.size()) {
    const double m = super_scale;
    p_.push_back({-3 * m, -m});
    p_.push_back({3 * m, -m});
    p_.push_back({0.0, 3 * m});
    tris_.push_back({{n_, n_ + 1, n_ + 2}});
  }

  void insert_all() {
    for (std::size_t i = 0; i < n_; ++i) insert(i);
  }

  std::vector<Triangle> finish() {
    std::vector<Triangle> out;
    for (const auto& t : tris_) {
      if (!t.alive) continue;
      if (t.v[0] >= n_ || t.v[1] >= n_ || t.v[2] >= n_) continue;
      out.push_back(t.v);
    }
    return out;
  }

  const std::vector<Point2>& points() const { return p_; }

 private:
  bool in_circumcircle(const Tri& t, std::size_t q) const {
    const auto& a = p_[t.v[0]];
    const auto& b = p_[t.v[1]];
    const auto& c = p_[t.v[2]];
    return incircle(a, b, c, p_[q]) > 0.0;
  }

  void insert(std::size_t q) {
    std::vector<std::size_t> bad;
    for (std::size_t t = 0; t < tris_.size(); ++t) {
      if (tris_[t].alive && in_circumcircle(tris_[t], q)) bad.push_back(t);
    }
    // Cavity boundary: directed edges of bad triangles whose twin is not bad.
    std::map<std::pair<std::size_t, std::size_t>, int> edges;
    for (auto t : bad) {
      const auto& v = tris_[t].v;
      for (int k = 0; k < 3; ++k) edges[{v[k], v[(k + 1) % 3]}] += 1;
    }
    for (auto t : bad) tris_[t].alive = false;
    for (const auto& [e, cnt] : edges) {
      if (edges.count({e.second, e.first})) continue;
      Tri nt{{e.first, e.second, q}};
      if (orient2d(p_[e.first], p_[e.second], p_[q]) <= 0) continue;
      tris_.push_back(nt);
    }
    compact();
  }

  void compact() {
    if (tris_.size() < 64) return;
    std::size_t dead = 0;
    for (const auto& t : tris_) dead += t.alive ? 0 : 1;
    if (dead * 2 > tris_.size()) {
      std::erase_if(tris_, [](const Tri& t) { return !t.alive; });
    }
  }

  std::vector<Point2> p_;
  std::size_t n_;
  std::vector<Tri> tris_;
};

using DirEdge = std::pair<std::size_t, std::size_t>;

// Fills boundary pockets so the triangulation covers the convex hull.
void fill_hull_pockets(const std::vector<Point2>& p, std::vector<Triangle>& tris) {
  for (int guard = 0; guard < 1'000'000; ++guard) {
    std::set<DirEdge> dir;
    for (const auto& t : tris) {
      for (int k = 0; k < 3; ++k) dir.insert({t[k], t[(k + 1) % 3]});
    }
    std::map<std::size_t, std::size_t> next;
    for (const auto& e : dir) {
      if (!dir.count({e.second, e.first})) next[e.first] = e.second;
    }
    bool filled = false;
    for (const auto& [a, b] : next) {
      const auto it = next.find(b);
      if (it == next.end()) continue;
      const std::size_t c = it->second;
      if (c == a) continue;
      const double o = orient2d(p[a], p[b], p[c]);
      const double scale = distance(p[a], p[b]) * distance(p[b], p[c]);
      if (o >= -1e-12 * scale) continue;
      // Triangle (a, c, b) lies outside the current cover; it must be empty.
      bool empty = true;
      for (std::size_t q = 0; q < p.size() && empty; ++q) {
        if (q == a || q == b || q == c) continue;
        if (orient2d(p[a], p[c], p[q]) > 0 && orient2d(p[c], p[b], p[q]) > 0 &&
            orient2d(p[b], p[a], p[q]) > 0) {
          empty = false;
        }
      }
      if (!empty) continue;
      tris.push_back({a, c, b});
      filled = true;
      break;
    }
    if (!filled) return;
  }
  throw NumericalError("delaunay: hull repair did not terminate");
}

// Lawson flips until every interior edge is locally Delaunay; cocircular
// quads take the diagonal giving the lexicographically smaller triangle.
void legalize(const std::vector<Point2>& p, std::vector<Triangle>& tris) {
  for (std::size_t pass = 0; pass < 10 * tris.size() + 100; ++pass) {
    std::map<DirEdge, std::pair<std::size_t, int>> owner;
    for (std::size_t t = 0; t < tris.size(); ++t) {
      for (int k = 0; k < 3; ++k) owner[{tris[t][k], tris[t][(k + 1) % 3]}] = {t, k};
    }
    std::vector<bool> dirty(tris.size(), false);
    bool flipped = false;
    for (const auto& [e, tk] : owner) {
      const auto [a, b] = e;
      if (a > b) continue;
      const auto twin = owner.find({b, a});
      if (twin == owner.end()) continue;
      const auto [t1, k1] = tk;
      const auto [t2, k2] = twin->second;
      if (dirty[t1] || dirty[t2]) continue;
      const std::size_t c = tris[t1][(k1 + 2) % 3];
      const std::size_t d = tris[t2][(k2 + 2) % 3];
      // Flipped pair (a, d, c) and (d, b, c) must both be proper.
      const double o1 = orient2d(p[a], p[d], p[c]);
      const double o2 = orient2d(p[d], p[b], p[c]);
      const double s4 = quad_scale4(p, a, b, c, d);
      const double area_tol = 1e-12 * std::sqrt(s4);
      if (o1 <= area_tol || o2 <= area_tol) continue;
      const double ic = incircle(p[a], p[b], p[c], p[d]);
      bool flip = false;
      if (ic > kIncircleTol * s4) {
        flip = true;
      } else if (ic >= -kIncircleTol * s4) {
        const auto old_min = std::min(sorted_triple({a, b, c}), sorted_triple({b, a, d}));
        const auto new_min = std::min(sorted_triple({a, d, c}), sorted_triple({d, b, c}));
        flip = new_min < old_min;
      }
      if (!flip) continue;
      tris[t1] = {a, d, c};
      tris[t2] = {d, b, c};
      dirty[t1] = dirty[t2] = true;
      flipped = true;
    }
    if (!flipped) return;
  }
  throw NumericalError("delaunay: edge flipping did not terminate");
}

}  // namespace

std::vector<Triangle> delaunay(std::span<const Point2> points) {
  const std::size_t n = points.size();
  if (n < 3) throw InvalidArgument("delaunay needs at least 3 points, got " + std::to_string(n));
  for (const auto& q : points) {
    if (!std::isfinite(q.x) || !std::isfinite(q.y)) throw InvalidArgument("delaunay: non-finite point");
  }

  // Work in normalized coordinates: bounding box centred at the origin, unit extent.
  const auto box = bounding_box(points);
  const Point2 mid = 0.5 * (box.lo + box.hi);
  const double extent = std::max(box.hi.x - box.lo.x, box.hi.y - box.lo.y);
  if (!(extent > 0)) throw InvalidArgument("delaunay: all points coincide");
  std::vector<Point2> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = (1.0 / extent) * (points[i] - mid);

  {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto i, auto j) {
      return std::pair{p[i].x, p[i].y} < std::pair{p[j].x, p[j].y};
    });
    for (std::size_t k = 1; k < n; ++k) {
      if (p[order[k]] == p[order[k - 1]]) {
        throw InvalidArgument("delaunay: duplicate point at index " + std::to_string(order[k]));
      }
    }
    std::size_t far = 1;
    for (std::size_t i = 1; i < n; ++i) {
      if (distance(p[0], p[i]) > distance(p[0], p[far])) far = i;
    }
    const double base = distance(p[0], p[far]);
    double max_orient = 0.0;
    for (std::size_t i = 0; i < n; ++i) max_orient = std::max(max_orient, std::abs(orient2d(p[0], p[far], p[i])));
    if (max_orient <= 1e-12 * base * base) throw InvalidArgument("delaunay: all points are collinear");
  }

  // Super-triangle covering 10x the bounding box; grown only if a point was
  // swallowed entirely by super-triangle fans.
  for (double scale = 10.0; scale <= 1e6; scale *= 10.0) {
    BowyerWatson bw(p, scale);
    bw.insert_all();
    auto tris = bw.finish();
    std::vector<bool> used(n, false);
    for (const auto& t : tris) {
      for (auto v : t) used[v] = true;
    }
    if (tris.empty() || std::find(used.begin(), used.end(), false) != used.end()) continue;
    fill_hull_pockets(p, tris);
    legalize(p, tris);
    for (auto& t : tris) t = canonical(t);
    std::sort(tris.begin(), tris.end());
    return tris;
  }
  throw NumericalError("delaunay: triangulation failed to cover all points");
}

}  // namespace stgen
