#include "stgen/assembly.hpp"

#include <cmath>
#include <map>
#include <string>

#include "stgen/error.hpp"

namespace stgen {

namespace {

double twice_area(const TriangleCoords& c) {
  const double a2 = orient2d(c[0], c[1], c[2]);
  const double scale = std::max({distance(c[0], c[1]), distance(c[1], c[2]), distance(c[2], c[0])});
  if (!(std::abs(a2) > 1e-14 * scale * scale)) throw InvalidArgument("degenerate triangle (zero area)");
  return a2;
}

}  // namespace

std::array<Point2, 3> basis_gradients(const TriangleCoords& c) {
  const double a2 = twice_area(c);
  // ∇φ_i is the inward normal of the opposite edge scaled by 1/(2·area).
  std::array<Point2, 3> g;
  for (int i = 0; i < 3; ++i) {
    const Point2 p = c[static_cast<std::size_t>((i + 1) % 3)];
    const Point2 q = c[static_cast<std::size_t>((i + 2) % 3)];
    g[static_cast<std::size_t>(i)] = {(p.y - q.y) / a2, (q.x - p.x) / a2};
  }
  return g;
}

ElementMatrix element_mass(const TriangleCoords& c) {
  const double area = std::abs(twice_area(c)) / 2.0;
  ElementMatrix m;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) m(i, j) = area / 12.0 * (i == j ? 2.0 : 1.0);
  }
  return m;
}

ElementMatrix element_stiffness(const TriangleCoords& c, const std::array<double, 3>& d) {
  const double area = std::abs(twice_area(c)) / 2.0;
  const auto g = basis_gradients(c);
  const double dbar = (d[0] + d[1] + d[2]) / 3.0;
  if (!std::isfinite(dbar)) throw InvalidArgument("non-finite diffusion coefficient");
  ElementMatrix k;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      k(i, j) = dbar * area * dot(g[static_cast<std::size_t>(i)], g[static_cast<std::size_t>(j)]);
    }
  }
  return k;
}

ElementMatrix element_advection(const TriangleCoords& c, const std::array<Point2, 3>& beta) {
  const double area = std::abs(twice_area(c)) / 2.0;
  const auto g = basis_gradients(c);
  const Point2 bbar = (1.0 / 3.0) * (beta[0] + beta[1] + beta[2]);
  // ∫φ_i = area/3 and β̄·∇φ_j is constant on the element.
  ElementMatrix a;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) a(i, j) = area / 3.0 * dot(bbar, g[static_cast<std::size_t>(j)]);
  }
  return a;
}

double CoefficientField::element_value(const Mesh& mesh, std::size_t t, double time) const {
  return std::visit(
      [&](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Constant>) {
          return k.v;
        } else if constexpr (std::is_same_v<K, Nodal>) {
          if (k.v.size() != mesh.node_count()) throw InvalidArgument("nodal coefficient size mismatch");
          const auto& tri = mesh.triangles()[t];
          return (k.v[tri[0]] + k.v[tri[1]] + k.v[tri[2]]) / 3.0;
        } else if constexpr (std::is_same_v<K, Function>) {
          const auto c = mesh.triangle_coords(t);
          return k.f(centroid(c[0], c[1], c[2]), time);
        } else {
          throw InvalidArgument("vector coefficient used where a scalar is required");
        }
      },
      kind_);
}

Point2 CoefficientField::element_vector(const Mesh& mesh, std::size_t t, double time) const {
  const auto* v = std::get_if<Vector>(&kind_);
  if (!v) throw InvalidArgument("scalar coefficient used where a velocity is required");
  const auto c = mesh.triangle_coords(t);
  return v->f(centroid(c[0], c[1], c[2]), time);
}

CsrMatrix assemble_operator(const Mesh& mesh, OperatorKind kind, const CoefficientField& coeff,
                            double time) {
  std::vector<Triplet> trip;
  trip.reserve(9 * mesh.triangle_count());
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const auto c = mesh.triangle_coords(t);
    ElementMatrix e;
    switch (kind) {
      case OperatorKind::mass: {
        const double w = coeff.element_value(mesh, t, time);
        if (!std::isfinite(w)) throw NumericalError("non-finite coefficient on element " + std::to_string(t));
        e = element_mass(c);
        for (auto& v : e.a) v *= w;
        break;
      }
      case OperatorKind::stiffness: {
        const double d = coeff.element_value(mesh, t, time);
        if (!std::isfinite(d)) throw NumericalError("non-finite coefficient on element " + std::to_string(t));
        e = element_stiffness(c, {d, d, d});
        break;
      }
      case OperatorKind::advection: {
        const Point2 b = coeff.element_vector(mesh, t, time);
        if (!std::isfinite(b.x) || !std::isfinite(b.y)) {
          throw NumericalError("non-finite velocity on element " + std::to_string(t));
        }
        e = element_advection(c, {b, b, b});
        break;
      }
    }
    const auto& tri = mesh.triangles()[t];
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        trip.push_back({tri[static_cast<std::size_t>(i)], tri[static_cast<std::size_t>(j)], e(i, j)});
      }
    }
  }
  return csr_from_triplets(mesh.node_count(), mesh.node_count(), trip);
}

CsrMatrix assemble_boundary_mass(const Mesh& mesh, const EdgePredicate& select) {
  std::vector<Triplet> trip;
  for (const auto& e : mesh.boundary_edges()) {
    const Point2 a = mesh.nodes()[e.nodes[0]];
    const Point2 b = mesh.nodes()[e.nodes[1]];
    if (!select(e.tag, 0.5 * (a + b))) continue;
    const double len = distance(a, b);
    const auto i = e.nodes[0];
    const auto j = e.nodes[1];
    trip.push_back({i, i, len / 3.0});
    trip.push_back({j, j, len / 3.0});
    trip.push_back({i, j, len / 6.0});
    trip.push_back({j, i, len / 6.0});
  }
  return csr_from_triplets(mesh.node_count(), mesh.node_count(), trip);
}

std::vector<double> assemble_load(const Mesh& mesh, const std::function<double(Point2)>& f) {
  std::vector<double> load(mesh.node_count(), 0.0);
  for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
    const auto c = mesh.triangle_coords(t);
    const double v = f(centroid(c[0], c[1], c[2]));
    if (v == 0.0) continue;
    const double share = v * mesh.triangle_area(t) / 3.0;
    for (auto node : mesh.triangles()[t]) load[node] += share;
  }
  return load;
}

DirichletElimination eliminate_dirichlet_matrix(CsrMatrix& matrix, std::span<const std::size_t> nodes) {
  const std::size_t n = matrix.rows();
  DirichletElimination elim;
  elim.constrained.assign(n, false);
  for (auto node : nodes) {
    if (node >= n) throw InvalidArgument("Dirichlet node " + std::to_string(node) + " out of range");
    elim.constrained[node] = true;
  }
  std::vector<Triplet> coupling;
  auto& val = matrix.values();
  const auto& off = matrix.offsets();
  const auto& col = matrix.columns();
  for (std::size_t i = 0; i < n; ++i) {
    if (elim.constrained[i]) {
      bool has_diag = false;
      for (std::size_t k = off[i]; k < off[i + 1]; ++k) {
        val[k] = (col[k] == i) ? 1.0 : 0.0;
        has_diag = has_diag || col[k] == i;
      }
      if (!has_diag) throw InvalidArgument("Dirichlet row " + std::to_string(i) + " has no diagonal entry");
      continue;
    }
    for (std::size_t k = off[i]; k < off[i + 1]; ++k) {
      if (elim.constrained[col[k]] && val[k] != 0.0) {
        coupling.push_back({i, col[k], val[k]});
        val[k] = 0.0;
      }
    }
  }
  elim.coupling = csr_from_triplets(n, n, coupling);
  return elim;
}

void apply_dirichlet_rhs(const DirichletElimination& elim, std::span<const DirichletConstraint> constraints,
                         std::span<double> rhs) {
  const std::size_t n = elim.constrained.size();
  if (rhs.size() != n) throw InvalidArgument("Dirichlet rhs size mismatch");
  std::vector<double> g(n, 0.0);
  for (const auto& c : constraints) {
    if (c.node >= n || !elim.constrained[c.node]) {
      throw InvalidArgument("Dirichlet value for unconstrained node " + std::to_string(c.node));
    }
    g[c.node] = c.value;
  }
  const auto shift = spmv(elim.coupling, g);
  for (std::size_t i = 0; i < n; ++i) rhs[i] = elim.constrained[i] ? g[i] : rhs[i] - shift[i];
}

void apply_dirichlet(LinearSystem& system, std::span<const DirichletConstraint> constraints) {
  if (constraints.empty()) return;
  std::map<std::size_t, double> unique;
  for (const auto& c : constraints) {
    const auto [it, inserted] = unique.emplace(c.node, c.value);
    if (!inserted && it->second != c.value) {
      throw InvalidArgument("conflicting Dirichlet values for node " + std::to_string(c.node));
    }
  }
  std::vector<std::size_t> nodes;
  std::vector<DirichletConstraint> merged;
  for (const auto& [node, value] : unique) {
    nodes.push_back(node);
    merged.push_back({node, value});
  }
  const auto elim = eliminate_dirichlet_matrix(system.matrix, nodes);
  apply_dirichlet_rhs(elim, merged, system.rhs);
}

}  // namespace stgen
