#pragma once

#include <array>
#include <functional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "stgen/geometry.hpp"
#include "stgen/mesh.hpp"
#include "stgen/sparse.hpp"

namespace stgen {

/// 3x3 local matrix of a P1 triangle, row-major.
struct ElementMatrix {
  std::array<double, 9> a{};
  std::size_t element = 0;

  double operator()(int i, int j) const { return a[static_cast<std::size_t>(3 * i + j)]; }
  double& operator()(int i, int j) { return a[static_cast<std::size_t>(3 * i + j)]; }
};

using TriangleCoords = std::array<Point2, 3>;

/// Gradients of the three barycentric basis functions (constant per element).
std::array<Point2, 3> basis_gradients(const TriangleCoords& c);

/// ∫_K φ_i φ_j = area/12 · [[2,1,1],[1,2,1],[1,1,2]].
ElementMatrix element_mass(const TriangleCoords& c);

/// ∫_K d̄ ∇φ_i·∇φ_j with d̄ the mean of the nodal values.
ElementMatrix element_stiffness(const TriangleCoords& c, const std::array<double, 3>& d);

/// ∫_K φ_i (β̄·∇φ_j) with β̄ the mean of the nodal velocities.
ElementMatrix element_advection(const TriangleCoords& c, const std::array<Point2, 3>& beta);

/// Spatially varying coefficient for assembly. A scalar formula is evaluated
/// at element centroids; nodal values are averaged over the element.
class CoefficientField {
 public:
  using ScalarFn = std::function<double(Point2, double)>;
  using VectorFn = std::function<Point2(Point2, double)>;

  static CoefficientField constant(double v) { return CoefficientField(Kind{Constant{v}}); }
  static CoefficientField nodal(std::vector<double> values) { return CoefficientField(Kind{Nodal{std::move(values)}}); }
  static CoefficientField function(ScalarFn f) { return CoefficientField(Kind{Function{std::move(f)}}); }
  static CoefficientField vector(VectorFn f) { return CoefficientField(Kind{Vector{std::move(f)}}); }
  static CoefficientField constant_vector(Point2 v) {
    return vector([v](Point2, double) { return v; });
  }

  bool is_vector() const { return std::holds_alternative<Vector>(kind_); }

  /// Representative scalar value on triangle t at time `time`.
  double element_value(const Mesh& mesh, std::size_t t, double time) const;
  /// Representative velocity on triangle t at time `time`.
  Point2 element_vector(const Mesh& mesh, std::size_t t, double time) const;

 private:
  struct Constant { double v; };
  struct Nodal { std::vector<double> v; };
  struct Function { ScalarFn f; };
  struct Vector { VectorFn f; };
  using Kind = std::variant<Constant, Nodal, Function, Vector>;

  explicit CoefficientField(Kind k) : kind_(std::move(k)) {}
  Kind kind_;
};

enum class OperatorKind { mass, stiffness, advection };

/// Global n×n operator from element contributions. Mass and stiffness are symmetric.
CsrMatrix assemble_operator(const Mesh& mesh, OperatorKind kind, const CoefficientField& coeff,
                            double time = 0.0);

/// Selects boundary edges by tag and midpoint.
using EdgePredicate = std::function<bool(int tag, Point2 midpoint)>;

/// Σ over selected boundary edges of (len/6)·[[2,1],[1,2]].
CsrMatrix assemble_boundary_mass(const Mesh& mesh, const EdgePredicate& select);

/// ⟨φ_i, f⟩ with f evaluated at each element centroid (one-point rule).
std::vector<double> assemble_load(const Mesh& mesh, const std::function<double(Point2)>& f);

/// A linear system A x = b under assembly.
struct LinearSystem {
  CsrMatrix matrix;
  std::vector<double> rhs;
};

struct DirichletConstraint {
  std::size_t node;
  double value;
};

/// Row/column elimination: constrained rows become identity rows with
/// rhs = value, and the known values are moved to the rhs of other rows so
/// a symmetric matrix stays symmetric. Duplicate nodes must agree on value.
void apply_dirichlet(LinearSystem& system, std::span<const DirichletConstraint> constraints);

/// Same elimination applied to the matrix only, with the rhs transformation
/// left to apply_dirichlet_rhs. `keep` receives the eliminated column
/// entries needed for later right-hand sides.
struct DirichletElimination {
  std::vector<bool> constrained;
  CsrMatrix coupling;  ///< original columns of constrained nodes, zero rows for constrained rows
};
DirichletElimination eliminate_dirichlet_matrix(CsrMatrix& matrix, std::span<const std::size_t> nodes);
void apply_dirichlet_rhs(const DirichletElimination& elim, std::span<const DirichletConstraint> constraints,
                         std::span<double> rhs);

}  // namespace stgen
