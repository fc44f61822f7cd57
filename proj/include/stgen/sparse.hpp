#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace stgen {

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Compressed sparse row matrix. Column indices are strictly increasing
/// within each row; the structure is fixed after construction, values may
/// be updated in place.
class CsrMatrix {
 public:
  CsrMatrix() = default;
  CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> offsets,
            std::vector<std::size_t> columns, std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }

  const std::vector<std::size_t>& offsets() const { return offsets_; }
  const std::vector<std::size_t>& columns() const { return columns_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  /// Entry (i, j), zero when not stored.
  double at(std::size_t i, std::size_t j) const;
  /// Position of (i, j) in values(), or nnz() when not stored.
  std::size_t find(std::size_t i, std::size_t j) const;

  std::vector<double> diagonal() const;
  CsrMatrix transpose() const;
  bool is_symmetric(double tol = 0.0) const;

  std::vector<double> to_dense() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<std::size_t> columns_;
  std::vector<double> values_;
};

/// Duplicates are summed; explicit zeros are kept. Entries are sorted, so
/// the result does not depend on triplet order.
CsrMatrix csr_from_triplets(std::size_t rows, std::size_t cols, std::span<const Triplet> triplets);

CsrMatrix identity_matrix(std::size_t n);

std::vector<double> spmv(const CsrMatrix& a, std::span<const double> v);
void spmv(const CsrMatrix& a, std::span<const double> v, std::span<double> out);

/// alpha*A + beta*B; the pattern is the union of both patterns.
CsrMatrix add(const CsrMatrix& a, const CsrMatrix& b, double alpha = 1.0, double beta = 1.0);
CsrMatrix scaled(const CsrMatrix& a, double s);

/// A with column j multiplied by d[j].
CsrMatrix scale_columns(const CsrMatrix& a, std::span<const double> d);

/// Block matrix [[a, b], [c, d]] of four equally sized square blocks.
CsrMatrix block2x2(const CsrMatrix& a, const CsrMatrix& b, const CsrMatrix& c, const CsrMatrix& d);

struct SolveReport {
  std::size_t iterations = 0;
  double residual = 0.0;  ///< final relative residual ||b - Ax|| / ||b||
  bool converged = false;
};

struct SolveResult {
  std::vector<double> x;
  SolveReport report;
};

struct SolverOptions {
  double tol = 1e-10;         ///< relative residual
  std::size_t max_iter = 0;   ///< 0 selects 10 * n
};

/// Jacobi-preconditioned conjugate gradients; A must be symmetric positive definite.
SolveResult solve_cg(const CsrMatrix& a, std::span<const double> b, SolverOptions opts = {},
                     std::span<const double> x0 = {});

/// Jacobi-preconditioned BiCGSTAB. On breakdown the iteration restarts once
/// from the current iterate before reporting failure.
SolveResult solve_bicgstab(const CsrMatrix& a, std::span<const double> b, SolverOptions opts = {},
                           std::span<const double> x0 = {});

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

}  // namespace stgen
