#include "stgen/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "stgen/error.hpp"

namespace stgen {

CsrMatrix::CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> offsets,
                     std::vector<std::size_t> columns, std::vector<double> values)
    : rows_(rows), cols_(cols), offsets_(std::move(offsets)), columns_(std::move(columns)),
      values_(std::move(values)) {
  if (offsets_.size() != rows_ + 1 || offsets_.front() != 0 || offsets_.back() != values_.size() ||
      columns_.size() != values_.size()) {
    throw InvalidArgument("inconsistent CSR arrays");
  }
  for (std::size_t i = 0; i < rows_; ++i) {
    if (offsets_[i] > offsets_[i + 1]) throw InvalidArgument("CSR offsets not monotone");
    for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) {
      if (columns_[k] >= cols_) throw InvalidArgument("CSR column out of range");
      if (k > offsets_[i] && columns_[k] <= columns_[k - 1]) {
        throw InvalidArgument("CSR columns not strictly increasing in row " + std::to_string(i));
      }
    }
  }
}

std::size_t CsrMatrix::find(std::size_t i, std::size_t j) const {
  const auto first = columns_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]);
  const auto last = columns_.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1]);
  const auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return nnz();
  return static_cast<std::size_t>(it - columns_.begin());
}

double CsrMatrix::at(std::size_t i, std::size_t j) const {
  const auto k = find(i, j);
  return k == nnz() ? 0.0 : values_[k];
}

std::vector<double> CsrMatrix::diagonal() const {
  std::vector<double> d(std::min(rows_, cols_), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = at(i, i);
  return d;
}

CsrMatrix CsrMatrix::transpose() const {
  std::vector<Triplet> t;
  t.reserve(nnz());
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) t.push_back({columns_[k], i, values_[k]});
  }
  return csr_from_triplets(cols_, rows_, t);
}

bool CsrMatrix::is_symmetric(double tol) const {
  if (rows_ != cols_) return false;
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) {
      const double other = at(columns_[k], i);
      if (std::abs(values_[k] - other) > tol * std::max(1.0, std::abs(values_[k]))) return false;
    }
  }
  return true;
}

std::vector<double> CsrMatrix::to_dense() const {
  std::vector<double> d(rows_ * cols_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t k = offsets_[i]; k < offsets_[i + 1]; ++k) d[i * cols_ + columns_[k]] = values_[k];
  }
  return d;
}

CsrMatrix csr_from_triplets(std::size_t rows, std::size_t cols, std::span<const Triplet> triplets) {
  std::vector<Triplet> t(triplets.begin(), triplets.end());
  for (const auto& e : t) {
    if (e.row >= rows || e.col >= cols) {
      throw InvalidArgument("triplet (" + std::to_string(e.row) + ", " + std::to_string(e.col) +
                            ") out of range for " + std::to_string(rows) + "x" + std::to_string(cols));
    }
  }
  // Stable sort keeps duplicate summation order fixed for a given input.
  std::stable_sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<std::size_t> offsets(rows + 1, 0);
  std::vector<std::size_t> columns;
  std::vector<double> values;
  columns.reserve(t.size());
  values.reserve(t.size());
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (k > 0 && t[k].row == t[k - 1].row && t[k].col == t[k - 1].col) {
      values.back() += t[k].value;
      continue;
    }
    columns.push_back(t[k].col);
    values.push_back(t[k].value);
    offsets[t[k].row + 1] += 1;
  }
  for (std::size_t i = 0; i < rows; ++i) offsets[i + 1] += offsets[i];
  return CsrMatrix(rows, cols, std::move(offsets), std::move(columns), std::move(values));
}

CsrMatrix identity_matrix(std::size_t n) {
  std::vector<std::size_t> offsets(n + 1);
  std::vector<std::size_t> columns(n);
  for (std::size_t i = 0; i <= n; ++i) offsets[i] = i;
  for (std::size_t i = 0; i < n; ++i) columns[i] = i;
  return CsrMatrix(n, n, std::move(offsets), std::move(columns), std::vector<double>(n, 1.0));
}

void spmv(const CsrMatrix& a, std::span<const double> v, std::span<double> out) {
  if (v.size() != a.cols() || out.size() != a.rows()) {
    throw InvalidArgument("spmv: dimension mismatch (" + std::to_string(a.rows()) + "x" +
                          std::to_string(a.cols()) + " times " + std::to_string(v.size()) + ")");
  }
  const auto& off = a.offsets();
  const auto& col = a.columns();
  const auto& val = a.values();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t k = off[i]; k < off[i + 1]; ++k) s += val[k] * v[col[k]];
    out[i] = s;
  }
}

std::vector<double> spmv(const CsrMatrix& a, std::span<const double> v) {
  std::vector<double> out(a.rows());
  spmv(a, v, out);
  return out;
}

CsrMatrix add(const CsrMatrix& a, const CsrMatrix& b, double alpha, double beta) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidArgument("add: dimension mismatch");
  std::vector<std::size_t> offsets(a.rows() + 1, 0);
  std::vector<std::size_t> columns;
  std::vector<double> values;
  columns.reserve(std::max(a.nnz(), b.nnz()));
  values.reserve(std::max(a.nnz(), b.nnz()));
  for (std::size_t i = 0; i < a.rows(); ++i) {
    std::size_t ka = a.offsets()[i], ea = a.offsets()[i + 1];
    std::size_t kb = b.offsets()[i], eb = b.offsets()[i + 1];
    while (ka < ea || kb < eb) {
      const std::size_t ca = ka < ea ? a.columns()[ka] : a.cols();
      const std::size_t cb = kb < eb ? b.columns()[kb] : b.cols();
      if (ca < cb) {
        columns.push_back(ca);
        values.push_back(alpha * a.values()[ka++]);
      } else if (cb < ca) {
        columns.push_back(cb);
        values.push_back(beta * b.values()[kb++]);
      } else {
        columns.push_back(ca);
        values.push_back(alpha * a.values()[ka++] + beta * b.values()[kb++]);
      }
    }
    offsets[i + 1] = columns.size();
  }
  return CsrMatrix(a.rows(), a.cols(), std::move(offsets), std::move(columns), std::move(values));
}

CsrMatrix scaled(const CsrMatrix& a, double s) {
  CsrMatrix out = a;
  for (auto& v : out.values()) v *= s;
  return out;
}

CsrMatrix scale_columns(const CsrMatrix& a, std::span<const double> d) {
  if (d.size() != a.cols()) throw InvalidArgument("scale_columns: dimension mismatch");
  CsrMatrix out = a;
  auto& val = out.values();
  for (std::size_t k = 0; k < val.size(); ++k) val[k] *= d[a.columns()[k]];
  return out;
}

CsrMatrix block2x2(const CsrMatrix& a, const CsrMatrix& b, const CsrMatrix& c, const CsrMatrix& d) {
  const std::size_t n = a.rows();
  for (const auto* m : {&a, &b, &c, &d}) {
    if (m->rows() != n || m->cols() != n) throw InvalidArgument("block2x2: blocks must be equal and square");
  }
  std::vector<std::size_t> offsets(2 * n + 1, 0);
  std::vector<std::size_t> columns;
  std::vector<double> values;
  columns.reserve(a.nnz() + b.nnz() + c.nnz() + d.nnz());
  values.reserve(columns.capacity());
  auto append_row = [&](const CsrMatrix& left, const CsrMatrix& right, std::size_t i) {
    for (std::size_t k = left.offsets()[i]; k < left.offsets()[i + 1]; ++k) {
      columns.push_back(left.columns()[k]);
      values.push_back(left.values()[k]);
    }
    for (std::size_t k = right.offsets()[i]; k < right.offsets()[i + 1]; ++k) {
      columns.push_back(n + right.columns()[k]);
      values.push_back(right.values()[k]);
    }
  };
  for (std::size_t i = 0; i < n; ++i) {
    append_row(a, b, i);
    offsets[i + 1] = columns.size();
  }
  for (std::size_t i = 0; i < n; ++i) {
    append_row(c, d, i);
    offsets[n + i + 1] = columns.size();
  }
  return CsrMatrix(2 * n, 2 * n, std::move(offsets), std::move(columns), std::move(values));
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

namespace {

std::vector<double> inverse_diagonal(const CsrMatrix& a) {
  auto d = a.diagonal();
  for (auto& v : d) v = (v != 0.0) ? 1.0 / v : 1.0;
  return d;
}

void check_square(const CsrMatrix& a, std::span<const double> b, std::span<const double> x0,
                  const char* who) {
  if (a.rows() != a.cols() || b.size() != a.rows() || (!x0.empty() && x0.size() != a.rows())) {
    throw InvalidArgument(std::string(who) + ": dimension mismatch");
  }
}

}  // namespace

SolveResult solve_cg(const CsrMatrix& a, std::span<const double> b, SolverOptions opts,
                     std::span<const double> x0) {
  check_square(a, b, x0, "solve_cg");
  const std::size_t n = a.rows();
  const std::size_t max_iter = opts.max_iter ? opts.max_iter : 10 * n;
  SolveResult res;
  res.x.assign(n, 0.0);
  if (!x0.empty()) std::copy(x0.begin(), x0.end(), res.x.begin());
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    std::fill(res.x.begin(), res.x.end(), 0.0);
    res.report = {0, 0.0, true};
    return res;
  }
  const auto dinv = inverse_diagonal(a);
  std::vector<double> r(n), z(n), p(n), ap(n);
  spmv(a, res.x, ap);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
  double rel = norm2(r) / bnorm;
  std::size_t it = 0;
  if (rel > opts.tol) {
    for (std::size_t i = 0; i < n; ++i) z[i] = dinv[i] * r[i];
    p = z;
    double rz = dot(r, z);
    while (it < max_iter) {
      spmv(a, p, ap);
      const double pap = dot(p, ap);
      if (!(pap > 0.0)) break;  // not SPD or stagnated
      const double alpha = rz / pap;
      for (std::size_t i = 0; i < n; ++i) {
        res.x[i] += alpha * p[i];
        r[i] -= alpha * ap[i];
      }
      ++it;
      rel = norm2(r) / bnorm;
      if (rel <= opts.tol) break;
      for (std::size_t i = 0; i < n; ++i) z[i] = dinv[i] * r[i];
      const double rz_new = dot(r, z);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
  }
  res.report = {it, rel, rel <= opts.tol && std::isfinite(rel)};
  return res;
}

SolveResult solve_bicgstab(const CsrMatrix& a, std::span<const double> b, SolverOptions opts,
                           std::span<const double> x0) {
  check_square(a, b, x0, "solve_bicgstab");
  const std::size_t n = a.rows();
  const std::size_t max_iter = opts.max_iter ? opts.max_iter : 10 * n;
  SolveResult res;
  res.x.assign(n, 0.0);
  if (!x0.empty()) std::copy(x0.begin(), x0.end(), res.x.begin());
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    std::fill(res.x.begin(), res.x.end(), 0.0);
    res.report = {0, 0.0, true};
    return res;
  }
  const auto dinv = inverse_diagonal(a);
  std::vector<double> r(n), r_hat(n), p(n), v(n), s(n), t(n), y(n), z(n);

  auto residual = [&] {
    spmv(a, res.x, v);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - v[i];
    return norm2(r) / bnorm;
  };

  double rel = residual();
  std::size_t it = 0;
  int restarts = 0;
  bool failed = false;
  while (rel > opts.tol && it < max_iter && !failed) {
    r_hat = r;
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    std::fill(p.begin(), p.end(), 0.0);
    std::fill(v.begin(), v.end(), 0.0);
    bool breakdown = false;
    while (it < max_iter) {
      const double rho_new = dot(r_hat, r);
      if (std::abs(rho_new) < 1e-300 || omega == 0.0) {
        breakdown = true;
        break;
      }
      const double beta = (rho_new / rho) * (alpha / omega);
      rho = rho_new;
      for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
      for (std::size_t i = 0; i < n; ++i) y[i] = dinv[i] * p[i];
      spmv(a, y, v);
      const double rv = dot(r_hat, v);
      if (rv == 0.0) {
        breakdown = true;
        break;
      }
      alpha = rho / rv;
      for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
      ++it;
      if (norm2(s) / bnorm <= opts.tol) {
        for (std::size_t i = 0; i < n; ++i) res.x[i] += alpha * y[i];
        r = s;
        rel = norm2(r) / bnorm;
        break;
      }
      for (std::size_t i = 0; i < n; ++i) z[i] = dinv[i] * s[i];
      spmv(a, z, t);
      const double tt = dot(t, t);
      omega = tt > 0.0 ? dot(t, s) / tt : 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        res.x[i] += alpha * y[i] + omega * z[i];
        r[i] = s[i] - omega * t[i];
      }
      rel = norm2(r) / bnorm;
      if (rel <= opts.tol || !std::isfinite(rel)) break;
    }
    if (!std::isfinite(rel)) break;
    if (breakdown) {
      if (restarts++ >= 1) failed = true;
      rel = residual();
      continue;
    }
    // Guard against drift between the recurrence and the true residual.
    if (rel <= opts.tol) rel = residual();
  }
  res.report = {it, rel, rel <= opts.tol && std::isfinite(rel)};
  return res;
}

}  // namespace stgen
