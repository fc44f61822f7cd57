#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "stgen/error.hpp"
#include "stgen/sparse.hpp"

using namespace stgen;

namespace {

CsrMatrix dense_to_csr(std::size_t n, const std::vector<double>& a) {
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (a[i * n + j] != 0.0) t.push_back({i, j, a[i * n + j]});
  return csr_from_triplets(n, n, t);
}

// MᵀM + I with a random sparse M.
std::vector<double> random_spd(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::bernoulli_distribution keep(0.2);
  std::vector<double> m(n * n, 0.0), a(n * n, 0.0);
  for (auto& x : m) if (keep(rng)) x = u(rng);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = i == j ? 1.0 : 0.0;
      for (std::size_t k = 0; k < n; ++k) s += m[k * n + i] * m[k * n + j];
      a[i * n + j] = s;
    }
  return a;
}

}  // namespace

TEST_CASE("csr_from_triplets") {
  const std::vector<Triplet> dup{{0, 0, 1.0}, {0, 0, 2.0}};
  const CsrMatrix a = csr_from_triplets(1, 1, dup);
  CHECK(a.nnz() == 1);
  CHECK(a.at(0, 0) == 3.0);

  const CsrMatrix z = csr_from_triplets(3, 3, {});
  CHECK(z.offsets() == std::vector<std::size_t>{0, 0, 0, 0});
  CHECK(spmv(z, std::vector<double>{1, 2, 3}) == std::vector<double>{0, 0, 0});

  const std::vector<Triplet> zero{{1, 1, 0.0}};
  CHECK(csr_from_triplets(2, 2, zero).nnz() == 1);

  const std::vector<Triplet> bad{{2, 0, 1.0}};
  CHECK_THROWS_AS(csr_from_triplets(2, 2, bad), InvalidArgument);
}

TEST_CASE("csr structure is independent of triplet order") {
  std::vector<Triplet> t{{1, 2, 1.0}, {0, 1, 2.0}, {1, 0, 3.0}, {0, 1, 4.0}, {2, 2, 5.0}};
  const CsrMatrix a = csr_from_triplets(3, 3, t);
  std::reverse(t.begin(), t.end());
  const CsrMatrix b = csr_from_triplets(3, 3, t);
  CHECK(a.columns() == b.columns());
  CHECK(a.values() == b.values());
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t k = a.offsets()[i] + 1; k < a.offsets()[i + 1]; ++k) CHECK(a.columns()[k - 1] < a.columns()[k]);
}

TEST_CASE("spmv") {
  const CsrMatrix id = identity_matrix(2);
  CHECK(spmv(id, std::vector<double>{3, -4}) == std::vector<double>{3, -4});
  const CsrMatrix a = dense_to_csr(2, {4, 1, 1, 3});
  CHECK(spmv(a, std::vector<double>{1, 2}) == std::vector<double>{6, 7});
  CHECK_THROWS_AS(spmv(a, std::vector<double>{1, 2, 3}), InvalidArgument);
}

TEST_CASE("spmv is linear") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const std::size_t n = 30;
  const CsrMatrix a = dense_to_csr(n, random_spd(rng, n));
  std::vector<double> x(n), y(n), c(n);
  for (auto& v : x) v = u(rng);
  for (auto& v : y) v = u(rng);
  const double al = 0.7, be = -1.3;
  for (std::size_t i = 0; i < n; ++i) c[i] = al * x[i] + be * y[i];
  const auto ac = spmv(a, c), ax = spmv(a, x), ay = spmv(a, y);
  for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(ac[i] - (al * ax[i] + be * ay[i])) <= 1e-12);
}

TEST_CASE("solve_cg small systems") {
  const auto r = solve_cg(identity_matrix(3), std::vector<double>{1, 2, 3});
  CHECK(r.report.converged);
  CHECK(r.report.iterations <= 1);
  CHECK(r.x == std::vector<double>{1, 2, 3});

  const auto s = solve_cg(dense_to_csr(2, {4, 1, 1, 3}), std::vector<double>{1, 2});
  CHECK(s.x[0] == doctest::Approx(1.0 / 11).epsilon(1e-12));
  CHECK(s.x[1] == doctest::Approx(7.0 / 11).epsilon(1e-12));

  const auto z = solve_cg(dense_to_csr(2, {4, 1, 1, 3}), std::vector<double>{0, 0});
  CHECK(z.report.iterations == 0);
  CHECK(z.x == std::vector<double>{0, 0});
}

TEST_CASE("solve_bicgstab small systems") {
  const auto r = solve_bicgstab(identity_matrix(3), std::vector<double>{1, 2, 3});
  CHECK(r.report.iterations <= 1);
  CHECK(r.x[2] == doctest::Approx(3.0));
  const auto s = solve_bicgstab(dense_to_csr(2, {2, 1, 0, 3}), std::vector<double>{3, 3});
  CHECK(s.report.converged);
  CHECK(s.x[0] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(s.x[1] == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("solvers agree with dense elimination on random SPD systems") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t n : {5u, 17u, 50u}) {
    const auto dense = random_spd(rng, n);
    const CsrMatrix a = dense_to_csr(n, dense);
    std::vector<double> b(n);
    for (auto& v : b) v = u(rng);
    const auto ref = oracle::dense_solve(dense, b);
    const auto cg = solve_cg(a, b, {1e-10, 0});
    const auto bi = solve_bicgstab(a, b, {1e-10, 0});
    CHECK(cg.report.converged);
    CHECK(bi.report.converged);
    CHECK(cg.report.residual <= 1e-10);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::abs(cg.x[i] - ref[i]) <= 1e-8);
      CHECK(std::abs(bi.x[i] - ref[i]) <= 1e-8);
      CHECK(std::abs(cg.x[i] - bi.x[i]) <= 1e-8);
    }
  }
}

TEST_CASE("non-convergence is reported, not thrown") {
  std::mt19937_64 rng(5);
  const std::size_t n = 40;
  const CsrMatrix a = dense_to_csr(n, random_spd(rng, n));
  const auto r = solve_cg(a, std::vector<double>(n, 1.0), {1e-14, 2});
  CHECK_FALSE(r.report.converged);
  CHECK(r.report.iterations == 2);
}

TEST_CASE("matrix helpers") {
  const CsrMatrix a = dense_to_csr(2, {1, 2, 0, 3});
  const CsrMatrix b = dense_to_csr(2, {0, 0, 5, 1});
  const CsrMatrix s = add(a, b, 2.0, -1.0);
  CHECK(s.to_dense() == std::vector<double>{2, 4, -5, 5});
  CHECK(a.transpose().to_dense() == std::vector<double>{1, 0, 2, 3});
  CHECK_FALSE(a.is_symmetric());
  CHECK(add(a, a.transpose()).is_symmetric());
  CHECK(scale_columns(a, std::vector<double>{2, 10}).to_dense() == std::vector<double>{2, 20, 0, 30});
  const CsrMatrix blk = block2x2(a, b, b, a);
  CHECK(blk.rows() == 4);
  CHECK(blk.at(0, 1) == 2.0);
  CHECK(blk.at(1, 2) == 5.0);
  CHECK(blk.at(3, 3) == 3.0);
  CHECK(a.diagonal() == std::vector<double>{1, 3});
}
