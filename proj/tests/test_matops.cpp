#include <doctest.h>

#include <sstream>

#include "freespectra/error.hpp"
#include "freespectra/matops.hpp"
#include "freespectra/matrix_io.hpp"
#include "test_util.hpp"

using namespace fsp;
using namespace fsp::testing;

namespace {

// Entry ((a,i),(b,j)) of sum_k coeffs[k] (x) blocks[k], straight from the definition.
cplx kron_entry(const std::vector<CMatrix>& coeffs, const std::vector<CMatrix>& blocks, int n, int row, int col) {
  cplx s = 0.0;
  for (std::size_t k = 0; k < coeffs.size(); ++k) s += coeffs[k](row / n, col / n) * blocks[k](row % n, col % n);
  return s;
}

}  // namespace

TEST_CASE("kron_assemble basic products") {
  const CMatrix i2 = CMatrix::Identity(2, 2);
  const CMatrix i3 = CMatrix::Identity(3, 3);
  std::vector<CMatrix> c{i2};
  std::vector<CMatrix> b{i3};
  CHECK(max_abs(kron_assemble(c, b).data - CMatrix::Identity(6, 6)) == 0.0);

  CMatrix d1 = CMatrix::Zero(2, 2);
  d1.diagonal() << 1.0, -1.0;
  CMatrix d2 = CMatrix::Zero(2, 2);
  d2.diagonal() << 2.0, 3.0;
  const auto out = kron_assemble(std::vector<CMatrix>{d1}, std::vector<CMatrix>{d2});
  CMatrix expect = CMatrix::Zero(4, 4);
  expect.diagonal() << 2.0, 3.0, -2.0, -3.0;
  CHECK(max_abs(out.data - expect) == 0.0);
}

TEST_CASE("kron_assemble matches the entrywise definition and keeps Hermiticity") {
  const int m = 3;
  const int n = 4;
  std::vector<CMatrix> coeffs{random_hermitian(m), random_hermitian(m)};
  std::vector<CMatrix> blocks{random_hermitian(n), random_hermitian(n)};
  const auto op = kron_assemble(coeffs, blocks);
  double dev = 0.0;
  for (int r = 0; r < m * n; ++r) {
    for (int c = 0; c < m * n; ++c) dev = std::max(dev, std::abs(op.data(r, c) - kron_entry(coeffs, blocks, n, r, c)));
  }
  CHECK(dev < 1e-14);
  CHECK(is_hermitian(op.data));

  // bilinearity
  std::vector<CMatrix> scaled{2.5 * coeffs[0], 2.5 * coeffs[1]};
  CHECK(max_abs(kron_assemble(scaled, blocks).data - 2.5 * op.data) < 1e-13);
}

TEST_CASE("kron_assemble rejects mismatched inputs") {
  std::vector<CMatrix> c{CMatrix::Identity(2, 2), CMatrix::Identity(3, 3)};
  std::vector<CMatrix> b{CMatrix::Identity(2, 2), CMatrix::Identity(2, 2)};
  CHECK_THROWS_AS(kron_assemble(c, b), SizeError);
}

TEST_CASE("partial_trace_n") {
  const CMatrix d = random_matrix(5, 5);
  const auto op1 = kron_assemble(std::vector<CMatrix>{CMatrix::Identity(2, 2)}, std::vector<CMatrix>{d});
  CHECK(max_abs(partial_trace_n(op1) - (d.trace() / 5.0) * CMatrix::Identity(2, 2)) < 1e-14);

  const CMatrix c = random_matrix(3, 3);
  const auto op2 = kron_assemble(std::vector<CMatrix>{c}, std::vector<CMatrix>{CMatrix::Identity(4, 4)});
  CHECK(max_abs(partial_trace_n(op2) - c) < 1e-14);

  // index-loop oracle on an unstructured matrix
  const int m = 3;
  const int n = 5;
  BlockOperator op(m, n, random_matrix(m * n, m * n));
  CMatrix oracle = CMatrix::Zero(m, m);
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      for (int k = 0; k < n; ++k) oracle(a, b) += op.data(a * n + k, b * n + k);
      oracle(a, b) /= static_cast<double>(n);
    }
  }
  CHECK(max_abs(partial_trace_n(op) - oracle) < 1e-14);
}

TEST_CASE("resolvent") {
  const int m = 2;
  const int n = 3;
  BlockOperator zero(m, n, CMatrix::Zero(m * n, m * n));
  const auto r0 = resolvent(zero, HalfPlanePoint::scalar(cplx(0, 1), m));
  CHECK(max_abs(r0.data - cplx(0, -1) * CMatrix::Identity(m * n, m * n)) < 1e-15);

  CMatrix diag = CMatrix::Zero(4, 4);
  diag.diagonal() << 1.0, -2.0, 0.5, 3.0;
  const auto r1 = resolvent(BlockOperator(1, 4, diag), HalfPlanePoint::scalar(cplx(0, 2), 1));
  for (int k = 0; k < 4; ++k) CHECK(std::abs(r1.data(k, k) - 1.0 / (cplx(0, 2) - diag(k, k))) < 1e-15);

  const auto h = kron_assemble(std::vector<CMatrix>{random_hermitian(m)}, std::vector<CMatrix>{random_hermitian(n)});
  const auto r2 = resolvent(h, HalfPlanePoint::scalar(cplx(1, 1), m));
  CHECK(operator_norm(r2.data) <= 1.0 + 1e-12);
}

TEST_CASE("operator_norm") {
  CMatrix d = CMatrix::Zero(2, 2);
  d.diagonal() << 3.0, -5.0;
  CHECK(operator_norm(d) == doctest::Approx(5.0).epsilon(1e-14));

  const CMatrix q = random_matrix(6, 6).householderQr().householderQ();
  CHECK(operator_norm(q) == doctest::Approx(1.0).epsilon(1e-12));

  const CMatrix a = random_matrix(7, 5);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(a.adjoint() * a);
  CHECK(operator_norm(a) == doctest::Approx(std::sqrt(es.eigenvalues().maxCoeff())).epsilon(1e-12));
}

TEST_CASE("hermitian_eigs") {
  CMatrix d = CMatrix::Zero(2, 2);
  d.diagonal() << 2.0, 1.0;
  auto ev = hermitian_eigenvalues(d);
  CHECK(ev[0] == doctest::Approx(1.0));
  CHECK(ev[1] == doctest::Approx(2.0));

  CMatrix swap = CMatrix::Zero(2, 2);
  swap(0, 1) = swap(1, 0) = 1.0;
  ev = hermitian_eigenvalues(swap);
  CHECK(ev[0] == doctest::Approx(-1.0));
  CHECK(ev[1] == doctest::Approx(1.0));

  const CMatrix h = random_hermitian(50);
  const auto dec = hermitian_eigs(h, true);
  CHECK(std::is_sorted(dec.values.begin(), dec.values.end()));
  Eigen::VectorXd vals = Eigen::Map<const Eigen::VectorXd>(dec.values.data(), 50);
  const CMatrix residual = h * dec.vectors - dec.vectors * vals.cast<cplx>().asDiagonal();
  CHECK(residual.norm() < 1e-11 * h.norm());

  CHECK_THROWS_AS(hermitian_eigs(random_matrix(4, 4)), StructureError);
}

TEST_CASE("Hermitian classification and half-plane points") {
  CMatrix h = random_hermitian(4);
  CHECK(is_hermitian(h));
  h(0, 1) += 1e-6;
  CHECK_FALSE(is_hermitian(h));

  CHECK(HalfPlanePoint::contains(cplx(0, 1) * CMatrix::Identity(3, 3)));
  CHECK_FALSE(HalfPlanePoint::contains(CMatrix::Identity(3, 3)));
  CHECK_THROWS_AS(HalfPlanePoint(CMatrix::Identity(2, 2)), ContractViolation);
  CHECK_THROWS_AS(checked_inverse(CMatrix::Zero(3, 3)), IllConditionedError);
}

TEST_CASE("matrix CSV and JSON round trips are exact") {
  const CMatrix m = random_matrix(4, 4);
  std::stringstream ss;
  write_matrix_csv(ss, m);
  CHECK(read_matrix_csv(ss) == m);
  CHECK(matrix_from_json(matrix_to_json(m)) == m);

  std::stringstream bad("1,0,2,0\n3,0,oops,0\n");
  try {
    read_matrix_csv(bad);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  std::stringstream rect("1,0,2,0\n");
  CHECK_THROWS_AS(read_matrix_csv(rect), SizeError);
}
