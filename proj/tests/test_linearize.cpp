#include <doctest.h>

#include "freespectra/error.hpp"
#include "freespectra/linearize.hpp"
#include "test_util.hpp"

using namespace fsp;
using namespace fsp::testing;

namespace {

std::vector<CMatrix> hermitian_args(int k, int n) {
  std::vector<CMatrix> out;
  for (int i = 0; i < k; ++i) out.push_back(random_hermitian(n));
  return out;
}

void check_hermitian_coefficients(const Linearization& lin) {
  CHECK(max_abs(lin.gamma - lin.gamma.adjoint()) <= 1e-14);
  for (const auto& z : lin.zetas) CHECK(max_abs(z - z.adjoint()) <= 1e-14);
}

// Right-hand side of the corner identity computed independently: the leading
// N x N block of the full (mN) x (mN) inverse.
CMatrix corner_oracle(const Linearization& lin, std::span<const CMatrix> args, cplx z) {
  const int n = static_cast<int>(args[0].rows());
  const int mn = lin.m * n;
  CMatrix pencil = CMatrix::Zero(mn, mn);
  for (int a = 0; a < lin.m; ++a) {
    for (int b = 0; b < lin.m; ++b) {
      CMatrix blk = -lin.gamma(a, b) * CMatrix::Identity(n, n);
      for (std::size_t j = 0; j < args.size(); ++j) blk -= lin.zetas[j](a, b) * args[j];
      if (a == 0 && b == 0) blk += z * CMatrix::Identity(n, n);
      pencil.block(a * n, b * n, n, n) = blk;
    }
  }
  return pencil.fullPivLu().inverse().topLeftCorner(n, n);
}

}  // namespace

TEST_CASE("degree one polynomials linearize to themselves") {
  const auto lin = linearize(parse_polynomial("x1", 2, 0));
  CHECK(lin.m == 1);
  CHECK(lin.gamma(0, 0) == cplx(0.0));
  REQUIRE(lin.zetas.size() == 2);
  CHECK(lin.zetas[0](0, 0) == cplx(1.0));
  CHECK(lin.zetas[1](0, 0) == cplx(0.0));

  const auto affine = linearize(parse_polynomial("2*x1 - x2 + 0.5", 2, 0));
  CHECK(affine.m == 1);
  CHECK(affine.gamma(0, 0) == cplx(0.5));
}

TEST_CASE("monomial blocks satisfy the Schur complement identity") {
  const int n = 5;
  for (const char* text : {"x1*x2", "x1*x2*x1", "x2*x1*x1*x2"}) {
    const auto p = parse_polynomial(text, 2, 0);
    const auto& mono = p.monomials().front();
    const auto blk = linearize_monomial(mono, 2);
    const auto args = hermitian_args(2, n);
    auto eval = [&](const AffinePencil& pen) {
      const auto r = pen.rows();
      const auto c = pen.cols();
      CMatrix out = CMatrix::Zero(r * n, c * n);
      for (Eigen::Index a = 0; a < r; ++a) {
        for (Eigen::Index b = 0; b < c; ++b) {
          CMatrix e = pen.constant(a, b) * CMatrix::Identity(n, n);
          for (int j = 0; j < 2; ++j) e += pen.coeffs[static_cast<std::size_t>(j)](a, b) * args[static_cast<std::size_t>(j)];
          out.block(a * n, b * n, n, n) = e;
        }
      }
      return out;
    };
    const CMatrix schur = -eval(blk.u) * eval(blk.q).fullPivLu().inverse() * eval(blk.v);
    CHECK(max_abs(schur - evaluate(p, args)) < 1e-11);
    CHECK(blk.q.rows() == mono.degree() - 1);
  }
}

TEST_CASE("corner identity on spec examples") {
  const int n = 5;
  SUBCASE("X1 at z = i with X1 = 0") {
    const auto p = parse_polynomial("x1", 1, 0);
    const std::vector<CMatrix> zero{CMatrix::Zero(1, 1)};
    CHECK(corner_resolvent_deviation(linearize(p), p, zero, cplx(0, 1)) < 1e-15);
  }
  SUBCASE("X1^2 at z = 5 with X1 = diag(1, 2)") {
    const auto p = parse_polynomial("x1^2", 1, 0);
    const auto lin = linearize(p);
    CMatrix d = CMatrix::Zero(2, 2);
    d.diagonal() << 1.0, 2.0;
    const std::vector<CMatrix> args{d};
    CMatrix expect = CMatrix::Zero(2, 2);
    expect.diagonal() << 0.25, 1.0;
    CHECK(max_abs(corner_oracle(lin, args, 5.0) - expect) < 1e-13);
    CHECK(corner_resolvent_check(lin, p, args, 5.0, 1e-12));
  }
  SUBCASE("X1^2 at z = 2 + i") {
    const auto p = parse_polynomial("x1^2", 1, 0);
    const auto lin = linearize(p);
    CHECK(lin.m == 3);
    check_hermitian_coefficients(lin);
    const auto args = hermitian_args(1, n);
    const CMatrix direct = (cplx(2, 1) * CMatrix::Identity(n, n) - evaluate(p, args)).inverse();
    CHECK(max_abs(corner_oracle(lin, args, cplx(2, 1)) - direct) < 1e-11);
  }
  SUBCASE("X1 X2 + X2 X1 at z = 3i, 8 x 8") {
    const auto p = parse_polynomial("x1*x2 + x2*x1", 2, 0);
    const auto lin = linearize(p);
    check_hermitian_coefficients(lin);
    const auto args = hermitian_args(2, 8);
    CHECK(corner_resolvent_check(lin, p, args, cplx(0, 3), 1e-10));
    const CMatrix direct = (cplx(0, 3) * CMatrix::Identity(8, 8) - evaluate(p, args)).inverse();
    CHECK(max_abs(corner_oracle(lin, args, cplx(0, 3)) - direct) < 1e-10);
  }
}

TEST_CASE("mixed semicircular and deterministic generators") {
  const auto p = parse_polynomial("x1*a1 + a1*x1 + x1^2 - 0.3*a1*x2*a1 + 1", 2, 1);
  const auto lin = linearize(p);
  check_hermitian_coefficients(lin);
  CHECK(lin.arity() == 3);
  const auto args = hermitian_args(3, 6);
  CHECK(corner_resolvent_check(lin, p, args, cplx(0.7, 0.9), 1e-9));
}

TEST_CASE("invertibility equivalence at real points") {
  const auto p = parse_polynomial("x1*x2 + x2*x1 + x1", 2, 0);
  const auto lin = linearize(p);
  const int n = 4;
  const auto args = hermitian_args(2, n);
  const auto eig = hermitian_eigenvalues(evaluate(p, args));
  auto smallest_sv = [&](double z) {
    CMatrix pencil = -lin.assemble(args);
    pencil.topLeftCorner(n, n) += z * CMatrix::Identity(n, n);
    Eigen::JacobiSVD<CMatrix> svd(pencil);
    return svd.singularValues().minCoeff() / svd.singularValues().maxCoeff();
  };
  CHECK(smallest_sv(eig.front()) <= 1e-8);
  CHECK(smallest_sv(eig.back() + 1.0) > 1e-6);
  CHECK_THROWS_AS(corner_resolvent_check(lin, p, args, eig.front(), 1e-9), SpectralPointError);
}

TEST_CASE("non-self-adjoint input is rejected") {
  CHECK_THROWS_AS(linearize(parse_polynomial("x1*x2", 2, 0)), ContractViolation);
  CHECK_THROWS_AS(linearize(parse_polynomial("2i*x1", 1, 0)), ContractViolation);
}

TEST_CASE("gap bound") {
  const auto lin1 = linearize(parse_polynomial("x1 + x2", 2, 0));
  CHECK(linearized_gap_bound(lin1, 2.0, 0.3) == doctest::Approx(0.3));

  const auto lin2 = linearize(parse_polynomial("x1*x2 + x2*x1", 2, 0));
  const double e = linearized_gap_bound(lin2, 1.0, 0.5);
  CHECK(e > 0.0);
  CHECK(e <= 0.5);
  const auto b = linearization_bounds(lin2, 1.0);
  CHECK(b.kappa >= 1.0);
  CHECK(b.ell > 0.0);

  const double e0 = linearized_gap_bound(lin2, 0.0, 0.5);
  CHECK(std::isfinite(e0));
  CHECK(e0 > 0.0);

  // Q^{-1} stays below kappa on random tuples of norm <= C
  const double c = 1.5;
  const auto bc = linearization_bounds(lin2, c);
  const int n = 4;
  for (int trial = 0; trial < 10; ++trial) {
    auto args = hermitian_args(2, n);
    for (auto& a : args) a *= c / operator_norm(a);
    const CMatrix l = lin2.assemble(args);
    const CMatrix q = l.bottomRightCorner((lin2.m - 1) * n, (lin2.m - 1) * n);
    CHECK(operator_norm(q.inverse()) <= bc.kappa * (1 + 1e-12));
  }
}

TEST_CASE("JSON round trip") {
  const auto lin = linearize(parse_polynomial("x1^2 + x1*a1 + a1*x1", 1, 1));
  const auto back = linearization_from_json(linearization_to_json(lin));
  CHECK(back.m == lin.m);
  CHECK(back.gamma == lin.gamma);
  REQUIRE(back.zetas.size() == lin.zetas.size());
  for (std::size_t j = 0; j < lin.zetas.size(); ++j) CHECK(back.zetas[j] == lin.zetas[j]);
  CHECK(linearization_to_json(lin).at("m") == lin.m);
}
