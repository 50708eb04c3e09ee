#include "freespectra/matops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include "freespectra/error.hpp"

namespace fsp {

namespace {

void require_square(const CMatrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw SizeError(std::string(what) + ": matrix is " + std::to_string(m.rows()) + "x" +
                    std::to_string(m.cols()) + ", expected square");
  }
}

}  // namespace

CMatrix real_part(const CMatrix& m) { return (m + m.adjoint()) * 0.5; }

CMatrix imag_part(const CMatrix& m) { return (m - m.adjoint()) * cplx(0.0, -0.5); }

bool is_hermitian(const CMatrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  const double norm = m.norm();
  if (norm == 0.0) return true;
  return (m - m.adjoint()).norm() <= rel_tol * norm;
}

double min_eigenvalue(const CMatrix& hermitian) {
  if (hermitian.rows() == 1) return hermitian(0, 0).real();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(real_part(hermitian), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

HalfPlanePoint::HalfPlanePoint(CMatrix lambda) : lambda_(std::move(lambda)) {
  require_square(lambda_, "HalfPlanePoint");
  if (!contains(lambda_)) {
    throw ContractViolation("HalfPlanePoint: imaginary part is not positive definite");
  }
}

HalfPlanePoint HalfPlanePoint::scalar(cplx z, int m) {
  return HalfPlanePoint(z * CMatrix::Identity(m, m));
}

bool HalfPlanePoint::contains(const CMatrix& lambda) {
  return lambda.rows() == lambda.cols() && lambda.rows() > 0 &&
         min_eigenvalue(imag_part(lambda)) > kHalfPlaneTol;
}

BlockOperator::BlockOperator(int m_, int n_, CMatrix data_) : m(m_), n(n_), data(std::move(data_)) {
  if (m <= 0 || n <= 0 || data.rows() != static_cast<Eigen::Index>(m) * n ||
      data.cols() != static_cast<Eigen::Index>(m) * n) {
    throw SizeError("BlockOperator: data is not (mn)x(mn)");
  }
}

BlockOperator kron_assemble(std::span<const CMatrix> coeffs, std::span<const CMatrix> blocks) {
  if (coeffs.size() != blocks.size() || coeffs.empty()) {
    throw SizeError("kron_assemble: need equally many (>0) coefficients and blocks");
  }
  const auto m = coeffs[0].rows();
  const auto n = blocks[0].rows();
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    if (coeffs[i].rows() != m || coeffs[i].cols() != m || blocks[i].rows() != n ||
        blocks[i].cols() != n) {
      throw SizeError("kron_assemble: inconsistent sizes at term " + std::to_string(i));
    }
  }
  CMatrix out = CMatrix::Zero(m * n, m * n);
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    for (Eigen::Index a = 0; a < m; ++a) {
      for (Eigen::Index b = 0; b < m; ++b) {
        const cplx c = coeffs[i](a, b);
        if (c != cplx(0.0)) out.block(a * n, b * n, n, n) += c * blocks[i];
      }
    }
  }
  return {static_cast<int>(m), static_cast<int>(n), std::move(out)};
}

CMatrix partial_trace_n(const BlockOperator& op) {
  CMatrix out(op.m, op.m);
  for (int a = 0; a < op.m; ++a) {
    for (int b = 0; b < op.m; ++b) {
      out(a, b) = op.block(a, b).trace() / static_cast<double>(op.n);
    }
  }
  return out;
}

CMatrix checked_inverse(const CMatrix& m, double rcond_min) {
  require_square(m, "checked_inverse");
  Eigen::PartialPivLU<CMatrix> lu(m);
  const double rc = lu.rcond();
  if (!(rc >= rcond_min)) throw IllConditionedError("matrix is numerically singular", rc);
  return lu.inverse();
}

BlockOperator resolvent(const BlockOperator& op, const HalfPlanePoint& lambda) {
  if (lambda.size() != op.m) throw SizeError("resolvent: lambda size differs from block count");
  const CMatrix eye_n = CMatrix::Identity(op.n, op.n);
  const CMatrix lam = lambda.value();
  BlockOperator shifted = kron_assemble(std::span<const CMatrix>(&lam, 1),
                                        std::span<const CMatrix>(&eye_n, 1));
  shifted.data -= op.data;
  return {op.m, op.n, checked_inverse(shifted.data)};
}

double operator_norm(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() == m.cols() && is_hermitian(m, 1e-13)) {
    const auto ev = hermitian_eigenvalues(m);
    return std::max(std::abs(ev.front()), std::abs(ev.back()));
  }
  Eigen::BDCSVD<CMatrix> svd(m);
  return svd.singularValues()(0);
}

EigenDecomposition hermitian_eigs(const CMatrix& m, bool with_vectors) {
  require_square(m, "hermitian_eigs");
  if (!is_hermitian(m)) throw StructureError("hermitian_eigs: matrix is not Hermitian");
  const auto n = static_cast<lapack_int>(m.rows());
  EigenDecomposition out;
  if (n == 0) return out;
  CMatrix a = real_part(m);
  out.values.resize(static_cast<std::size_t>(n));
  const lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, with_vectors ? 'V' : 'N', 'U', n,
                                         a.data(), n, out.values.data());
  if (info != 0) throw Error("hermitian_eigs: zheevd failed with info " + std::to_string(info));
  if (with_vectors) out.vectors = std::move(a);
  return out;
}

std::vector<double> hermitian_eigenvalues(const CMatrix& m) { return hermitian_eigs(m, false).values; }

}  // namespace fsp
