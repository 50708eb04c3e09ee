#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace fsp {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

// Relative Frobenius deviation below which a matrix counts as Hermitian.
inline constexpr double kHermitianTol = 1e-10;
// Smallest eigenvalue of Im(lambda) required for half-plane membership.
inline constexpr double kHalfPlaneTol = 1e-12;

// Re M = (M + M*)/2 and Im M = (M - M*)/2i.
CMatrix real_part(const CMatrix& m);
CMatrix imag_part(const CMatrix& m);

bool is_hermitian(const CMatrix& m, double rel_tol = kHermitianTol);

// Smallest eigenvalue of a (small) Hermitian matrix.
double min_eigenvalue(const CMatrix& hermitian);

// An m x m matrix with positive definite imaginary part.
class HalfPlanePoint {
 public:
  // Throws ContractViolation when Im(lambda) is not positive definite.
  explicit HalfPlanePoint(CMatrix lambda);

  static HalfPlanePoint scalar(cplx z, int m);
  static bool contains(const CMatrix& lambda);

  const CMatrix& value() const noexcept { return lambda_; }
  int size() const noexcept { return static_cast<int>(lambda_.rows()); }

 private:
  CMatrix lambda_;
};

// Dense (mn) x (mn) matrix read as an m x m array of n x n blocks; the
// (a, b) block sits at rows a*n..a*n+n-1 and columns b*n..b*n+n-1, which is
// the layout produced by the Kronecker product c (x) D.
struct BlockOperator {
  int m = 0;
  int n = 0;
  CMatrix data;

  BlockOperator() = default;
  BlockOperator(int m_, int n_, CMatrix data_);

  auto block(int a, int b) const { return data.block(a * n, b * n, n, n); }
};

// Sum_i coeffs[i] (x) blocks[i].
BlockOperator kron_assemble(std::span<const CMatrix> coeffs, std::span<const CMatrix> blocks);

// (id_m (x) tr_n)(M) with tr_n the normalized trace.
CMatrix partial_trace_n(const BlockOperator& op);

// (lambda (x) I_n - M)^{-1}.
BlockOperator resolvent(const BlockOperator& op, const HalfPlanePoint& lambda);

// Largest singular value.
double operator_norm(const CMatrix& m);

struct EigenDecomposition {
  std::vector<double> values;  // ascending
  CMatrix vectors;             // columns; empty unless requested
};

// Dense Hermitian eigensolver. Inputs within kHermitianTol are symmetrized
// first; anything further from Hermitian raises StructureError.
EigenDecomposition hermitian_eigs(const CMatrix& m, bool with_vectors = false);
std::vector<double> hermitian_eigenvalues(const CMatrix& m);

// Inverse via partial-pivot LU, raising IllConditionedError when the
// reciprocal condition estimate falls below rcond_min.
CMatrix checked_inverse(const CMatrix& m, double rcond_min = 1e-14);

}  // namespace fsp
