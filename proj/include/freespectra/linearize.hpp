#pragma once

#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "freespectra/matops.hpp"
#include "freespectra/ncalg.hpp"

namespace fsp {

// Matrix of affine polynomials constant + sum_j coeffs[j] X_j, stored as
// its coefficient matrices (all of one shape).
struct AffinePencil {
  CMatrix constant;
  std::vector<CMatrix> coeffs;

  static AffinePencil zero(Eigen::Index rows, Eigen::Index cols, int k);
  Eigen::Index rows() const { return constant.rows(); }
  Eigen::Index cols() const { return constant.cols(); }
};

// Block pieces of the l x l linearization of a degree-l monomial
//   [ corner  u ]
//   [ v       Q ]
// with -u Q^{-1} v equal to the monomial. For degree 1 only `corner` is
// populated (1 x 1) and u, v, Q are empty.
struct MonomialBlock {
  AffinePencil corner;
  AffinePencil u;  // 1 x (l-1)
  AffinePencil v;  // (l-1) x 1
  AffinePencil q;  // (l-1) x (l-1)
};

// L_P = gamma (x) 1 + sum_j zetas[j] (x) X_j with Hermitian coefficients.
struct Linearization {
  int m = 1;
  CMatrix gamma;
  std::vector<CMatrix> zetas;
  int source_degree = 0;

  int arity() const noexcept { return static_cast<int>(zetas.size()); }
  // gamma (x) I_N + sum_j zetas[j] (x) args[j].
  CMatrix assemble(std::span<const CMatrix> args) const;
};

MonomialBlock linearize_monomial(const Monomial& mono, int k);

// Self-adjoint linearization of a self-adjoint polynomial whose generators
// are all self-adjoint. Degree <= 1 terms sit in the (1,1) entry; the rest
// is linearized as P0 + P0* with P0 from split_selfadjoint.
Linearization linearize(const NCPolynomial& p);

// Compares (z - P(args))^{-1} with the leading N x N corner of
// (z E11 (x) I_N - L_P(args))^{-1}; true iff the max entrywise deviation is
// at most tol. Raises SpectralPointError at a (numerically) singular point.
bool corner_resolvent_check(const Linearization& lin, const NCPolynomial& p,
                            std::span<const CMatrix> args, cplx z, double tol);

// Maximal entrywise deviation computed by corner_resolvent_check.
double corner_resolvent_deviation(const Linearization& lin, const NCPolynomial& p,
                                  std::span<const CMatrix> args, cplx z);

// Uniform bounds on the linearization blocks over generator tuples of norm
// at most C: kappa >= ||Q^{-1}||, ell >= ||u||.
struct LinearizationBounds {
  double kappa = 0.0;
  double ell = 0.0;
  int nilpotency_index = 0;
};
LinearizationBounds linearization_bounds(const Linearization& lin, double norm_bound);

// eps = min{1/(2 kappa), delta/(1 + 2 kappa^2 ell^2)}; equals delta when P
// has degree <= 1.
double linearized_gap_bound(const Linearization& lin, double norm_bound, double delta);

nlohmann::json linearization_to_json(const Linearization& lin);
Linearization linearization_from_json(const nlohmann::json& j);

}  // namespace fsp
