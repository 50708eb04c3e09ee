#pragma once

#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "freespectra/linearize.hpp"
#include "freespectra/matops.hpp"

namespace fsp {

// Operator model s = gamma (x) 1 + sum_v alpha_v (x) x_v + sum_u beta_u (x) a_u
// with x_v free semicirculars and a_u distributed as the n x n matrices A_u
// under the normalized trace.
class ModelSpec {
 public:
  // Deterministic part in a form where G_beta is a weighted sum of m x m
  // resolvents: G_beta(rho) = sum_k weight_k (rho - shift_k)^{-1}. Available
  // whenever the A_u are jointly diagonal (always for t <= 1).
  struct Atom {
    std::vector<double> point;  // joint eigenvalue (one entry per A_u)
    double weight = 0.0;
    CMatrix shift;  // sum_u point[u] beta_u
  };

  ModelSpec(CMatrix gamma, std::vector<CMatrix> alphas, std::vector<CMatrix> betas = {},
            std::vector<CMatrix> dets = {});

  // Model of a linearized polynomial: the first r pencil coefficients go to
  // the semicircular part, the rest pair up with dets.
  static ModelSpec from_linearization(const Linearization& lin, int r, std::vector<CMatrix> dets);
  // Scalar standard semicircle (m = 1, alpha = 1).
  static ModelSpec semicircle();

  int m() const noexcept { return static_cast<int>(gamma_.rows()); }
  int r() const noexcept { return static_cast<int>(alphas_.size()); }
  int t() const noexcept { return static_cast<int>(betas_.size()); }
  int n() const noexcept { return n_; }
  const CMatrix& gamma() const noexcept { return gamma_; }
  const std::vector<CMatrix>& alphas() const noexcept { return alphas_; }
  const std::vector<CMatrix>& betas() const noexcept { return betas_; }
  const std::vector<CMatrix>& dets() const noexcept { return dets_; }

  double gamma_norm() const noexcept { return gamma_norm_; }
  const std::vector<double>& alpha_norms() const noexcept { return alpha_norms_; }
  const std::vector<double>& beta_norms() const noexcept { return beta_norms_; }
  const std::vector<double>& det_norms() const noexcept { return det_norms_; }
  // A-priori spectral radius bound ||gamma|| + 2 sum ||alpha|| + sum ||beta|| ||A||.
  double norm_radius() const noexcept;

  bool dense_path() const noexcept { return !atoms_.has_value(); }
  const std::vector<Atom>& atoms() const;
  // Matrix of b -> eta(b) acting on column-major vec(b).
  const CMatrix& eta_operator() const noexcept { return eta_op_; }

  nlohmann::json to_json() const;

 private:
  void build_atoms();

  CMatrix gamma_;
  std::vector<CMatrix> alphas_;
  std::vector<CMatrix> betas_;
  std::vector<CMatrix> dets_;
  int n_ = 1;
  double gamma_norm_ = 0.0;
  std::vector<double> alpha_norms_;
  std::vector<double> beta_norms_;
  std::vector<double> det_norms_;
  std::optional<std::vector<Atom>> atoms_;
  CMatrix eta_op_;
};

struct SolverOptions {
  double tol = 1e-11;          // relative to max(1, ||lambda||)
  int max_iter = 2000;         // per continuation stage
  double damping_min = 0.05;   // smallest Picard damping factor
  double continuation_start = 1.0;
  bool use_newton = true;

  friend bool operator==(const SolverOptions&, const SolverOptions&) = default;
};

struct SubordinationState {
  CMatrix lambda;
  CMatrix omega;
  CMatrix gtilde;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  bool projected = false;  // an iterate had to be pushed back into the half-plane
};

// b -> sum_v alpha_v b alpha_v.
CMatrix eta(const ModelSpec& model, const CMatrix& b);

// (id (x) tr_n)(rho (x) I - sum_u beta_u (x) A_u)^{-1}.
CMatrix g_deterministic(const ModelSpec& model, const HalfPlanePoint& rho);

// gamma + rho + eta(G_beta(rho)).
CMatrix capital_lambda(const ModelSpec& model, const HalfPlanePoint& rho);

// Solves omega = lambda - gamma - eta(G_beta(omega)). A warm start skips the
// continuation ladder unless it fails to converge. Throws DivergenceError.
SubordinationState solve_subordination(const ModelSpec& model, const HalfPlanePoint& lambda,
                                       const SolverOptions& opts = {},
                                       const CMatrix* warm_start = nullptr);

// tr_m G~(z I_m), with z shifted by i*eps when it sits on the real axis and
// conjugate symmetry below it. `warm` carries omega between calls.
cplx scalar_gtilde(const ModelSpec& model, cplx z, double eps, const SolverOptions& opts = {},
                   CMatrix* warm = nullptr);

namespace detail {
// Unchecked evaluation used inside the solver.
CMatrix g_beta(const ModelSpec& model, const CMatrix& rho);
// Matrix of E -> -dG_beta(rho)[E] on column-major vec(E).
CMatrix g_beta_derivative(const ModelSpec& model, const CMatrix& rho);
}  // namespace detail

}  // namespace fsp
