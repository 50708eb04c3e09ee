#include "freespectra/subord.hpp"

#include <algorithm>
#include <cmath>

#include "freespectra/error.hpp"
#include "freespectra/matrix_io.hpp"

namespace fsp {

namespace {

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

void require_hermitian(const CMatrix& m, const char* what) {
  if (!m.allFinite()) throw ParameterError(std::string(what) + " has non-finite entries");
  if (!is_hermitian(m)) throw StructureError(std::string(what) + " is not Hermitian");
}

// Pushes omega back into the upper half-plane; returns true if it had to.
bool project_to_half_plane(CMatrix& omega) {
  const double lo = min_eigenvalue(imag_part(omega));
  if (lo > kHalfPlaneTol) return false;
  omega.diagonal().array() += cplx(0.0, std::abs(lo) + 1e-10);
  return true;
}

struct StageResult {
  CMatrix omega;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  bool projected = false;
};

// Fixed-point defect F(omega) = omega - (lambda - gamma - eta(G_beta(omega))).
CMatrix defect(const ModelSpec& model, const CMatrix& lambda, const CMatrix& omega) {
  return omega - lambda + model.gamma() + eta(model, detail::g_beta(model, omega));
}

StageResult run_stage(const ModelSpec& model, const CMatrix& lambda, CMatrix omega,
                      const SolverOptions& opts, double tol) {
  StageResult out;
  out.projected = project_to_half_plane(omega);
  const auto m = model.m();
  const CMatrix identity = CMatrix::Identity(m * m, m * m);
  CMatrix f = defect(model, lambda, omega);
  double res = f.norm();
  double theta = 1.0;

  while (out.iterations < opts.max_iter && !(res <= tol)) {
    ++out.iterations;
    bool accepted = false;

    // Newton step with backtracking: any fixed point in the half-plane is
    // the unique solution, so a step is kept only if it stays there and
    // reduces the defect.
    if (opts.use_newton) {
      const CMatrix jac = identity - model.eta_operator() * detail::g_beta_derivative(model, omega);
      const CVector rhs = -Eigen::Map<const CVector>(f.data(), f.size());
      const CVector step_vec = jac.partialPivLu().solve(rhs);
      if (step_vec.allFinite()) {
        const CMatrix step = Eigen::Map<const CMatrix>(step_vec.data(), m, m);
        for (double s = 1.0; s >= 1.0 / 1024.0; s *= 0.5) {
          const CMatrix cand = omega + s * step;
          if (!HalfPlanePoint::contains(cand)) continue;
          const CMatrix fc = defect(model, lambda, cand);
          const double rc = fc.norm();
          if (rc < (1.0 - 1e-4 * s) * res || rc <= tol) {
            omega = cand;
            f = fc;
            res = rc;
            accepted = true;
            break;
          }
        }
      }
    }

    // Damped Picard: omega <- (1 - theta) omega + theta T(omega) = omega - theta F.
    if (!accepted) {
      CMatrix cand = omega - theta * f;
      if (project_to_half_plane(cand)) out.projected = true;
      const CMatrix fc = defect(model, lambda, cand);
      const double rc = fc.norm();
      if (rc > res && theta > opts.damping_min) {
        theta = std::max(0.5 * theta, opts.damping_min);
        continue;
      }
      omega = std::move(cand);
      f = fc;
      res = rc;
    }
  }
  out.omega = std::move(omega);
  out.residual = res;
  out.converged = res <= tol;
  return out;
}

}  // namespace

ModelSpec::ModelSpec(CMatrix gamma, std::vector<CMatrix> alphas, std::vector<CMatrix> betas,
                     std::vector<CMatrix> dets)
    : gamma_(std::move(gamma)), alphas_(std::move(alphas)), betas_(std::move(betas)), dets_(std::move(dets)) {
  if (gamma_.rows() < 1 || gamma_.rows() != gamma_.cols()) throw SizeError("model: gamma must be square and nonempty");
  const auto m = gamma_.rows();
  require_hermitian(gamma_, "model: gamma");
  for (const auto& a : alphas_) {
    if (a.rows() != m || a.cols() != m) throw SizeError("model: alpha has the wrong size");
    require_hermitian(a, "model: alpha");
  }
  for (const auto& b : betas_) {
    if (b.rows() != m || b.cols() != m) throw SizeError("model: beta has the wrong size");
    require_hermitian(b, "model: beta");
  }
  if (betas_.size() != dets_.size()) {
    throw SizeError("model: " + std::to_string(betas_.size()) + " beta coefficients but " +
                    std::to_string(dets_.size()) + " deterministic matrices");
  }
  if (!dets_.empty()) n_ = static_cast<int>(dets_[0].rows());
  for (const auto& a : dets_) {
    if (a.rows() != n_ || a.cols() != n_) throw SizeError("model: deterministic matrices must share one square size");
    require_hermitian(a, "model: deterministic matrix");
  }

  gamma_norm_ = operator_norm(gamma_);
  for (const auto& a : alphas_) alpha_norms_.push_back(operator_norm(a));
  for (const auto& b : betas_) beta_norms_.push_back(operator_norm(b));
  for (const auto& a : dets_) det_norms_.push_back(operator_norm(a));

  eta_op_ = CMatrix::Zero(m * m, m * m);
  for (const auto& a : alphas_) eta_op_ += kron(a.transpose(), a);
  build_atoms();
}

void ModelSpec::build_atoms() {
  const auto tcount = static_cast<std::size_t>(t());
  std::vector<std::vector<double>> points;
  if (tcount == 0) {
    points.emplace_back();
  } else if (tcount == 1) {
    for (double v : hermitian_eigenvalues(dets_[0])) points.push_back({v});
  } else {
    for (const auto& a : dets_) {
      CMatrix off = a;
      off.diagonal().setZero();
      if (off.cwiseAbs().maxCoeff() > 1e-14 * (1.0 + a.cwiseAbs().maxCoeff())) return;  // dense path
    }
    for (int i = 0; i < n_; ++i) {
      std::vector<double> p;
      for (const auto& a : dets_) p.push_back(a(i, i).real());
      points.push_back(std::move(p));
    }
  }
  std::sort(points.begin(), points.end());
  double scale = 1.0;
  for (double v : det_norms_) scale = std::max(scale, v);
  const double merge_tol = 1e-12 * scale;
  auto close = [&](const std::vector<double>& x, const std::vector<double>& y) {
    for (std::size_t u = 0; u < x.size(); ++u) {
      if (std::abs(x[u] - y[u]) > merge_tol) return false;
    }
    return true;
  };

  std::vector<Atom> atoms;
  const double unit = 1.0 / static_cast<double>(points.size());
  for (const auto& p : points) {
    if (!atoms.empty() && close(atoms.back().point, p)) {
      atoms.back().weight += unit;
      continue;
    }
    Atom atom;
    atom.point = p;
    atom.weight = unit;
    atom.shift = CMatrix::Zero(m(), m());
    for (std::size_t u = 0; u < tcount; ++u) atom.shift += p[u] * betas_[u];
    atoms.push_back(std::move(atom));
  }
  atoms_ = std::move(atoms);
}

ModelSpec ModelSpec::from_linearization(const Linearization& lin, int r, std::vector<CMatrix> dets) {
  if (r < 0 || static_cast<std::size_t>(r) + dets.size() != lin.zetas.size()) {
    throw SizeError("model: linearization has " + std::to_string(lin.zetas.size()) + " coefficients, expected r + t = " +
                    std::to_string(r + static_cast<int>(dets.size())));
  }
  std::vector<CMatrix> alphas(lin.zetas.begin(), lin.zetas.begin() + r);
  std::vector<CMatrix> betas(lin.zetas.begin() + r, lin.zetas.end());
  return ModelSpec(lin.gamma, std::move(alphas), std::move(betas), std::move(dets));
}

ModelSpec ModelSpec::semicircle() { return ModelSpec(CMatrix::Zero(1, 1), {CMatrix::Identity(1, 1)}); }

double ModelSpec::norm_radius() const noexcept {
  double radius = gamma_norm_;
  for (double a : alpha_norms_) radius += 2.0 * a;
  for (std::size_t u = 0; u < beta_norms_.size(); ++u) radius += beta_norms_[u] * det_norms_[u];
  return radius;
}

const std::vector<ModelSpec::Atom>& ModelSpec::atoms() const {
  if (!atoms_) throw ContractViolation("model: deterministic part has no joint diagonal form");
  return *atoms_;
}

nlohmann::json ModelSpec::to_json() const {
  nlohmann::json j{{"m", m()}, {"r", r()}, {"t", t()}, {"n", n_}, {"gamma", matrix_to_json(gamma_)}};
  auto list = [](const std::vector<CMatrix>& ms) {
    auto arr = nlohmann::json::array();
    for (const auto& x : ms) arr.push_back(matrix_to_json(x));
    return arr;
  };
  j["alphas"] = list(alphas_);
  j["betas"] = list(betas_);
  j["det_norms"] = det_norms_;
  j["norm_radius"] = norm_radius();
  j["representation"] = dense_path() ? "dense" : "atoms";
  if (atoms_) j["atom_count"] = atoms_->size();
  return j;
}

CMatrix eta(const ModelSpec& model, const CMatrix& b) {
  if (b.rows() != model.m() || b.cols() != model.m()) throw SizeError("eta: argument has the wrong size");
  CMatrix out = CMatrix::Zero(b.rows(), b.cols());
  for (const auto& a : model.alphas()) out.noalias() += a * b * a;
  return out;
}

namespace detail {

CMatrix g_beta(const ModelSpec& model, const CMatrix& rho) {
  const int m = model.m();
  if (!model.dense_path()) {
    CMatrix out = CMatrix::Zero(m, m);
    for (const auto& atom : model.atoms()) out += atom.weight * checked_inverse(rho - atom.shift);
    return out;
  }
  std::vector<CMatrix> coeffs{rho};
  std::vector<CMatrix> blocks{CMatrix::Identity(model.n(), model.n())};
  for (int u = 0; u < model.t(); ++u) {
    coeffs.push_back(-model.betas()[static_cast<std::size_t>(u)]);
    blocks.push_back(model.dets()[static_cast<std::size_t>(u)]);
  }
  BlockOperator op = kron_assemble(coeffs, blocks);
  op.data = checked_inverse(op.data);
  return partial_trace_n(op);
}

CMatrix g_beta_derivative(const ModelSpec& model, const CMatrix& rho) {
  const int m = model.m();
  CMatrix out = CMatrix::Zero(m * m, m * m);
  if (!model.dense_path()) {
    for (const auto& atom : model.atoms()) {
      const CMatrix res = checked_inverse(rho - atom.shift);
      out += atom.weight * kron(res.transpose(), res);
    }
    return out;
  }
  // K[(a,b),(i,j)] = tr_n(R_ai R_jb) with R_xy the n x n blocks of the resolvent.
  std::vector<CMatrix> coeffs{rho};
  const int n = model.n();
  std::vector<CMatrix> blocks{CMatrix::Identity(n, n)};
  for (int u = 0; u < model.t(); ++u) {
    coeffs.push_back(-model.betas()[static_cast<std::size_t>(u)]);
    blocks.push_back(model.dets()[static_cast<std::size_t>(u)]);
  }
  BlockOperator op = kron_assemble(coeffs, blocks);
  op.data = checked_inverse(op.data);
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
          const cplx s = op.block(a, i).cwiseProduct(op.block(j, b).transpose()).sum();
          out(a + b * m, i + j * m) = s / static_cast<double>(n);
        }
      }
    }
  }
  return out;
}

}  // namespace detail

CMatrix g_deterministic(const ModelSpec& model, const HalfPlanePoint& rho) {
  if (rho.size() != model.m()) throw SizeError("g_deterministic: rho has the wrong size");
  return detail::g_beta(model, rho.value());
}

CMatrix capital_lambda(const ModelSpec& model, const HalfPlanePoint& rho) {
  return model.gamma() + rho.value() + eta(model, g_deterministic(model, rho));
}

SubordinationState solve_subordination(const ModelSpec& model, const HalfPlanePoint& lambda,
                                       const SolverOptions& opts, const CMatrix* warm_start) {
  if (lambda.size() != model.m()) throw SizeError("solve_subordination: lambda has the wrong size");
  const CMatrix& target = lambda.value();
  SubordinationState state;
  state.lambda = target;
  const double tol = opts.tol * std::max(1.0, operator_norm(target));

  if (model.r() == 0) {
    // No semicircular part: the fixed point is explicit.
    state.omega = target - model.gamma();
    state.projected = project_to_half_plane(state.omega);
    state.gtilde = detail::g_beta(model, state.omega);
    state.residual = defect(model, target, state.omega).norm();
    state.iterations = 1;
    state.converged = state.residual <= tol;
    return state;
  }

  auto finish = [&](const StageResult& s) {
    state.omega = s.omega;
    state.residual = s.residual;
    state.converged = s.converged;
    state.projected = state.projected || s.projected;
    state.gtilde = detail::g_beta(model, state.omega);
  };

  if (warm_start != nullptr && warm_start->rows() == model.m() && warm_start->cols() == model.m()) {
    const StageResult s = run_stage(model, target, *warm_start, opts, tol);
    state.iterations += s.iterations;
    if (s.converged) {
      finish(s);
      return state;
    }
  }

  // Continuation ladder in the imaginary direction: opts.continuation_start
  // times 1, 0.5, 0.2, 0.1, 0.05, ... down to the target height.
  const CMatrix re = real_part(target);
  const CMatrix im = imag_part(target);
  const double height = min_eigenvalue(im);
  std::vector<double> ladder;
  if (height < 0.05 && opts.continuation_start > height) {
    static constexpr double kMantissa[] = {1.0, 0.5, 0.2};
    for (double decade = opts.continuation_start; ladder.size() < 64; decade *= 0.1) {
      for (double f : kMantissa) {
        const double level = decade * f;
        if (level > height) ladder.push_back(level);
      }
      if (decade * 0.1 <= height) break;
    }
  }

  CMatrix omega = target;
  bool first = true;
  for (double level : ladder) {
    const CMatrix stage_lambda = re + cplx(0.0, level / height) * im;
    const double stage_tol = opts.tol * std::max(1.0, operator_norm(stage_lambda));
    const StageResult s = run_stage(model, stage_lambda, first ? stage_lambda : omega, opts, stage_tol);
    state.iterations += s.iterations;
    state.projected = state.projected || s.projected;
    omega = s.omega;
    first = false;
  }
  const StageResult s = run_stage(model, target, omega, opts, tol);
  state.iterations += s.iterations;
  finish(s);
  if (!state.converged) {
    throw DivergenceError("subordination solver did not converge (residual " + std::to_string(state.residual) + ")",
                          state.residual, state.iterations);
  }
  return state;
}

cplx scalar_gtilde(const ModelSpec& model, cplx z, double eps, const SolverOptions& opts, CMatrix* warm) {
  if (z.imag() < 0.0) return std::conj(scalar_gtilde(model, std::conj(z), eps, opts, warm));
  if (z.imag() == 0.0) {
    if (!(eps > 0.0)) throw ParameterError("scalar_gtilde: real z needs eps > 0");
    z += cplx(0.0, eps);
  }
  const auto lambda = HalfPlanePoint::scalar(z, model.m());
  const auto state = solve_subordination(model, lambda, opts, warm);
  if (warm != nullptr) *warm = state.omega;
  return state.gtilde.trace() / static_cast<double>(model.m());
}

}  // namespace fsp
