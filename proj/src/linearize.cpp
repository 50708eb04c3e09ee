#include "freespectra/linearize.hpp"

#include <cmath>
#include <limits>

#include "freespectra/error.hpp"
#include "freespectra/matrix_io.hpp"

namespace fsp {

namespace {

// Places c * X_g (or the constant c when g < 0) at (row, col) of a pencil.
void put(AffinePencil& p, Eigen::Index row, Eigen::Index col, cplx c, int g) {
  if (g < 0) {
    p.constant(row, col) += c;
  } else {
    p.coeffs[static_cast<std::size_t>(g)](row, col) += c;
  }
}

AffinePencil sub_pencil(const AffinePencil& p, Eigen::Index r0, Eigen::Index c0, Eigen::Index rows,
                        Eigen::Index cols) {
  AffinePencil out;
  out.constant = p.constant.block(r0, c0, rows, cols);
  for (const auto& z : p.coeffs) out.coeffs.push_back(z.block(r0, c0, rows, cols));
  return out;
}

}  // namespace

AffinePencil AffinePencil::zero(Eigen::Index rows, Eigen::Index cols, int k) {
  AffinePencil p;
  p.constant = CMatrix::Zero(rows, cols);
  p.coeffs.assign(static_cast<std::size_t>(k), CMatrix::Zero(rows, cols));
  return p;
}

CMatrix Linearization::assemble(std::span<const CMatrix> args) const {
  if (args.size() != zetas.size()) throw SizeError("Linearization::assemble: wrong argument count");
  const auto n = args.empty() ? Eigen::Index{1} : args[0].rows();
  std::vector<CMatrix> coeffs{gamma};
  std::vector<CMatrix> blocks{CMatrix::Identity(n, n)};
  for (std::size_t j = 0; j < zetas.size(); ++j) {
    coeffs.push_back(zetas[j]);
    blocks.push_back(args[j]);
  }
  return kron_assemble(coeffs, blocks).data;
}

MonomialBlock linearize_monomial(const Monomial& mono, int k) {
  const int l = mono.degree();
  if (l < 1) throw ContractViolation("linearize_monomial: constant terms are absorbed into gamma");
  for (const auto& g : mono.word) {
    if (g.starred) throw ContractViolation("linearize_monomial: starred letters are not supported");
    if (g.index < 0 || g.index >= k) throw SizeError("linearize_monomial: generator outside arity");
  }
  // l x l pattern: c X_{i1} in the top-right corner, X_{i_{r+1}} on the
  // antidiagonal of row r, and -1 just right of the antidiagonal.
  AffinePencil full = AffinePencil::zero(l, l, k);
  put(full, 0, l - 1, mono.coefficient, mono.word[0].index);
  for (int r = 1; r < l; ++r) {
    put(full, r, l - 1 - r, 1.0, mono.word[static_cast<std::size_t>(r)].index);
    put(full, r, l - r, -1.0, -1);
  }
  MonomialBlock block;
  if (l == 1) {
    block.corner = full;
    block.u = AffinePencil::zero(1, 0, k);
    block.v = AffinePencil::zero(0, 1, k);
    block.q = AffinePencil::zero(0, 0, k);
    return block;
  }
  block.corner = AffinePencil::zero(1, 1, k);
  block.u = sub_pencil(full, 0, 1, 1, l - 1);
  block.v = sub_pencil(full, 1, 0, l - 1, 1);
  block.q = sub_pencil(full, 1, 1, l - 1, l - 1);
  return block;
}

Linearization linearize(const NCPolynomial& p) {
  if (!is_selfadjoint(p)) throw ContractViolation("linearize: polynomial is not self-adjoint");
  const int k = p.arity();
  for (const auto& mono : p.monomials()) {
    for (const auto& g : mono.word) {
      if (!p.generator_selfadjoint(g.index)) {
        throw ContractViolation("linearize: generator " + std::to_string(g.index + 1) +
                                " is not self-adjoint");
      }
    }
  }

  std::vector<Monomial> low;
  std::vector<Monomial> high;
  for (const auto& mono : p.monomials()) (mono.degree() <= 1 ? low : high).push_back(mono);
  const NCPolynomial half = split_selfadjoint(NCPolynomial(p.selfadjoint_flags(), high));

  std::vector<MonomialBlock> blocks;
  Eigen::Index d = 0;
  for (const auto& mono : half.monomials()) {
    blocks.push_back(linearize_monomial(mono, k));
    d += mono.degree() - 1;
  }
  const Eigen::Index m = 1 + 2 * d;
  AffinePencil pencil = AffinePencil::zero(m, m, k);
  for (const auto& mono : low) {
    put(pencil, 0, 0, mono.coefficient, mono.word.empty() ? -1 : mono.word[0].index);
  }

  // Layout [[corner, u0, v0*], [u0*, 0, Q0*], [v0, Q0, 0]] with Q0 the
  // block diagonal of the monomial Q's.
  auto place = [&](auto&& getter) {
    Eigen::Index off = 0;
    for (const auto& b : blocks) {
      const auto s = b.q.rows();
      for (Eigen::Index j = 0; j < s; ++j) {
        const cplx uc = getter(b.u, 0, j);
        const cplx vc = getter(b.v, j, 0);
        // row 0 / column 0 entries and their mirror images
        getter.set(0, 1 + off + j, uc);
        getter.set(1 + off + j, 0, std::conj(uc));
        getter.set(1 + d + off + j, 0, vc);
        getter.set(0, 1 + d + off + j, std::conj(vc));
        for (Eigen::Index i = 0; i < s; ++i) {
          const cplx qc = getter(b.q, i, j);
          getter.set(1 + d + off + i, 1 + off + j, qc);
          getter.set(1 + off + j, 1 + d + off + i, std::conj(qc));
        }
      }
      off += s;
    }
  };
  struct Access {
    CMatrix* target;
    int g;
    cplx operator()(const AffinePencil& src, Eigen::Index i, Eigen::Index j) const {
      return g < 0 ? src.constant(i, j) : src.coeffs[static_cast<std::size_t>(g)](i, j);
    }
    void set(Eigen::Index i, Eigen::Index j, cplx c) const { (*target)(i, j) += c; }
  };
  place(Access{&pencil.constant, -1});
  for (int g = 0; g < k; ++g) place(Access{&pencil.coeffs[static_cast<std::size_t>(g)], g});

  Linearization lin;
  lin.m = static_cast<int>(m);
  lin.gamma = std::move(pencil.constant);
  lin.zetas = std::move(pencil.coeffs);
  lin.source_degree = p.degree();
  return lin;
}

double corner_resolvent_deviation(const Linearization& lin, const NCPolynomial& p,
                                  std::span<const CMatrix> args, cplx z) {
  const CMatrix value = evaluate(p, args);
  const auto n = value.rows();
  CMatrix lhs;
  CMatrix big = -lin.assemble(args);
  big.topLeftCorner(n, n).diagonal().array() += z;
  CMatrix rhs;
  try {
    lhs = checked_inverse(z * CMatrix::Identity(n, n) - value, 1e-13);
    rhs = checked_inverse(big, 1e-13).topLeftCorner(n, n);
  } catch (const IllConditionedError& e) {
    throw SpectralPointError(std::string("corner_resolvent_check: z is a spectral point: ") + e.what());
  }
  return (lhs - rhs).cwiseAbs().maxCoeff();
}

bool corner_resolvent_check(const Linearization& lin, const NCPolynomial& p,
                            std::span<const CMatrix> args, cplx z, double tol) {
  return corner_resolvent_deviation(lin, p, args, z) <= tol;
}

LinearizationBounds linearization_bounds(const Linearization& lin, double norm_bound) {
  LinearizationBounds out;
  if (lin.m == 1) return out;
  const Eigen::Index s = lin.m - 1;
  const CMatrix qc_inv = checked_inverse(lin.gamma.bottomRightCorner(s, s));
  const double qc_inv_norm = operator_norm(qc_inv);

  // The pattern of Qc^{-1} Q_j decides the nilpotency index of
  // T = sum_j Qc^{-1} Q_j (x) y_j, independent of the y_j.
  Eigen::MatrixXd pattern = Eigen::MatrixXd::Zero(s, s);
  double t_norm = 0.0;
  for (const auto& z : lin.zetas) {
    const CMatrix prod = qc_inv * z.bottomRightCorner(s, s);
    pattern += prod.cwiseAbs();
    t_norm += operator_norm(prod);
  }
  t_norm *= norm_bound;
  Eigen::MatrixXd mask = (pattern.array() > 1e-14).cast<double>();
  Eigen::MatrixXd power = mask;
  int index = 1;
  while (power.maxCoeff() > 0.0 && index <= s) {
    power = ((power * mask).array() > 0.0).cast<double>();
    ++index;
  }
  if (power.maxCoeff() > 0.0) {
    // Not nilpotent: plain Neumann series, finite only for t < 1.
    out.nilpotency_index = 0;
    out.kappa = t_norm < 1.0 ? qc_inv_norm / (1.0 - t_norm) : std::numeric_limits<double>::infinity();
  } else {
    out.nilpotency_index = index;
    double sum = 0.0;
    double term = 1.0;
    for (int k = 0; k < index; ++k) {
      sum += term;
      term *= t_norm;
    }
    out.kappa = qc_inv_norm * sum;
  }

  double ell = lin.gamma.row(0).tail(s).norm();
  for (const auto& z : lin.zetas) ell += norm_bound * z.row(0).tail(s).norm();
  out.ell = ell;
  return out;
}

double linearized_gap_bound(const Linearization& lin, double norm_bound, double delta) {
  if (!(delta > 0.0)) throw ParameterError("linearized_gap_bound: delta must be positive");
  if (norm_bound < 0.0) throw ParameterError("linearized_gap_bound: norm bound must be nonnegative");
  if (lin.m == 1) return delta;
  const auto b = linearization_bounds(lin, norm_bound);
  return std::min(0.5 / b.kappa, delta / (1.0 + 2.0 * b.kappa * b.kappa * b.ell * b.ell));
}

nlohmann::json linearization_to_json(const Linearization& lin) {
  nlohmann::json j;
  j["m"] = lin.m;
  j["k"] = lin.arity();
  j["source_degree"] = lin.source_degree;
  j["gamma"] = matrix_to_json(lin.gamma);
  auto zetas = nlohmann::json::array();
  for (const auto& z : lin.zetas) zetas.push_back(matrix_to_json(z));
  j["zetas"] = std::move(zetas);
  return j;
}

Linearization linearization_from_json(const nlohmann::json& j) {
  Linearization lin;
  lin.m = j.at("m").get<int>();
  lin.gamma = matrix_from_json(j.at("gamma"));
  for (const auto& z : j.at("zetas")) lin.zetas.push_back(matrix_from_json(z));
  lin.source_degree = j.value("source_degree", 0);
  if (lin.gamma.rows() != lin.m || lin.gamma.cols() != lin.m) throw SizeError("linearization JSON: gamma is not m x m");
  for (const auto& z : lin.zetas) {
    if (z.rows() != lin.m || z.cols() != lin.m) throw SizeError("linearization JSON: zeta is not m x m");
  }
  if (!is_hermitian(lin.gamma, 1e-14)) throw StructureError("linearization JSON: gamma is not Hermitian");
  for (const auto& z : lin.zetas) {
    if (!is_hermitian(z, 1e-14)) throw StructureError("linearization JSON: zeta is not Hermitian");
  }
  return lin;
}

}  // namespace fsp
