// Randomized checks of the structural invariants, each over many draws.
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "freespectra/harness.hpp"
#include "freespectra/linearize.hpp"
#include "freespectra/rmt.hpp"
#include "freespectra/spectra.hpp"
#include "freespectra/subord.hpp"
#include "test_util.hpp"

using namespace fsp;
using namespace fsp::testing;

namespace {

std::vector<CMatrix> hermitian_args(int k, int n) {
  std::vector<CMatrix> out;
  for (int i = 0; i < k; ++i) out.push_back(random_hermitian(n));
  return out;
}

// Independent of the library's own helpers.
CMatrix im_part(const CMatrix& a) { return (a - a.adjoint()) / cplx(0.0, 2.0); }

double min_eig(const CMatrix& h) {
  return Eigen::SelfAdjointEigenSolver<CMatrix>(0.5 * (h + h.adjoint()), Eigen::EigenvaluesOnly).eigenvalues()(0);
}

ModelSpec random_model(int m, int r, int t, int n) {
  std::vector<CMatrix> alphas;
  std::vector<CMatrix> betas;
  std::vector<CMatrix> dets;
  for (int v = 0; v < r; ++v) alphas.push_back(random_hermitian(m, 0.8));
  for (int u = 0; u < t; ++u) {
    betas.push_back(random_hermitian(m, 0.8));
    dets.push_back(random_hermitian(n));
  }
  return ModelSpec(random_hermitian(m, 0.5), std::move(alphas), std::move(betas), std::move(dets));
}

}  // namespace

TEST_CASE("resolvent norm is bounded by the inverse imaginary part") {
  for (int trial = 0; trial < 100; ++trial) {
    const int m = uniform_int(1, 3);
    const int n = uniform_int(1, 6);
    const BlockOperator h(m, n, random_hermitian(m * n, 2.0));
    const CMatrix lam = random_half_plane(m, 0.05);
    const double bound = operator_norm(im_part(lam).inverse());
    CHECK(operator_norm(resolvent(h, HalfPlanePoint(lam)).data) <= bound + 1e-9);
  }
}

TEST_CASE("block row sums are bounded by m times the squared norm") {
  for (int trial = 0; trial < 50; ++trial) {
    const int m = uniform_int(1, 4);
    const int n = uniform_int(1, 5);
    const CMatrix big = random_matrix(m * n, m * n);
    const double norm2 = std::pow(operator_norm(big), 2);
    for (int l = 0; l < m; ++l) {
      double sum = 0.0;
      for (int k = 0; k < m; ++k) sum += std::pow(operator_norm(big.block(l * n, k * n, n, n)), 2);
      CHECK(sum <= m * norm2 * (1 + 1e-12));
    }
  }
}

TEST_CASE("partial trace of a resolvent has negative definite imaginary part") {
  for (int trial = 0; trial < 50; ++trial) {
    const int m = uniform_int(1, 3);
    const int n = uniform_int(2, 6);
    const BlockOperator h(m, n, random_hermitian(m * n, 2.0));
    const CMatrix g = partial_trace_n(resolvent(h, HalfPlanePoint(random_half_plane(m, 0.1))));
    CHECK(min_eig(-im_part(g)) > 0.0);
  }
}

TEST_CASE("adjoint is an involution compatible with evaluation") {
  for (int trial = 0; trial < 50; ++trial) {
    const int k = uniform_int(1, 4);
    std::vector<Monomial> monos;
    for (int i = 0; i < uniform_int(1, 5); ++i) {
      Monomial mo;
      mo.coefficient = cplx(uniform(), uniform());
      for (int d = 0; d < uniform_int(0, 4); ++d) mo.word.push_back({uniform_int(0, k - 1), false});
      monos.push_back(mo);
    }
    const NCPolynomial p(k, monos);
    CHECK(adjoint(adjoint(p)) == p);
    const auto args = hermitian_args(k, 4);
    CHECK(max_abs(evaluate(adjoint(p), args) - evaluate(p, args).adjoint()) <= 1e-12);

    // canonical form ignores input order and is idempotent
    auto shuffled = monos;
    std::shuffle(shuffled.begin(), shuffled.end(), engine());
    CHECK(NCPolynomial(k, shuffled) == p);
    CHECK(NCPolynomial(k, p.monomials()) == p);

    const auto sym = p + adjoint(p);
    const auto p0 = split_selfadjoint(sym);
    CHECK(p0 + adjoint(p0) == sym);
    CHECK(p0.degree() == sym.degree());
  }
}

TEST_CASE("linearizations are Hermitian and satisfy the corner identity") {
  for (int trial = 0; trial < 50; ++trial) {
    const int k = uniform_int(1, 4);
    const auto p = random_selfadjoint_polynomial(k, 4, 5);
    const auto lin = linearize(p);
    CHECK(max_abs(lin.gamma - lin.gamma.adjoint()) <= 1e-14);
    for (const auto& z : lin.zetas) CHECK(max_abs(z - z.adjoint()) <= 1e-14);
    const int n = uniform_int(2, 8);
    const auto args = hermitian_args(k, n);
    const double im = uniform(0.5, 3.0) * (uniform() < 0.0 ? -1.0 : 1.0);
    const cplx z(uniform(-3.0, 3.0), im);
    CAPTURE(p.to_string());
    CHECK(corner_resolvent_check(lin, p, args, z, 1e-9));
  }
}

TEST_CASE("pencil invertibility matches the spectrum of P") {
  for (int trial = 0; trial < 20; ++trial) {
    const int k = uniform_int(1, 3);
    const auto p = random_selfadjoint_polynomial(k, 3, 5);
    const auto lin = linearize(p);
    const int n = uniform_int(2, 5);
    const auto args = hermitian_args(k, n);
    const auto eig = hermitian_eigenvalues(evaluate(p, args));
    auto relative_smallest_sv = [&](double z) {
      CMatrix pencil = -lin.assemble(args);
      pencil.topLeftCorner(n, n) += z * CMatrix::Identity(n, n);
      const Eigen::VectorXd sv = Eigen::JacobiSVD<CMatrix>(pencil).singularValues();
      return sv.minCoeff() / sv.maxCoeff();
    };
    CHECK(relative_smallest_sv(eig[static_cast<std::size_t>(uniform_int(0, n - 1))]) <= 1e-8);
    CHECK(relative_smallest_sv(eig.back() + 0.5) > 1e-10);
  }
}

TEST_CASE("Q stays invertible with inverse norm below kappa") {
  for (int trial = 0; trial < 20; ++trial) {
    const int k = uniform_int(1, 3);
    const auto p = random_selfadjoint_polynomial(k, 4, 5);
    const auto lin = linearize(p);
    if (lin.m == 1) continue;
    const double c = uniform(0.5, 2.0);
    const auto bounds = linearization_bounds(lin, c);
    const int n = 3;
    auto args = hermitian_args(k, n);
    for (auto& a : args) a *= c / operator_norm(a);
    const CMatrix l = lin.assemble(args);
    const Eigen::Index q = (lin.m - 1) * n;
    CHECK(operator_norm(l.bottomRightCorner(q, q).inverse()) <= bounds.kappa * (1 + 1e-10));
    const double e = linearized_gap_bound(lin, c, 0.5);
    CHECK(e > 0.0);
    CHECK(e <= 0.5);
  }
}

TEST_CASE("subordination invariants on random models") {
  for (int trial = 0; trial < 25; ++trial) {
    const int m = uniform_int(1, 3);
    const int r = uniform_int(1, 2);
    const int t = uniform_int(0, 2);
    const auto model = random_model(m, r, t, 4);
    const CMatrix lam = random_half_plane(m, uniform(0.1, 1.0));
    const auto s = solve_subordination(model, HalfPlanePoint(lam));
    REQUIRE(s.converged);
    CHECK(min_eig(im_part(s.omega)) >= min_eig(im_part(lam)) - 1e-8);
    CHECK(min_eig(-im_part(s.gtilde)) >= -1e-10);
    CHECK(operator_norm(s.gtilde) <= operator_norm(im_part(lam).inverse()) + 1e-9);
  }
}

TEST_CASE("omega inverts capital lambda") {
  for (int trial = 0; trial < 25; ++trial) {
    const int m = uniform_int(1, 3);
    const auto model = random_model(m, uniform_int(1, 2), uniform_int(0, 2), 4);
    const CMatrix rho = random_half_plane(m, 1.0);
    const CMatrix lam = capital_lambda(model, HalfPlanePoint(rho));
    if (!HalfPlanePoint::contains(lam)) continue;
    const auto s = solve_subordination(model, HalfPlanePoint(lam));
    CHECK((s.omega - rho).norm() <= 1e-7);
  }
}

TEST_CASE("semicircular functional equation") {
  for (int trial = 0; trial < 40; ++trial) {
    const int m = uniform_int(1, 4);
    std::vector<CMatrix> alphas;
    for (int v = 0; v < uniform_int(1, 3); ++v) alphas.push_back(random_hermitian(m));
    const ModelSpec model(CMatrix::Zero(m, m), alphas);
    const CMatrix lam = random_half_plane(m, uniform(0.05, 1.0));
    const auto s = solve_subordination(model, HalfPlanePoint(lam));
    CHECK((s.gtilde.inverse() - (lam - eta(model, s.gtilde))).norm() <= 1e-8);
  }
}

TEST_CASE("Stieltjes transform: asymptotics and conjugate symmetry") {
  for (int trial = 0; trial < 10; ++trial) {
    const auto model = random_model(uniform_int(1, 3), 1, uniform_int(0, 1), 4);
    const cplx far(0.0, 200.0);
    // normalized trace, so z g(z) -> 1
    CHECK(std::abs(far * scalar_gtilde(model, far, 0.0) - 1.0) <= 0.005);
    const cplx z(uniform(-2, 2), uniform(0.05, 1.0));
    CHECK(std::abs(scalar_gtilde(model, std::conj(z), 0.0) - std::conj(scalar_gtilde(model, z, 0.0))) <= 1e-10);
  }
}

TEST_CASE("densities of atomless models integrate to one") {
  for (int trial = 0; trial < 4; ++trial) {
    const auto model = random_model(uniform_int(1, 2), 1, uniform_int(0, 1), 3);
    for (double eps : {1e-2, 3e-3}) {
      const auto d = density_of_model(model, default_grid(model.norm_radius(), eps), eps);
      CHECK(std::abs(d.mass - 1.0) <= 0.02);
      CHECK(d.all_converged());
    }
  }
}

TEST_CASE("detected support grows with eps") {
  for (int trial = 0; trial < 3; ++trial) {
    const auto model = random_model(1, 1, 1, 3);
    const auto narrow = support_of_model(model, 2e-3, 1e-3);
    const auto wide = support_of_model(model, 1e-2, 1e-3);
    for (const auto& [l, r] : narrow.intervals) {
      CHECK(wide.contains(l, 1e-4));
      CHECK(wide.contains(r, 1e-4));
    }
  }
}

TEST_CASE("deterministic polynomials reproduce the eigenvalues as atoms") {
  for (int trial = 0; trial < 5; ++trial) {
    const int n = uniform_int(2, 5);
    const CMatrix a = random_hermitian(n, 3.0);
    const auto ev = hermitian_eigenvalues(a);
    const auto s = polynomial_support(parse_polynomial("a1", 0, 1), 0, {a}, 1e-3, 1e-3);
    CAPTURE(n);
    // eigenvalues closer than a few eps merge into one peak
    std::vector<double> distinct{ev.front()};
    for (double x : ev) {
      if (x - distinct.back() > 1e-2) distinct.push_back(x);
    }
    REQUIRE(s.atoms.size() == distinct.size());
    for (std::size_t i = 0; i < distinct.size(); ++i) CHECK(std::abs(s.atoms[i] - distinct[i]) <= 1e-3);
  }
}

TEST_CASE("Bai-Yin bound for every finite-fourth-moment law") {
  const std::vector<EntryLaw> laws{EntryLaw::gaussian(), EntryLaw::rademacher(), EntryLaw::uniform(),
                                   EntryLaw::student_t(7.0), EntryLaw::two_point(0.3)};
  for (const auto& law : laws) {
    REQUIRE(law.has_finite_fourth_moment());
    CAPTURE(law.to_string());
    int below = 0;
    for (int k = 0; k < 20; ++k) {
      const auto ev = hermitian_eigenvalues(sample_wigner(1000, law, 2024, wigner_stream(static_cast<std::uint64_t>(k), 0)).matrix);
      below += std::max(-ev.front(), ev.back()) < 2.2 ? 1 : 0;
    }
    CHECK(below >= 19);
  }
}

TEST_CASE("identical inputs give bit-identical samples") {
  for (int trial = 0; trial < 5; ++trial) {
    const auto seed = static_cast<std::uint64_t>(uniform_int(0, 1 << 30));
    const auto a = truncate_convolve(sample_wigner(50, EntryLaw::uniform(), seed, 3), 12.0, 0.2, seed + 1);
    const auto b = truncate_convolve(sample_wigner(50, EntryLaw::uniform(), seed, 3), 12.0, 0.2, seed + 1);
    CHECK(a.matrix == b.matrix);
  }
}

TEST_CASE("inclusion verdicts are monotone in eps") {
  Ensemble e;
  for (int trial = 0; trial < 3; ++trial) {
    e.seed = static_cast<std::uint64_t>(trial);
    int previous = 1 << 30;
    for (double eps : {1e-3, 1e-2, 0.1, 0.3}) {
      const auto rep = check_spectrum_inclusion(ModelSpec::semicircle(), e, 150, eps, 3);
      const int outside = rep.summary.at("total_outside").get<int>();
      CHECK(outside <= previous);
      previous = outside;
    }
  }
}
