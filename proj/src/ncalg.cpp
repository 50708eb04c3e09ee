#include "freespectra/ncalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "freespectra/error.hpp"

namespace fsp {

namespace {

bool word_less(const Word& a, const Word& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

std::string format_coefficient(cplx c) {
  char buf[96];
  if (c.imag() == 0.0) {
    std::snprintf(buf, sizeof buf, "%.17g", c.real());
  } else if (c.real() == 0.0) {
    std::snprintf(buf, sizeof buf, "%.17gi", c.imag());
  } else {
    std::snprintf(buf, sizeof buf, "(%.17g%+.17gi)", c.real(), c.imag());
  }
  return buf;
}

}  // namespace

std::string generator_name(int index, int r) {
  if (r < 0) return "X" + std::to_string(index + 1);
  return index < r ? "x" + std::to_string(index + 1) : "a" + std::to_string(index - r + 1);
}

NCPolynomial::NCPolynomial(int arity, std::vector<Monomial> monomials)
    : NCPolynomial(std::vector<bool>(static_cast<std::size_t>(arity), true), std::move(monomials)) {}

NCPolynomial::NCPolynomial(std::vector<bool> selfadjoint_flags, std::vector<Monomial> monomials)
    : selfadjoint_(std::move(selfadjoint_flags)), monomials_(std::move(monomials)) {
  canonicalize();
}

NCPolynomial NCPolynomial::constant(int arity, cplx c) { return NCPolynomial(arity, {Monomial{c, {}}}); }

NCPolynomial NCPolynomial::generator(int arity, int index, cplx c) {
  return NCPolynomial(arity, {Monomial{c, {Generator{index, false}}}});
}

void NCPolynomial::canonicalize() {
  const int k = arity();
  for (auto& mono : monomials_) {
    for (auto& g : mono.word) {
      if (g.index < 0 || g.index >= k) {
        throw ContractViolation("generator index " + std::to_string(g.index) +
                                " outside declared arity " + std::to_string(k));
      }
      if (selfadjoint_[static_cast<std::size_t>(g.index)]) g.starred = false;
    }
  }
  std::sort(monomials_.begin(), monomials_.end(),
            [](const Monomial& a, const Monomial& b) { return word_less(a.word, b.word); });
  std::vector<Monomial> merged;
  for (auto& mono : monomials_) {
    if (!merged.empty() && merged.back().word == mono.word) {
      merged.back().coefficient += mono.coefficient;
    } else {
      merged.push_back(std::move(mono));
    }
  }
  std::erase_if(merged, [](const Monomial& m) { return std::abs(m.coefficient) < kCoefficientFloor; });
  monomials_ = std::move(merged);
}

int NCPolynomial::degree() const noexcept {
  return monomials_.empty() ? 0 : monomials_.back().degree();
}

NCPolynomial NCPolynomial::operator+(const NCPolynomial& other) const {
  if (other.selfadjoint_ != selfadjoint_) throw SizeError("adding polynomials over different generator sets");
  auto all = monomials_;
  all.insert(all.end(), other.monomials_.begin(), other.monomials_.end());
  return NCPolynomial(selfadjoint_, std::move(all));
}

NCPolynomial NCPolynomial::operator*(cplx s) const {
  auto scaled = monomials_;
  for (auto& m : scaled) m.coefficient *= s;
  return NCPolynomial(selfadjoint_, std::move(scaled));
}

NCPolynomial NCPolynomial::operator*(const NCPolynomial& other) const {
  if (other.selfadjoint_ != selfadjoint_) {
    throw SizeError("multiplying polynomials over different generator sets");
  }
  std::vector<Monomial> out;
  out.reserve(monomials_.size() * other.monomials_.size());
  for (const auto& a : monomials_) {
    for (const auto& b : other.monomials_) {
      Word w = a.word;
      w.insert(w.end(), b.word.begin(), b.word.end());
      out.push_back(Monomial{a.coefficient * b.coefficient, std::move(w)});
    }
  }
  return NCPolynomial(selfadjoint_, std::move(out));
}

bool operator==(const NCPolynomial& a, const NCPolynomial& b) {
  if (a.selfadjoint_ != b.selfadjoint_ || a.monomials_.size() != b.monomials_.size()) return false;
  for (std::size_t i = 0; i < a.monomials_.size(); ++i) {
    if (a.monomials_[i].word != b.monomials_[i].word ||
        a.monomials_[i].coefficient != b.monomials_[i].coefficient) {
      return false;
    }
  }
  return true;
}

std::string NCPolynomial::to_string(int semicircular_count) const {
  if (monomials_.empty()) return "0";
  std::string out;
  for (std::size_t i = 0; i < monomials_.size(); ++i) {
    const auto& m = monomials_[i];
    if (i > 0) out += " + ";
    out += format_coefficient(m.coefficient);
    for (const auto& g : m.word) {
      out += "*" + generator_name(g.index, semicircular_count);
      if (g.starred) out += "^*";
    }
  }
  return out;
}

Word adjoint_word(const Word& w, const std::vector<bool>& selfadjoint) {
  Word out(w.rbegin(), w.rend());
  for (auto& g : out) {
    if (!selfadjoint[static_cast<std::size_t>(g.index)]) g.starred = !g.starred;
  }
  return out;
}

NCPolynomial adjoint(const NCPolynomial& p) {
  std::vector<Monomial> out;
  out.reserve(p.monomials().size());
  for (const auto& m : p.monomials()) {
    out.push_back(Monomial{std::conj(m.coefficient), adjoint_word(m.word, p.selfadjoint_flags())});
  }
  return NCPolynomial(p.selfadjoint_flags(), std::move(out));
}

bool is_selfadjoint(const NCPolynomial& p) { return adjoint(p) == p; }

CMatrix evaluate(const NCPolynomial& p, std::span<const CMatrix> args) {
  if (static_cast<int>(args.size()) != p.arity()) {
    throw SizeError("evaluate: expected " + std::to_string(p.arity()) + " arguments, got " +
                    std::to_string(args.size()));
  }
  Eigen::Index n = -1;
  for (const auto& a : args) {
    if (a.rows() != a.cols() || (n >= 0 && a.rows() != n)) {
      throw SizeError("evaluate: arguments must be square matrices of a common size");
    }
    n = a.rows();
  }
  if (n < 0) n = 1;  // arity 0: constants act on C^1
  std::vector<CMatrix> adjoints(args.size());
  CMatrix out = CMatrix::Zero(n, n);
  for (const auto& m : p.monomials()) {
    if (m.word.empty()) {
      out.diagonal().array() += m.coefficient;
      continue;
    }
    auto letter = [&](const Generator& g) -> const CMatrix& {
      const auto i = static_cast<std::size_t>(g.index);
      if (!g.starred) return args[i];
      if (adjoints[i].size() == 0) adjoints[i] = args[i].adjoint();
      return adjoints[i];
    };
    CMatrix prod = letter(m.word[0]) * m.coefficient;
    for (std::size_t j = 1; j < m.word.size(); ++j) prod = prod * letter(m.word[j]);
    out += prod;
  }
  return out;
}

NCPolynomial split_selfadjoint(const NCPolynomial& p) {
  if (!is_selfadjoint(p)) throw ContractViolation("split_selfadjoint: polynomial is not self-adjoint");
  std::vector<Monomial> half;
  for (const auto& m : p.monomials()) {
    const Word partner = adjoint_word(m.word, p.selfadjoint_flags());
    if (partner == m.word) {
      half.push_back(Monomial{m.coefficient * 0.5, m.word});
    } else if (m.word < partner) {
      half.push_back(m);
    }
  }
  return NCPolynomial(p.selfadjoint_flags(), std::move(half));
}

}  // namespace fsp
