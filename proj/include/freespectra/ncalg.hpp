#pragma once

#include <compare>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "freespectra/matops.hpp"

namespace fsp {

// Indeterminate X_index or its adjoint. Indices are 0-based.
struct Generator {
  int index = 0;
  bool starred = false;

  friend auto operator<=>(const Generator&, const Generator&) = default;
};

using Word = std::vector<Generator>;

struct Monomial {
  cplx coefficient{1.0, 0.0};
  Word word;  // empty word is the constant term

  int degree() const noexcept { return static_cast<int>(word.size()); }
};

// Coefficients whose magnitude falls below this after merging are dropped.
inline constexpr double kCoefficientFloor = 1e-14;

// Noncommutative *-polynomial in k indeterminates. Always held in canonical
// form: monomials sorted by (degree, word), one monomial per word, no
// negligible coefficients, and starred = false on self-adjoint generators.
class NCPolynomial {
 public:
  NCPolynomial() = default;
  // All generators self-adjoint.
  NCPolynomial(int arity, std::vector<Monomial> monomials);
  NCPolynomial(std::vector<bool> selfadjoint_flags, std::vector<Monomial> monomials);

  static NCPolynomial constant(int arity, cplx c);
  static NCPolynomial generator(int arity, int index, cplx c = 1.0);

  int arity() const noexcept { return static_cast<int>(selfadjoint_.size()); }
  const std::vector<bool>& selfadjoint_flags() const noexcept { return selfadjoint_; }
  bool generator_selfadjoint(int index) const { return selfadjoint_.at(static_cast<std::size_t>(index)); }
  const std::vector<Monomial>& monomials() const noexcept { return monomials_; }
  int degree() const noexcept;
  bool is_zero() const noexcept { return monomials_.empty(); }

  NCPolynomial operator+(const NCPolynomial& other) const;
  NCPolynomial operator*(cplx s) const;
  NCPolynomial operator*(const NCPolynomial& other) const;

  // Exact equality of canonical forms.
  friend bool operator==(const NCPolynomial&, const NCPolynomial&);

  std::string to_string(int semicircular_count = -1) const;

 private:
  void canonicalize();

  std::vector<bool> selfadjoint_;
  std::vector<Monomial> monomials_;
};

// Reverses a word and stars each letter; starring is the identity on
// self-adjoint generators.
Word adjoint_word(const Word& w, const std::vector<bool>& selfadjoint);

NCPolynomial adjoint(const NCPolynomial& p);
bool is_selfadjoint(const NCPolynomial& p);

// Sum of coefficient times the ordered matrix product of each monomial; a
// starred letter uses the conjugate transpose of its argument.
CMatrix evaluate(const NCPolynomial& p, std::span<const CMatrix> args);

// P0 with P0 + P0* = p: for each adjoint pair {w, w*} with w < w* the
// w-monomial goes wholly to P0, self-paired monomials contribute half.
NCPolynomial split_selfadjoint(const NCPolynomial& p);

// Parses text such as "2.0*x1*a1*a1^* - 0.5i*x2^2 + 3". Generators x1..xr are
// semicircular (indices 0..r-1) and a1..at deterministic (indices r..r+t-1);
// every generator is self-adjoint unless listed in nonselfadjoint_dets
// (1-based a-indices). Errors carry the 1-based character position.
NCPolynomial parse_polynomial(std::string_view text, int r, int t,
                              std::span<const int> nonselfadjoint_dets = {});

// Name of generator index under the x/a convention.
std::string generator_name(int index, int r);

}  // namespace fsp
