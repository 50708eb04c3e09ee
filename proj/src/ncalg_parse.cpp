#include <cctype>
#include <charconv>
#include <string>

#include "freespectra/error.hpp"
#include "freespectra/ncalg.hpp"

namespace fsp {

namespace {

// Recursive-descent parser:
//   expr    := [+|-] term {(+|-) term}
//   term    := factor {* factor}
//   factor  := primary {^* | ^N}
//   primary := number[i] | i | x<k> | a<k> | ( expr )
class PolynomialParser {
 public:
  PolynomialParser(std::string_view text, int r, int t, std::vector<bool> selfadjoint)
      : text_(text), r_(r), t_(t), selfadjoint_(std::move(selfadjoint)) {}

  NCPolynomial parse() {
    skip_space();
    if (at_end()) fail("empty polynomial");
    NCPolynomial p = expr();
    skip_space();
    if (!at_end()) fail(std::string("unexpected character '") + text_[pos_] + "'");
    return p;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(what, 0, static_cast<int>(pos_) + 1);
  }
  [[noreturn]] void fail_at(const std::string& what, std::size_t pos) const {
    throw ParseError(what, 0, static_cast<int>(pos) + 1);
  }

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }
  void skip_space() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  NCPolynomial constant(cplx c) const { return NCPolynomial(selfadjoint_, {Monomial{c, {}}}); }

  NCPolynomial expr() {
    skip_space();
    double sign = 1.0;
    if (peek() == '+' || peek() == '-') {
      sign = peek() == '-' ? -1.0 : 1.0;
      ++pos_;
    }
    NCPolynomial acc = term() * sign;
    while (true) {
      skip_space();
      if (peek() != '+' && peek() != '-') break;
      const double s = peek() == '-' ? -1.0 : 1.0;
      ++pos_;
      acc = acc + term() * s;
    }
    return acc;
  }

  NCPolynomial term() {
    NCPolynomial acc = factor();
    while (true) {
      skip_space();
      if (peek() != '*') break;
      ++pos_;
      acc = acc * factor();
    }
    return acc;
  }

  NCPolynomial factor() {
    NCPolynomial base = primary();
    while (true) {
      skip_space();
      if (peek() != '^') break;
      const std::size_t caret = pos_;
      ++pos_;
      skip_space();
      if (peek() == '*') {
        ++pos_;
        base = adjoint(base);
        continue;
      }
      const std::size_t start = pos_;
      while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
      if (start == pos_) fail_at("expected '*' or a nonnegative integer after '^'", caret);
      int power = 0;
      std::from_chars(text_.data() + start, text_.data() + pos_, power);
      NCPolynomial result = constant(1.0);
      for (int i = 0; i < power; ++i) result = result * base;
      base = std::move(result);
    }
    return base;
  }

  NCPolynomial primary() {
    skip_space();
    const char c = peek();
    if (c == '(') {
      const std::size_t open = pos_;
      ++pos_;
      NCPolynomial inner = expr();
      skip_space();
      if (peek() != ')') fail_at("unbalanced parenthesis", open);
      ++pos_;
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (c == 'i' && !std::isalnum(static_cast<unsigned char>(
                        pos_ + 1 < text_.size() ? text_[pos_ + 1] : '\0'))) {
      ++pos_;
      return constant(cplx(0.0, 1.0));
    }
    if (std::isalpha(static_cast<unsigned char>(c))) return generator();
    if (at_end()) fail("unexpected end of polynomial");
    fail(std::string("unexpected character '") + c + "'");
  }

  NCPolynomial number() {
    const std::size_t start = pos_;
    while (!at_end()) {
      const char c = peek();
      const bool exp_sign = (c == '+' || c == '-') && pos_ > start &&
                            (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E');
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == 'e' || c == 'E' || exp_sign) {
        ++pos_;
      } else {
        break;
      }
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (ec != std::errc() || ptr != text_.data() + pos_) fail_at("malformed number", start);
    if (peek() == 'i') {
      ++pos_;
      return constant(cplx(0.0, v));
    }
    return constant(v);
  }

  NCPolynomial generator() {
    const std::size_t start = pos_;
    while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_') ++pos_;
    const std::string_view name = text_.substr(start, pos_ - start);
    const char kind = name[0];
    const auto digits = name.substr(1);
    int idx = 0;
    const bool numeric = !digits.empty() &&
                         std::from_chars(digits.data(), digits.data() + digits.size(), idx).ptr ==
                             digits.data() + digits.size();
    if ((kind != 'x' && kind != 'a') || !numeric) {
      fail_at("unknown name '" + std::string(name) + "'", start);
    }
    const int limit = kind == 'x' ? r_ : t_;
    if (idx < 1 || idx > limit) {
      fail_at("undeclared generator '" + std::string(name) + "' (declared " + std::string(1, kind) +
                  "1.." + std::string(1, kind) + std::to_string(limit) + ")",
              start);
    }
    const int index = kind == 'x' ? idx - 1 : r_ + idx - 1;
    return NCPolynomial(selfadjoint_, {Monomial{1.0, {Generator{index, false}}}});
  }

  std::string_view text_;
  int r_;
  int t_;
  std::vector<bool> selfadjoint_;
  std::size_t pos_ = 0;
};

}  // namespace

NCPolynomial parse_polynomial(std::string_view text, int r, int t,
                              std::span<const int> nonselfadjoint_dets) {
  if (r < 0 || t < 0) throw ParameterError("generator counts must be nonnegative");
  std::vector<bool> selfadjoint(static_cast<std::size_t>(r + t), true);
  for (int u : nonselfadjoint_dets) {
    if (u < 1 || u > t) throw ParameterError("non-self-adjoint generator a" + std::to_string(u) + " not declared");
    selfadjoint[static_cast<std::size_t>(r + u - 1)] = false;
  }
  return PolynomialParser(text, r, t, std::move(selfadjoint)).parse();
}

}  // namespace fsp
