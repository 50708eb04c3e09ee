#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "freespectra/matops.hpp"
#include "freespectra/ncalg.hpp"
#include "freespectra/random.hpp"

namespace fsp {

// Standardized (mean 0, variance 1) real law. Off-diagonal Wigner entries
// use two independent draws scaled by 1/sqrt(2) for the real and imaginary
// parts; diagonal entries use one unscaled draw.
struct EntryLaw {
  enum class Kind { gaussian, rademacher, uniform, student_t, two_point };
  Kind kind = Kind::gaussian;
  double param = 0.0;  // degrees of freedom (student_t) or P(upper atom) (two_point)

  static EntryLaw gaussian() { return {Kind::gaussian, 0.0}; }
  static EntryLaw rademacher() { return {Kind::rademacher, 0.0}; }
  static EntryLaw uniform() { return {Kind::uniform, 0.0}; }
  static EntryLaw student_t(double df);
  static EntryLaw two_point(double p);
  static EntryLaw from_string(const std::string& spec);

  std::string to_string() const;
  double draw(RandomStream& rng) const;

  // E[(s X)^k 1{|s X| <= c}] for X with this law (k = 0, 1, 2).
  double truncated_moment(int k, double scale, double c) const;
  // sup_{i<j} E|X_ij|^3 for the complex off-diagonal entry.
  double third_abs_moment_bound() const;
  bool has_finite_fourth_moment() const;

  friend bool operator==(const EntryLaw&, const EntryLaw&) = default;
};

struct Preprocessing {
  double c = 0.0;
  double delta = 0.0;
  std::uint64_t gauss_seed = 0;
  std::uint64_t gauss_stream = 0;
};

struct WignerSample {
  int n = 0;
  CMatrix matrix;  // Hermitian, already divided by sqrt(n)
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  EntryLaw law;
  std::optional<Preprocessing> preprocessing;

  nlohmann::json metadata() const;
};

WignerSample sample_wigner(int n, const EntryLaw& law, std::uint64_t seed, std::uint64_t stream = 0);

// Truncation at C, re-centering and re-normalization of each real/imaginary
// part, then mixing with an independent GUE: (X^C + delta G)/sqrt(1+delta^2).
// Requires C > 8 theta* with theta* = law.third_abs_moment_bound().
WignerSample truncate_convolve(const WignerSample& sample, double c, double delta,
                               std::uint64_t gauss_seed, std::uint64_t gauss_stream = 0);

// Deterministic Hermitian families.
struct DetSpec {
  enum class Kind { diag_spec, projection, toeplitz, from_file };
  Kind kind = Kind::diag_spec;
  std::vector<double> values;  // diag pattern, or Toeplitz symbol coefficients c_0, c_1, ...
  double fraction = 0.0;       // projection rank fraction
  std::filesystem::path path;  // from_file

  static DetSpec diag(std::vector<double> pattern);
  static DetSpec projection(double rank_fraction);
  static DetSpec toeplitz(std::vector<double> symbol_coeffs);
  static DetSpec file(std::filesystem::path p);

  nlohmann::json to_json() const;

  friend bool operator==(const DetSpec&, const DetSpec&) = default;
};

CMatrix make_deterministic(const DetSpec& spec, int n);

// Eigenvalues of P evaluated at (wigner matrices..., dets...).
std::vector<double> empirical_spectrum(const NCPolynomial& p, std::span<const WignerSample> wigners,
                                       std::span<const CMatrix> dets);
// Same with the Wigner matrices passed directly.
std::vector<double> empirical_spectrum(const NCPolynomial& p, std::span<const CMatrix> args);

}  // namespace fsp
