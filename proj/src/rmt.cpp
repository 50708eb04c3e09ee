#include "freespectra/rmt.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "freespectra/error.hpp"
#include "freespectra/matrix_io.hpp"

namespace fsp {

namespace {

double integrate(auto&& f, double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 15, 1e-13);
}

// E[X^k 1{|X| <= b}] for a standardized law with symmetric density f. The
// complement is integrated instead, since long finite ranges defeat the rule.
double symmetric_truncated(auto&& density, int k, double b) {
  if (k % 2 == 1) return 0.0;
  if (!(b > 0.0)) return 0.0;
  auto tail = [&](double x) { return std::pow(x, k) * density(x); };
  const double outside = 2.0 * integrate(tail, b, std::numeric_limits<double>::infinity());
  return 1.0 - outside;
}

// Monte Carlo estimate of E|X_ij|^3 for laws without a closed form, cached
// per law since it costs 2e6 draws.
double monte_carlo_third_moment(const EntryLaw& law) {
  static std::mutex mutex;
  static std::map<std::pair<int, double>, double> cache;
  const auto key = std::make_pair(static_cast<int>(law.kind), law.param);
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  RandomStream rng(0x7468657461ull, 0);
  constexpr int kDraws = 1'000'000;
  double sum = 0.0;
  for (int i = 0; i < kDraws; ++i) {
    const double a = law.draw(rng);
    const double b = law.draw(rng);
    sum += std::pow(0.5 * (a * a + b * b), 1.5);
  }
  const double estimate = 1.1 * sum / kDraws;
  std::lock_guard lock(mutex);
  cache.emplace(key, estimate);
  return estimate;
}

}  // namespace

EntryLaw EntryLaw::student_t(double df) {
  if (!(df > 2.0)) throw ParameterError("student_t law needs df > 2 for unit variance");
  return {Kind::student_t, df};
}

EntryLaw EntryLaw::two_point(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ParameterError("two_point law needs 0 < p < 1");
  return {Kind::two_point, p};
}

EntryLaw EntryLaw::from_string(const std::string& spec) {
  auto param_of = [&](const std::string& prefix) {
    const auto close = spec.find(')');
    if (spec.size() <= prefix.size() + 1 || close != spec.size() - 1) {
      throw ParameterError("malformed entry law '" + spec + "'");
    }
    return std::stod(spec.substr(prefix.size() + 1, close - prefix.size() - 1));
  };
  if (spec == "gaussian" || spec == "gue") return gaussian();
  if (spec == "rademacher") return rademacher();
  if (spec == "uniform") return uniform();
  if (spec.rfind("student_t(", 0) == 0) return student_t(param_of("student_t"));
  if (spec.rfind("two_point(", 0) == 0) return two_point(param_of("two_point"));
  throw ParameterError("unknown entry law '" + spec + "'");
}

std::string EntryLaw::to_string() const {
  switch (kind) {
    case Kind::gaussian: return "gaussian";
    case Kind::rademacher: return "rademacher";
    case Kind::uniform: return "uniform";
    case Kind::student_t: return "student_t(" + format_double(param) + ")";
    case Kind::two_point: return "two_point(" + format_double(param) + ")";
  }
  return "?";
}

double EntryLaw::draw(RandomStream& rng) const {
  switch (kind) {
    case Kind::gaussian:
      return rng.normal();
    case Kind::rademacher:
      return (rng.next_u32() & 1u) ? 1.0 : -1.0;
    case Kind::uniform:
      return (2.0 * rng.uniform() - 1.0) * std::numbers::sqrt3;
    case Kind::student_t: {
      // Bailey's polar method.
      while (true) {
        const double u = 2.0 * rng.uniform() - 1.0;
        const double v = 2.0 * rng.uniform() - 1.0;
        const double w = u * u + v * v;
        if (w >= 1.0 || w == 0.0) continue;
        const double t = u * std::sqrt(param * (std::pow(w, -2.0 / param) - 1.0) / w);
        return t * std::sqrt((param - 2.0) / param);
      }
    }
    case Kind::two_point: {
      const double hi = std::sqrt((1.0 - param) / param);
      const double lo = -std::sqrt(param / (1.0 - param));
      return rng.uniform() < param ? hi : lo;
    }
  }
  return 0.0;
}

double EntryLaw::truncated_moment(int k, double scale, double c) const {
  const double b = c / scale;  // truncation level for the standardized variable
  const double sk = std::pow(scale, k);
  switch (kind) {
    case Kind::gaussian: {
      auto f = [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); };
      return sk * symmetric_truncated(f, k, b);
    }
    case Kind::rademacher:
      return b >= 1.0 ? sk * (k % 2 == 0 ? 1.0 : 0.0) : 0.0;
    case Kind::uniform: {
      const double e = std::min(b, std::numbers::sqrt3);
      auto f = [k](double x) { return std::pow(x, k) / (2.0 * std::numbers::sqrt3); };
      return sk * integrate(f, -e, e);
    }
    case Kind::student_t: {
      const double kappa = std::sqrt((param - 2.0) / param);
      boost::math::students_t_distribution<double> dist(param);
      auto f = [&](double x) { return boost::math::pdf(dist, x / kappa) / kappa; };
      return sk * symmetric_truncated(f, k, b);
    }
    case Kind::two_point: {
      const double hi = std::sqrt((1.0 - param) / param);
      const double lo = -std::sqrt(param / (1.0 - param));
      double out = 0.0;
      if (std::abs(hi) <= b) out += param * std::pow(hi, k);
      if (std::abs(lo) <= b) out += (1.0 - param) * std::pow(lo, k);
      return sk * out;
    }
  }
  return 0.0;
}

double EntryLaw::third_abs_moment_bound() const {
  switch (kind) {
    case Kind::gaussian:
      // |X|^2 ~ Exp(1), so E|X|^3 = Gamma(5/2).
      return 0.75 * std::sqrt(std::numbers::pi);
    case Kind::rademacher:
      return 1.0;
    case Kind::two_point: {
      const double vals[2] = {std::sqrt((1.0 - param) / param), -std::sqrt(param / (1.0 - param))};
      const double probs[2] = {param, 1.0 - param};
      double out = 0.0;
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
          out += probs[a] * probs[b] * std::pow(0.5 * (vals[a] * vals[a] + vals[b] * vals[b]), 1.5);
        }
      }
      return out;
    }
    case Kind::uniform:
    case Kind::student_t:
      return monte_carlo_third_moment(*this);
  }
  return 0.0;
}

bool EntryLaw::has_finite_fourth_moment() const { return kind != Kind::student_t || param > 4.0; }

nlohmann::json WignerSample::metadata() const {
  nlohmann::json j{{"n", n}, {"seed", seed}, {"stream", stream}, {"law", law.to_string()}};
  if (preprocessing) {
    j["preprocessing"] = {{"C", preprocessing->c},
                          {"delta", preprocessing->delta},
                          {"gauss_seed", preprocessing->gauss_seed},
                          {"gauss_stream", preprocessing->gauss_stream}};
  }
  return j;
}

WignerSample sample_wigner(int n, const EntryLaw& law, std::uint64_t seed, std::uint64_t stream) {
  if (n < 1) throw ParameterError("sample_wigner: n must be positive");
  RandomStream rng(seed, stream);
  CMatrix x(n, n);
  const double half = std::sqrt(0.5);
  for (int i = 0; i < n; ++i) {
    x(i, i) = law.draw(rng);
    for (int j = i + 1; j < n; ++j) {
      const double re = law.draw(rng) * half;
      const double im = law.draw(rng) * half;
      x(i, j) = cplx(re, im);
      x(j, i) = cplx(re, -im);
    }
  }
  x /= std::sqrt(static_cast<double>(n));
  return WignerSample{n, std::move(x), seed, stream, law, std::nullopt};
}

WignerSample truncate_convolve(const WignerSample& sample, double c, double delta,
                               std::uint64_t gauss_seed, std::uint64_t gauss_stream) {
  const double theta = sample.law.third_abs_moment_bound();
  if (!(c > 8.0 * theta)) {
    throw ParameterError("truncate_convolve: C = " + std::to_string(c) + " must exceed 8*theta* = " +
                         std::to_string(8.0 * theta));
  }
  if (!(delta >= 0.0)) throw ParameterError("truncate_convolve: delta must be nonnegative");
  const int n = sample.n;
  const double root_n = std::sqrt(static_cast<double>(n));
  const double half = std::sqrt(0.5);

  // Off-diagonal parts have standard deviation 1/sqrt(2); the diagonal has 1.
  const double off_mean = sample.law.truncated_moment(1, half, c);
  const double off_var = sample.law.truncated_moment(2, half, c) - off_mean * off_mean;
  const double diag_mean = sample.law.truncated_moment(1, 1.0, c);
  const double diag_var = sample.law.truncated_moment(2, 1.0, c) - diag_mean * diag_mean;
  const double off_norm = 1.0 / std::sqrt(2.0 * off_var);
  const double diag_norm = 1.0 / std::sqrt(diag_var);
  auto trunc = [c](double v, double mean) { return (std::abs(v) <= c ? v : 0.0) - mean; };

  CMatrix out(n, n);
  for (int i = 0; i < n; ++i) {
    out(i, i) = trunc(sample.matrix(i, i).real() * root_n, diag_mean) * diag_norm;
    for (int j = i + 1; j < n; ++j) {
      const cplx v = sample.matrix(i, j) * root_n;
      const cplx w(trunc(v.real(), off_mean) * off_norm, trunc(v.imag(), off_mean) * off_norm);
      out(i, j) = w;
      out(j, i) = std::conj(w);
    }
  }
  if (delta > 0.0) {
    const CMatrix gue = sample_wigner(n, EntryLaw::gaussian(), gauss_seed, gauss_stream).matrix * root_n;
    out = (out + delta * gue) / std::sqrt(1.0 + delta * delta);
  }
  out /= root_n;
  WignerSample result = sample;
  result.matrix = std::move(out);
  result.preprocessing = Preprocessing{c, delta, gauss_seed, gauss_stream};
  return result;
}

DetSpec DetSpec::diag(std::vector<double> pattern) {
  if (pattern.empty()) throw ParameterError("diag_spec needs at least one value");
  DetSpec s;
  s.kind = Kind::diag_spec;
  s.values = std::move(pattern);
  return s;
}

DetSpec DetSpec::projection(double rank_fraction) {
  if (!(rank_fraction >= 0.0 && rank_fraction <= 1.0)) throw ParameterError("projection fraction must lie in [0,1]");
  DetSpec s;
  s.kind = Kind::projection;
  s.fraction = rank_fraction;
  return s;
}

DetSpec DetSpec::toeplitz(std::vector<double> symbol_coeffs) {
  if (symbol_coeffs.empty()) throw ParameterError("toeplitz needs at least one symbol coefficient");
  DetSpec s;
  s.kind = Kind::toeplitz;
  s.values = std::move(symbol_coeffs);
  return s;
}

DetSpec DetSpec::file(std::filesystem::path p) {
  DetSpec s;
  s.kind = Kind::from_file;
  s.path = std::move(p);
  return s;
}

nlohmann::json DetSpec::to_json() const {
  switch (kind) {
    case Kind::diag_spec: return {{"kind", "diag_spec"}, {"values", values}};
    case Kind::projection: return {{"kind", "projection"}, {"fraction", fraction}};
    case Kind::toeplitz: return {{"kind", "toeplitz"}, {"values", values}};
    case Kind::from_file: return {{"kind", "from_file"}, {"path", path.string()}};
  }
  return {};
}

CMatrix make_deterministic(const DetSpec& spec, int n) {
  if (n < 1) throw ParameterError("make_deterministic: n must be positive");
  switch (spec.kind) {
    case DetSpec::Kind::diag_spec: {
      CMatrix a = CMatrix::Zero(n, n);
      for (int i = 0; i < n; ++i) a(i, i) = spec.values[static_cast<std::size_t>(i) % spec.values.size()];
      return a;
    }
    case DetSpec::Kind::projection: {
      CMatrix a = CMatrix::Zero(n, n);
      const auto rank = static_cast<int>(std::llround(spec.fraction * n));
      for (int i = 0; i < rank; ++i) a(i, i) = 1.0;
      return a;
    }
    case DetSpec::Kind::toeplitz: {
      CMatrix a = CMatrix::Zero(n, n);
      for (int i = 0; i < n; ++i) {
        for (std::size_t d = 0; d < spec.values.size() && i + static_cast<int>(d) < n; ++d) {
          a(i, i + static_cast<int>(d)) = spec.values[d];
          a(i + static_cast<int>(d), i) = spec.values[d];
        }
      }
      return a;
    }
    case DetSpec::Kind::from_file: {
      CMatrix a = read_matrix_csv(spec.path);
      if (a.rows() != n) {
        throw SizeError("deterministic matrix " + spec.path.string() + " is " + std::to_string(a.rows()) +
                        "x" + std::to_string(a.rows()) + ", expected n = " + std::to_string(n));
      }
      if (!is_hermitian(a)) throw StructureError("deterministic matrix " + spec.path.string() + " is not Hermitian");
      return a;
    }
  }
  return {};
}

std::vector<double> empirical_spectrum(const NCPolynomial& p, std::span<const CMatrix> args) {
  if (!is_selfadjoint(p)) throw ContractViolation("empirical_spectrum: polynomial is not self-adjoint");
  const CMatrix value = evaluate(p, args);
  return hermitian_eigenvalues(value);
}

std::vector<double> empirical_spectrum(const NCPolynomial& p, std::span<const WignerSample> wigners,
                                       std::span<const CMatrix> dets) {
  std::vector<CMatrix> args;
  args.reserve(wigners.size() + dets.size());
  for (const auto& w : wigners) args.push_back(w.matrix);
  for (const auto& d : dets) args.push_back(d);
  return empirical_spectrum(p, args);
}

}  // namespace fsp
