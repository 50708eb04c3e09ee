#include "freespectra/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include "freespectra/error.hpp"
#include "freespectra/linearize.hpp"
#include "freespectra/parallel.hpp"

namespace fsp {

namespace {

constexpr std::size_t kChunk = 256;
constexpr double kClipFloor = -1e-9;

// Evaluates the smoothed density at one real point. The evaluation matrix is
// x * direction + i eps I; `corner` selects the (1,1) entry instead of tr_m.
struct Probe {
  const ModelSpec& model;
  CMatrix direction;
  bool corner = false;
  double eps = 0.0;
  SolverOptions opts;

  double operator()(double x, CMatrix* warm) const {
    CMatrix lambda = x * direction;
    lambda.diagonal().array() += cplx(0.0, eps);
    const auto state = solve_subordination(model, HalfPlanePoint(lambda), opts, warm);
    if (warm != nullptr) *warm = state.omega;
    const cplx g = corner ? state.gtilde(0, 0) : state.gtilde.trace() / static_cast<double>(model.m());
    const double v = -g.imag() / std::numbers::pi;
    if (v < kClipFloor) {
      throw SolverQualityError("negative density " + std::to_string(v) + " at x = " + std::to_string(x));
    }
    return std::max(v, 0.0);
  }
};

bool recoverable(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const DivergenceError&) {
    return true;
  } catch (const IllConditionedError&) {
    return true;
  } catch (...) {
    return false;
  }
}

struct Sweep {
  DensityGrid density;
  std::vector<CMatrix> omegas;  // empty where the solver failed
};

Sweep sweep(const Probe& probe, std::span<const double> grid, const SweepOptions& opts) {
  if (!(probe.eps > 0.0)) throw ParameterError("density: eps must be positive");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw ParameterError("density: grid must be strictly ascending");
  }
  Sweep out;
  const auto count = grid.size();
  out.density.points.assign(grid.begin(), grid.end());
  out.density.eps = probe.eps;
  out.density.values.assign(count, 0.0);
  out.omegas.assign(count, CMatrix());
  std::vector<char> ok(count, 0);

  const std::size_t chunks = (count + kChunk - 1) / kChunk;
  parallel_for(chunks, opts.threads, [&](std::size_t c) {
    CMatrix warm;
    for (std::size_t i = c * kChunk; i < std::min(count, (c + 1) * kChunk); ++i) {
      try {
        // An empty warm matrix is ignored by the solver and filled on return.
        out.density.values[i] = probe(grid[i], &warm);
        out.omegas[i] = warm;
        ok[i] = 1;
      } catch (...) {
        if (!recoverable(std::current_exception())) throw;
        warm.resize(0, 0);
      }
    }
  });

  out.density.converged.assign(ok.begin(), ok.end());
  double mass = 0.0;
  for (std::size_t i = 1; i < count; ++i) {
    mass += 0.5 * (grid[i] - grid[i - 1]) * (out.density.values[i] + out.density.values[i - 1]);
  }
  out.density.mass = mass;
  return out;
}

struct AtomFit {
  double center;
  double weight;
};

double lorentz(const AtomFit& a, double x, double eps) {
  const double d = x - a.center;
  return a.weight * eps / (std::numbers::pi * (d * d + eps * eps));
}

// Golden-section search for the peak of the probe on [lo, hi].
std::pair<double, double> refine_peak(const Probe& probe, double lo, double hi, CMatrix warm) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  CMatrix* w = &warm;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = probe(c, w);
  double fd = probe(d, w);
  for (int it = 0; it < 50 && (b - a) > 1e-12 * (1.0 + std::abs(a)); ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = probe(c, w);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = probe(d, w);
    }
  }
  return fc > fd ? std::make_pair(c, fc) : std::make_pair(d, fd);
}

std::vector<std::pair<double, double>> merge_intervals(std::vector<std::pair<double, double>> v) {
  std::sort(v.begin(), v.end());
  std::vector<std::pair<double, double>> out;
  for (const auto& iv : v) {
    if (!out.empty() && iv.first <= out.back().second) {
      out.back().second = std::max(out.back().second, iv.second);
    } else {
      out.push_back(iv);
    }
  }
  return out;
}

// Threshold detection on a default grid (step eps/2). Point masses show up
// as Lorentzian peaks of width eps; they are fitted, reported separately and
// their tails removed before thresholding the rest.
SupportSet detect_support(const Probe& probe, std::span<const double> grid, double threshold,
                          const SweepOptions& opts) {
  if (!(threshold > 0.0)) throw ParameterError("support: threshold must be positive");
  const Sweep s = sweep(probe, grid, opts);
  const auto& vals = s.density.values;
  const auto count = static_cast<long>(grid.size());
  const double eps = probe.eps;
  SupportSet out;
  out.threshold = threshold;
  out.eps = eps;
  if (count < 3) return out;
  const double step = grid[1] - grid[0];
  const long off = std::max(2L, std::lround(2.0 * eps / step));

  std::vector<AtomFit> atoms;
  for (long i = off; i + off < count; ++i) {
    const double p = vals[static_cast<std::size_t>(i)];
    if (p <= threshold || p < vals[static_cast<std::size_t>(i - 1)] || p <= vals[static_cast<std::size_t>(i + 1)]) {
      continue;
    }
    if (vals[static_cast<std::size_t>(i - off)] > 0.35 * p || vals[static_cast<std::size_t>(i + off)] > 0.35 * p) {
      continue;
    }
    double window = 0.0;
    for (long j = i - off + 1; j <= i + off; ++j) {
      window += 0.5 * (grid[static_cast<std::size_t>(j)] - grid[static_cast<std::size_t>(j - 1)]) *
                (vals[static_cast<std::size_t>(j)] + vals[static_cast<std::size_t>(j - 1)]);
    }
    const double w_hat = std::numbers::pi * eps * p;
    if (w_hat < 1e-4 || window <= 0.5 * w_hat) continue;
    const auto [x0, peak] = refine_peak(probe, grid[static_cast<std::size_t>(i - 1)],
                                        grid[static_cast<std::size_t>(i + 1)], s.omegas[static_cast<std::size_t>(i)]);
    atoms.push_back({x0, std::numbers::pi * eps * peak});
  }

  auto residual_at = [&](double x, double v) {
    for (const auto& a : atoms) v -= lorentz(a, x, eps);
    return v;
  };
  std::vector<char> inside(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    inside[i] = s.density.converged[i] && residual_at(grid[i], vals[i]) > threshold;
  }

  // Bisection between an outside and an inside grid point, to step/100.
  auto refine = [&](std::size_t out_idx, std::size_t in_idx) {
    double xo = grid[out_idx];
    double xi = grid[in_idx];
    CMatrix warm = s.omegas[in_idx];
    try {
      while (std::abs(xi - xo) > step / 100.0) {
        const double mid = 0.5 * (xo + xi);
        const double v = residual_at(mid, probe(mid, &warm));
        (v > threshold ? xi : xo) = mid;
      }
    } catch (...) {
      if (!recoverable(std::current_exception())) throw;
    }
    return xi;
  };

  std::vector<std::pair<double, double>> intervals;
  for (std::size_t i = 0; i < grid.size();) {
    if (!inside[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < grid.size() && inside[j + 1]) ++j;
    const double left = i == 0 ? grid[0] : refine(i - 1, i);
    const double right = j + 1 == grid.size() ? grid[j] : refine(j + 1, j);
    intervals.emplace_back(left, right);
    i = j + 1;
  }
  for (const auto& a : atoms) {
    intervals.emplace_back(a.center - eps, a.center + eps);
    out.atoms.push_back(a.center);
  }
  std::sort(out.atoms.begin(), out.atoms.end());
  out.intervals = merge_intervals(std::move(intervals));
  return out;
}

Probe model_probe(const ModelSpec& model, double eps, const SolverOptions& opts) {
  return Probe{model, CMatrix::Identity(model.m(), model.m()), false, eps, opts};
}

Probe corner_probe(const ModelSpec& model, double eps, const SolverOptions& opts) {
  CMatrix e11 = CMatrix::Zero(model.m(), model.m());
  e11(0, 0) = 1.0;
  return Probe{model, std::move(e11), true, eps, opts};
}

ModelSpec polynomial_model(const NCPolynomial& p, int r, const std::vector<CMatrix>& dets) {
  if (!is_selfadjoint(p)) throw ContractViolation("polynomial is not self-adjoint");
  if (r < 0 || p.arity() != r + static_cast<int>(dets.size())) {
    throw SizeError("polynomial has " + std::to_string(p.arity()) + " generators but r + t = " +
                    std::to_string(r + static_cast<int>(dets.size())));
  }
  return ModelSpec::from_linearization(linearize(p), r, dets);
}

}  // namespace

bool DensityGrid::all_converged() const {
  return std::all_of(converged.begin(), converged.end(), [](bool b) { return b; });
}

bool SupportSet::contains(double x, double slack) const {
  return std::any_of(intervals.begin(), intervals.end(),
                     [&](const auto& iv) { return x >= iv.first - slack && x <= iv.second + slack; });
}

nlohmann::json SupportSet::to_json() const {
  auto ivs = nlohmann::json::array();
  for (const auto& [l, r] : intervals) ivs.push_back({l, r});
  return {{"intervals", ivs}, {"atoms", atoms}, {"threshold", threshold}, {"eps", eps}};
}

SupportSet SupportSet::from_json(const nlohmann::json& j) {
  SupportSet s;
  for (const auto& iv : j.at("intervals")) s.intervals.emplace_back(iv.at(0).get<double>(), iv.at(1).get<double>());
  s.atoms = j.value("atoms", std::vector<double>{});
  s.threshold = j.value("threshold", 0.0);
  s.eps = j.value("eps", 0.0);
  return s;
}

std::vector<double> default_grid(double radius, double eps) {
  if (!(eps > 0.0)) throw ParameterError("default_grid: eps must be positive");
  if (!(radius >= 0.0) || !std::isfinite(radius)) throw ParameterError("default_grid: radius must be finite");
  const double lo = -radius - 1.0;
  const double step = 0.5 * eps;
  const auto count = static_cast<std::size_t>(std::floor((2.0 * radius + 2.0) / step + 1e-9)) + 1;
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i) grid[i] = lo + static_cast<double>(i) * step;
  return grid;
}

DensityGrid density_of_model(const ModelSpec& model, std::span<const double> grid, double eps,
                             const SweepOptions& opts) {
  return sweep(model_probe(model, eps, opts.solver), grid, opts).density;
}

SupportSet support_of_model(const ModelSpec& model, double eps, double threshold, const SweepOptions& opts) {
  const auto grid = default_grid(model.norm_radius(), eps);
  return detect_support(model_probe(model, eps, opts.solver), grid, threshold, opts);
}

double polynomial_norm_bound(const NCPolynomial& p, int r, std::span<const CMatrix> dets) {
  std::vector<double> norms;
  for (int v = 0; v < r; ++v) norms.push_back(2.0);
  for (const auto& a : dets) norms.push_back(operator_norm(a));
  double bound = 0.0;
  for (const auto& mono : p.monomials()) {
    double term = std::abs(mono.coefficient);
    for (const auto& g : mono.word) term *= norms.at(static_cast<std::size_t>(g.index));
    bound += term;
  }
  return bound;
}

DensityGrid polynomial_distribution(const NCPolynomial& p, int r, const std::vector<CMatrix>& dets,
                                    std::span<const double> grid, double eps, const SweepOptions& opts) {
  const ModelSpec model = polynomial_model(p, r, dets);
  return sweep(corner_probe(model, eps, opts.solver), grid, opts).density;
}

SupportSet polynomial_support(const NCPolynomial& p, int r, const std::vector<CMatrix>& dets, double eps,
                              double threshold, const SweepOptions& opts) {
  const ModelSpec model = polynomial_model(p, r, dets);
  const auto grid = default_grid(polynomial_norm_bound(p, r, dets), eps);
  return detect_support(corner_probe(model, eps, opts.solver), grid, threshold, opts);
}

double support_norm(const SupportSet& s) {
  double out = 0.0;
  for (const auto& [l, r] : s.intervals) {
    const auto atom = std::find_if(s.atoms.begin(), s.atoms.end(), [&](double a) { return a >= l && a <= r; });
    const bool atom_only = atom != s.atoms.end() && (r - l) <= 2.0 * s.eps * (1.0 + 1e-9);
    out = std::max(out, atom_only ? std::abs(*atom) : std::max(std::abs(l), std::abs(r)));
  }
  return out;
}

double norm_of_polynomial(const NCPolynomial& p, int r, const std::vector<CMatrix>& dets, double eps,
                          double threshold, const SweepOptions& opts) {
  return support_norm(polynomial_support(p, r, dets, eps, threshold, opts));
}

SupportSet fatten_support(const SupportSet& s, double eps) {
  if (!(eps >= 0.0)) throw ParameterError("fatten_support: eps must be nonnegative");
  SupportSet out = s;
  for (auto& iv : out.intervals) {
    iv.first -= eps;
    iv.second += eps;
  }
  out.intervals = merge_intervals(std::move(out.intervals));
  return out;
}

void write_density_csv(std::ostream& out, const DensityGrid& d) {
  out << "x,density,converged\n";
  char line[96];
  for (std::size_t i = 0; i < d.points.size(); ++i) {
    std::snprintf(line, sizeof line, "%.17g,%.17g,%d\n", d.points[i], d.values[i], d.converged[i] ? 1 : 0);
    out << line;
  }
}

nlohmann::json density_to_json(const DensityGrid& d) {
  std::vector<int> conv(d.converged.begin(), d.converged.end());
  return {{"eps", d.eps}, {"mass", d.mass}, {"points", d.points}, {"values", d.values}, {"converged", conv}};
}

}  // namespace fsp
