#include "freespectra/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>

#include "freespectra/error.hpp"
#include "freespectra/parallel.hpp"

namespace fsp {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

nlohmann::json solver_json(const SolverOptions& s) {
  return {{"tol", s.tol},
          {"max_iter", s.max_iter},
          {"damping_min", s.damping_min},
          {"continuation_start", s.continuation_start},
          {"use_newton", s.use_newton}};
}

nlohmann::json options_json(const HarnessOptions& o) {
  return {{"solver", solver_json(o.sweep.solver)},
          {"inversion_eps", o.inversion_eps},
          {"threshold", o.threshold},
          {"endpoint_slack", o.endpoint_slack}};
}

nlohmann::json dets_json(const std::vector<DetSpec>& dets) {
  auto arr = nlohmann::json::array();
  for (const auto& d : dets) arr.push_back(d.to_json());
  return arr;
}

std::vector<CMatrix> build_dets(const std::vector<DetSpec>& specs, int n) {
  std::vector<CMatrix> out;
  for (const auto& s : specs) out.push_back(make_deterministic(s, n));
  return out;
}

int resolve_model_n(int model_n, const std::vector<int>& ns) {
  if (model_n > 0) return model_n;
  if (ns.empty()) throw ParameterError("experiment needs at least one matrix size");
  return *std::max_element(ns.begin(), ns.end());
}

std::vector<CMatrix> simulation_args(const std::vector<WignerSample>& wigners, const std::vector<CMatrix>& dets) {
  std::vector<CMatrix> args;
  for (const auto& w : wigners) args.push_back(w.matrix);
  for (const auto& d : dets) args.push_back(d);
  return args;
}

// Runs one trial body, turning any library error into a failed record.
template <class Body>
void guarded(TrialRecord& rec, Body&& body) {
  try {
    body();
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.error = e.what();
  }
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const auto h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

int failed_count(const std::vector<TrialRecord>& recs) {
  return static_cast<int>(std::count_if(recs.begin(), recs.end(), [](const auto& r) { return !r.ok; }));
}

void check_trials(int trials) {
  if (trials < 1) throw ParameterError("experiment needs at least one trial");
}

}  // namespace

std::vector<WignerSample> Ensemble::sample(int n, int count, std::uint64_t trial) const {
  std::vector<WignerSample> out;
  for (int v = 0; v < count; ++v) {
    const auto g = static_cast<std::uint64_t>(v);
    WignerSample s = sample_wigner(n, law, seed, wigner_stream(trial, g));
    if (truncation) s = truncate_convolve(s, *truncation, convolution, seed, convolution_stream(trial, g));
    out.push_back(std::move(s));
  }
  return out;
}

std::string Ensemble::label() const {
  if (!truncation) return law.to_string();
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s/C=%g/delta=%g", law.to_string().c_str(), *truncation, convolution);
  return buf;
}

nlohmann::json Ensemble::to_json() const {
  nlohmann::json j{{"law", law.to_string()}, {"seed", seed}};
  if (truncation) {
    j["truncation"] = *truncation;
    j["convolution"] = convolution;
  }
  return j;
}

double TrialRecord::scalar(const std::string& key) const {
  for (const auto& [k, v] : scalars) {
    if (k == key) return v;
  }
  throw ParameterError("trial record has no field '" + key + "'");
}

nlohmann::json Report::to_json() const {
  auto recs = nlohmann::json::array();
  for (const auto& t : trials) {
    nlohmann::json r{{"ensemble", t.ensemble}, {"n", t.n}, {"trial", t.trial}, {"ok", t.ok}};
    if (!t.ok) r["error"] = t.error;
    nlohmann::json values = nlohmann::json::object();
    for (const auto& [k, v] : t.scalars) values[k] = v;
    r["values"] = std::move(values);
    recs.push_back(std::move(r));
  }
  return {{"experiment", experiment},
          {"parameters", parameters},
          {"summary", summary},
          {"pass", pass},
          {"trials", recs}};
}

void Report::write_trials_csv(std::ostream& out) const {
  std::vector<std::string> keys;
  for (const auto& t : trials) {
    for (const auto& kv : t.scalars) {
      if (std::find(keys.begin(), keys.end(), kv.first) == keys.end()) keys.push_back(kv.first);
    }
  }
  out << "ensemble,n,trial,ok";
  for (const auto& k : keys) out << ',' << k;
  out << '\n';
  char buf[32];
  for (const auto& t : trials) {
    out << t.ensemble << ',' << t.n << ',' << t.trial << ',' << (t.ok ? 1 : 0);
    for (const auto& k : keys) {
      out << ',';
      for (const auto& [name, v] : t.scalars) {
        if (name == k) {
          std::snprintf(buf, sizeof buf, "%.17g", v);
          out << buf;
        }
      }
    }
    out << '\n';
  }
}

void Report::write(const std::filesystem::path& dir, const std::string& stem) const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  auto open = [&](const std::string& name) {
    std::ofstream f(dir / name);
    if (!f) throw IoError("cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open(stem + ".json");
    f << to_json().dump(2) << '\n';
  }
  {
    auto f = open(stem + "_trials.csv");
    write_trials_csv(f);
  }
  {
    auto f = open(stem + "_timing.json");
    f << nlohmann::json{{"wall_seconds", wall_seconds}}.dump(2) << '\n';
  }
}

std::vector<double> model_matrix_spectrum(const ModelSpec& model, std::span<const WignerSample> wigners) {
  if (static_cast<int>(wigners.size()) != model.r()) throw SizeError("model spectrum: one Wigner matrix per alpha");
  const int n = wigners.empty() ? model.n() : wigners[0].n;
  if (model.t() > 0 && n != model.n()) throw SizeError("model spectrum: Wigner and deterministic sizes differ");
  std::vector<CMatrix> coeffs{model.gamma()};
  std::vector<CMatrix> blocks{CMatrix::Identity(n, n)};
  for (std::size_t v = 0; v < wigners.size(); ++v) {
    coeffs.push_back(model.alphas()[v]);
    blocks.push_back(wigners[v].matrix);
  }
  for (int u = 0; u < model.t(); ++u) {
    coeffs.push_back(model.betas()[static_cast<std::size_t>(u)]);
    blocks.push_back(model.dets()[static_cast<std::size_t>(u)]);
  }
  return hermitian_eigenvalues(kron_assemble(coeffs, blocks).data);
}

Report check_spectrum_inclusion(const ModelSpec& model, const Ensemble& ensemble, int n, double eps, int trials,
                                const HarnessOptions& opts) {
  const auto start = Clock::now();
  if (!(eps > 0.0)) throw ParameterError("check_spectrum_inclusion: eps must be positive");
  check_trials(trials);
  if (model.t() > 0 && n != model.n()) {
    throw SizeError("check_spectrum_inclusion: n = " + std::to_string(n) + " but the model's matrices are " +
                    std::to_string(model.n()) + " x " + std::to_string(model.n()));
  }
  const SupportSet support = support_of_model(model, opts.inversion_eps, opts.threshold, opts.sweep);
  const SupportSet target = fatten_support(support, eps);

  Report rep;
  rep.experiment = "spectrum_inclusion";
  rep.parameters = {{"model", model.to_json()}, {"ensemble", ensemble.to_json()}, {"n", n},
                    {"eps", eps},               {"trials", trials},               {"options", options_json(opts)}};
  rep.trials.resize(static_cast<std::size_t>(trials));
  parallel_for(rep.trials.size(), opts.sweep.threads, [&](std::size_t k) {
    TrialRecord& rec = rep.trials[k];
    rec.ensemble = ensemble.label();
    rec.n = n;
    rec.trial = static_cast<int>(k);
    guarded(rec, [&] {
      const auto wigners = ensemble.sample(n, model.r(), k);
      const auto eig = model_matrix_spectrum(model, wigners);
      const auto outside = std::count_if(eig.begin(), eig.end(),
                                         [&](double x) { return !target.contains(x, opts.endpoint_slack); });
      rec.scalars = {{"outside", static_cast<double>(outside)}, {"min_eig", eig.front()}, {"max_eig", eig.back()}};
    });
  });

  double total = 0.0;
  for (const auto& t : rep.trials) {
    if (t.ok) total += t.scalar("outside");
  }
  const int failed = failed_count(rep.trials);
  rep.pass = failed == 0 && total == 0.0;
  rep.summary = {{"support", support.to_json()},
                 {"target", target.to_json()},
                 {"total_outside", total},
                 {"failed_trials", failed}};
  rep.wall_seconds = seconds_since(start);
  return rep;
}

nlohmann::json GapExperiment::to_json() const {
  auto ens = nlohmann::json::array();
  for (const auto& e : ensembles) ens.push_back(e.to_json());
  return {{"polynomial", polynomial.to_string(r)},
          {"r", r},
          {"dets", dets_json(dets)},
          {"ensembles", ens},
          {"ns", ns},
          {"trials", trials},
          {"delta", delta},
          {"gap", {gap.first, gap.second}},
          {"model_n", model_n}};
}

std::vector<std::pair<double, double>> support_gaps(const SupportSet& s) {
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 1; i < s.intervals.size(); ++i) out.emplace_back(s.intervals[i - 1].second, s.intervals[i].first);
  return out;
}

void prepare_gap(GapExperiment& exp, const HarnessOptions& opts, bool pick_gap) {
  if (!(exp.delta > 0.0)) throw ParameterError("gap experiment: delta must be positive");
  const int model_n = resolve_model_n(exp.model_n, exp.ns);
  exp.predicted = polynomial_support(exp.polynomial, exp.r, build_dets(exp.dets, model_n), opts.inversion_eps,
                                     opts.threshold, opts.sweep);
  if (!pick_gap) return;
  const auto gaps = support_gaps(exp.predicted);
  if (gaps.empty()) throw StructureError("gap experiment: predicted support has a single component");
  const auto widest = *std::max_element(gaps.begin(), gaps.end(), [](const auto& a, const auto& b) {
    return a.second - a.first < b.second - b.first;
  });
  if (widest.second - widest.first <= 2.0 * exp.delta) {
    throw StructureError("gap experiment: widest gap is narrower than 2 delta");
  }
  exp.gap = {widest.first + exp.delta, widest.second - exp.delta};
}

Report check_gap(GapExperiment& exp, const HarnessOptions& opts) {
  const auto start = Clock::now();
  check_trials(exp.trials);
  if (exp.ensembles.empty()) throw ParameterError("gap experiment needs at least one ensemble");
  if (exp.predicted.empty()) prepare_gap(exp, opts, false);
  const auto [b, c] = exp.gap;
  if (!(b <= c)) throw ParameterError("gap experiment: gap interval is empty");

  // [b - delta, c + delta] must avoid the predicted support.
  bool disjoint = true;
  for (const auto& [l, r] : exp.predicted.intervals) {
    if (!(r <= b - exp.delta + 1e-12 || l >= c + exp.delta - 1e-12)) disjoint = false;
  }

  struct Task {
    std::size_t ensemble;
    int n;
    int trial;
  };
  std::vector<Task> tasks;
  for (std::size_t e = 0; e < exp.ensembles.size(); ++e) {
    for (int n : exp.ns) {
      for (int k = 0; k < exp.trials; ++k) tasks.push_back({e, n, k});
    }
  }
  std::map<int, std::vector<CMatrix>> dets_by_n;
  for (int n : exp.ns) dets_by_n.emplace(n, build_dets(exp.dets, n));

  Report rep;
  rep.experiment = "gap";
  rep.parameters = exp.to_json();
  rep.parameters["options"] = options_json(opts);
  rep.trials.resize(tasks.size());
  parallel_for(tasks.size(), opts.sweep.threads, [&](std::size_t i) {
    const Task& task = tasks[i];
    TrialRecord& rec = rep.trials[i];
    const Ensemble& ens = exp.ensembles[task.ensemble];
    rec.ensemble = ens.label();
    rec.n = task.n;
    rec.trial = task.trial;
    guarded(rec, [&] {
      const auto wigners = ens.sample(task.n, exp.r, static_cast<std::uint64_t>(task.trial));
      const auto eig = empirical_spectrum(exp.polynomial, simulation_args(wigners, dets_by_n.at(task.n)));
      const auto inside = std::count_if(eig.begin(), eig.end(), [&](double x) {
        return x >= b - opts.endpoint_slack && x <= c + opts.endpoint_slack;
      });
      // nearest eigenvalues on either side of the gap
      double below = -std::numeric_limits<double>::infinity();
      double above = std::numeric_limits<double>::infinity();
      for (double x : eig) {
        if (x < b) below = std::max(below, x);
        if (x > c) above = std::min(above, x);
      }
      rec.scalars = {{"in_gap", static_cast<double>(inside)}, {"nearest_below", below}, {"nearest_above", above}};
    });
  });

  exp.violations.clear();
  double total = 0.0;
  for (const auto& t : rep.trials) {
    const double v = t.ok ? t.scalar("in_gap") : 0.0;
    exp.violations.push_back(static_cast<int>(v));
    total += v;
  }
  const int failed = failed_count(rep.trials);
  rep.pass = disjoint && failed == 0 && total == 0.0;
  rep.summary = {{"predicted_support", exp.predicted.to_json()},
                 {"components", exp.predicted.intervals.size()},
                 {"gap", {b, c}},
                 {"gap_clear_of_support", disjoint},
                 {"total_in_gap", total},
                 {"failed_trials", failed}};
  rep.wall_seconds = seconds_since(start);
  return rep;
}

Report check_strong_convergence(const NCPolynomial& p, int r, const std::vector<DetSpec>& dets,
                                const Ensemble& ensemble, const std::vector<int>& ns, int trials, double tolerance,
                                int model_n, const HarnessOptions& opts) {
  const auto start = Clock::now();
  if (!is_selfadjoint(p)) throw ContractViolation("check_strong_convergence: polynomial is not self-adjoint");
  check_trials(trials);
  std::vector<int> sizes = ns;
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  const int mn = resolve_model_n(model_n, sizes);
  const double limit =
      norm_of_polynomial(p, r, build_dets(dets, mn), opts.inversion_eps, opts.threshold, opts.sweep);

  std::map<int, std::vector<CMatrix>> dets_by_n;
  for (int n : sizes) dets_by_n.emplace(n, build_dets(dets, n));

  Report rep;
  rep.experiment = "strong_convergence";
  rep.parameters = {{"polynomial", p.to_string(r)}, {"r", r},           {"dets", dets_json(dets)},
                    {"ensemble", ensemble.to_json()}, {"ns", sizes},     {"trials", trials},
                    {"tolerance", tolerance},         {"model_n", mn},   {"options", options_json(opts)}};
  rep.trials.resize(sizes.size() * static_cast<std::size_t>(trials));
  parallel_for(rep.trials.size(), opts.sweep.threads, [&](std::size_t i) {
    TrialRecord& rec = rep.trials[i];
    rec.ensemble = ensemble.label();
    rec.n = sizes[i / static_cast<std::size_t>(trials)];
    rec.trial = static_cast<int>(i % static_cast<std::size_t>(trials));
    guarded(rec, [&] {
      const auto wigners = ensemble.sample(rec.n, r, static_cast<std::uint64_t>(rec.trial));
      const CMatrix value = evaluate(p, simulation_args(wigners, dets_by_n.at(rec.n)));
      rec.scalars = {{"norm", operator_norm(value)}};
    });
  });

  auto per_n = nlohmann::json::array();
  std::vector<double> errors;
  for (int n : sizes) {
    std::vector<double> norms;
    for (const auto& t : rep.trials) {
      if (t.n == n && t.ok) norms.push_back(t.scalar("norm"));
    }
    const double med = median(norms);
    const double abs_err = std::abs(med - limit);
    const double rel_err = limit > 0.0 ? abs_err / limit : abs_err;
    errors.push_back(abs_err);
    per_n.push_back({{"n", n}, {"median", med}, {"relative_error", rel_err}});
  }
  int increases = 0;
  for (std::size_t i = 1; i < errors.size(); ++i) {
    if (errors[i] > errors[i - 1] + 1e-12) ++increases;
  }
  // Least-squares slope of log(error) against log(n): negative when shrinking.
  double slope = 0.0;
  if (sizes.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double count = static_cast<double>(sizes.size());
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      const double x = std::log(static_cast<double>(sizes[i]));
      const double y = std::log(std::max(errors[i], 1e-300));
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
  }
  const double last_rel = per_n.back()["relative_error"].get<double>();
  const int failed = failed_count(rep.trials);
  rep.pass = failed == 0 && increases == 0 && last_rel <= tolerance;
  rep.summary = {{"limit_norm", limit},
                 {"per_n", per_n},
                 {"monotone", increases == 0},
                 {"error_increases", increases},
                 {"log_log_slope", slope},
                 {"final_relative_error", last_rel},
                 {"failed_trials", failed}};
  rep.wall_seconds = seconds_since(start);
  return rep;
}

double ks_distance(std::span<const double> sorted_samples, const DensityGrid& density) {
  const auto& x = density.points;
  const auto& v = density.values;
  if (x.size() < 2 || !(density.mass > 0.0)) throw ParameterError("ks_distance: density has no mass");
  std::vector<double> cdf(x.size(), 0.0);
  for (std::size_t i = 1; i < x.size(); ++i) cdf[i] = cdf[i - 1] + 0.5 * (x[i] - x[i - 1]) * (v[i] + v[i - 1]);
  for (double& c : cdf) c /= cdf.back();
  auto model_cdf = [&](double t) {
    if (t <= x.front()) return 0.0;
    if (t >= x.back()) return 1.0;
    const auto it = std::upper_bound(x.begin(), x.end(), t);
    const auto j = static_cast<std::size_t>(it - x.begin());
    const double w = (t - x[j - 1]) / (x[j] - x[j - 1]);
    return cdf[j - 1] + w * (cdf[j] - cdf[j - 1]);
  };
  const double count = static_cast<double>(sorted_samples.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < sorted_samples.size(); ++i) {
    const double f = model_cdf(sorted_samples[i]);
    ks = std::max({ks, std::abs(static_cast<double>(i) / count - f), std::abs(static_cast<double>(i + 1) / count - f)});
  }
  return ks;
}

std::vector<double> density_moments(const DensityGrid& density, int count) {
  std::vector<double> out(static_cast<std::size_t>(count), 0.0);
  const auto& x = density.points;
  const auto& v = density.values;
  for (int k = 1; k <= count; ++k) {
    double acc = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) {
      acc += 0.5 * (x[i] - x[i - 1]) * (std::pow(x[i], k) * v[i] + std::pow(x[i - 1], k) * v[i - 1]);
    }
    out[static_cast<std::size_t>(k - 1)] = acc / density.mass;
  }
  return out;
}

Report compare_density(const NCPolynomial& p, int r, const std::vector<DetSpec>& dets, const Ensemble& ensemble,
                       int n, int trials, double ks_tolerance, double moment_tolerance, int model_n,
                       const HarnessOptions& opts) {
  const auto start = Clock::now();
  if (!is_selfadjoint(p)) throw ContractViolation("compare_density: polynomial is not self-adjoint");
  check_trials(trials);
  const int mn = resolve_model_n(model_n, {n});
  const auto model_dets = build_dets(dets, mn);
  const auto grid = default_grid(polynomial_norm_bound(p, r, model_dets), opts.inversion_eps);
  const DensityGrid density = polynomial_distribution(p, r, model_dets, grid, opts.inversion_eps, opts.sweep);
  const auto sim_dets = build_dets(dets, n);

  Report rep;
  rep.experiment = "density_comparison";
  rep.parameters = {{"polynomial", p.to_string(r)},    {"r", r},
                    {"dets", dets_json(dets)},         {"ensemble", ensemble.to_json()},
                    {"n", n},                          {"trials", trials},
                    {"ks_tolerance", ks_tolerance},    {"moment_tolerance", moment_tolerance},
                    {"model_n", mn},                   {"options", options_json(opts)}};
  rep.trials.resize(static_cast<std::size_t>(trials));
  std::vector<std::vector<double>> spectra(static_cast<std::size_t>(trials));
  parallel_for(rep.trials.size(), opts.sweep.threads, [&](std::size_t k) {
    TrialRecord& rec = rep.trials[k];
    rec.ensemble = ensemble.label();
    rec.n = n;
    rec.trial = static_cast<int>(k);
    guarded(rec, [&] {
      const auto wigners = ensemble.sample(n, r, k);
      spectra[k] = empirical_spectrum(p, simulation_args(wigners, sim_dets));
      const auto& eig = spectra[k];
      rec.scalars = {{"min_eig", eig.front()}, {"max_eig", eig.back()}};
      for (int j = 1; j <= 4; ++j) {
        double acc = 0.0;
        for (double x : eig) acc += std::pow(x, j);
        rec.scalars.emplace_back("moment" + std::to_string(j), acc / static_cast<double>(eig.size()));
      }
    });
  });

  std::vector<double> pooled;
  for (const auto& s : spectra) pooled.insert(pooled.end(), s.begin(), s.end());
  std::sort(pooled.begin(), pooled.end());
  const int failed = failed_count(rep.trials);
  nlohmann::json summary{{"density_mass", density.mass},
                         {"density_converged", density.all_converged()},
                         {"pooled_eigenvalues", pooled.size()},
                         {"failed_trials", failed}};
  bool pass = failed == 0 && density.all_converged() && !pooled.empty();
  if (!pooled.empty()) {
    const double ks = ks_distance(pooled, density);
    const auto model_m = density_moments(density, 4);
    std::vector<double> emp_m(4, 0.0);
    for (int j = 1; j <= 4; ++j) {
      double acc = 0.0;
      for (double x : pooled) acc += std::pow(x, j);
      emp_m[static_cast<std::size_t>(j - 1)] = acc / static_cast<double>(pooled.size());
    }
    // Relative to max(|m_k|, m_2^{k/2}) so vanishing odd moments stay meaningful.
    std::vector<double> errs;
    for (int j = 1; j <= 4; ++j) {
      const auto idx = static_cast<std::size_t>(j - 1);
      const double scale = std::max(std::abs(model_m[idx]), std::pow(std::abs(model_m[1]), 0.5 * j));
      errs.push_back(std::abs(emp_m[idx] - model_m[idx]) / scale);
    }
    const double worst = *std::max_element(errs.begin(), errs.end());
    summary["ks_distance"] = ks;
    summary["model_moments"] = model_m;
    summary["empirical_moments"] = emp_m;
    summary["moment_errors"] = errs;
    summary["max_moment_error"] = worst;
    pass = pass && ks <= ks_tolerance && worst <= moment_tolerance;
  }
  rep.pass = pass;
  rep.summary = std::move(summary);
  rep.wall_seconds = seconds_since(start);
  return rep;
}

}  // namespace fsp
