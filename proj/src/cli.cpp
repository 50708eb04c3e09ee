#include "freespectra/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include "freespectra/error.hpp"
#include "freespectra/harness.hpp"
#include "freespectra/linearize.hpp"
#include "freespectra/matrix_io.hpp"
#include "freespectra/parallel.hpp"
#include "freespectra/spectra.hpp"

namespace fsp {

namespace {

class Runner {
 public:
  Runner(const RunConfig& cfg, const RunContext& ctx)
      : cfg_(cfg), ctx_(ctx), log_(ctx.log ? *ctx.log : std::cout) {
    opts_.sweep.solver = cfg.solver;
    opts_.sweep.threads = ctx.threads;
    opts_.inversion_eps = cfg.eps;
    opts_.threshold = cfg.threshold;
    ensemble_.law = cfg.law;
    ensemble_.seed = cfg.seed;
    ensemble_.truncation = cfg.truncation;
    ensemble_.convolution = cfg.convolution;
  }

  int dispatch() {
    const std::string& c = cfg_.command;
    if (c == "linearize") return linearize_cmd();
    if (c == "density") return density_cmd();
    if (c == "support") return support_cmd();
    if (c == "norm") return norm_cmd();
    if (c == "simulate") return simulate_cmd();
    if (c == "verify-inclusion") return report_cmd(inclusion_report());
    if (c == "verify-gap") return report_cmd(gap_report());
    if (c == "verify-norm") return report_cmd(norm_report());
    if (c == "compare") return report_cmd(compare_report());
    throw ParameterError("unknown command '" + c + "'");
  }

 private:
  NCPolynomial polynomial() const {
    if (cfg_.polynomial.empty()) throw ParameterError(cfg_.command + " needs a polynomial ([model] poly)");
    return parse_polynomial(cfg_.polynomial, cfg_.r, cfg_.t);
  }

  int model_size() const { return cfg_.model_n > 0 ? cfg_.model_n : cfg_.ns.front(); }

  std::vector<CMatrix> dets(int n) const {
    std::vector<CMatrix> out;
    for (const auto& d : cfg_.dets) out.push_back(make_deterministic(d, n));
    return out;
  }

  // Explicit coefficient model read from JSON, or the linearization of P.
  ModelSpec model(int n) const {
    if (cfg_.model_file.empty()) return ModelSpec::from_linearization(linearize(polynomial()), cfg_.r, dets(n));
    std::ifstream in(cfg_.model_file);
    if (!in) throw IoError("cannot read model file " + cfg_.model_file);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw IoError("model file " + cfg_.model_file + ": " + e.what());
    }
    std::vector<CMatrix> alphas;
    std::vector<CMatrix> betas;
    for (const auto& a : j.value("alphas", nlohmann::json::array())) alphas.push_back(matrix_from_json(a));
    for (const auto& b : j.value("betas", nlohmann::json::array())) betas.push_back(matrix_from_json(b));
    if (static_cast<int>(alphas.size()) != cfg_.r || static_cast<int>(betas.size()) != cfg_.t) {
      throw SizeError("model file has " + std::to_string(alphas.size()) + " alphas and " +
                      std::to_string(betas.size()) + " betas, config declares r = " + std::to_string(cfg_.r) +
                      ", t = " + std::to_string(cfg_.t));
    }
    return ModelSpec(matrix_from_json(j.at("gamma")), std::move(alphas), std::move(betas), dets(n));
  }

  std::vector<double> grid(double radius) const {
    if (!cfg_.grid) return default_grid(radius, cfg_.eps);
    const auto& g = *cfg_.grid;
    std::vector<double> out;
    for (std::size_t i = 0;; ++i) {
      const double x = g[0] + static_cast<double>(i) * g[2];
      if (x > g[1] + 1e-12 * g[2]) break;
      out.push_back(x);
    }
    return out;
  }

  nlohmann::json envelope(nlohmann::json result) const {
    return {{"command", cfg_.command}, {"config", to_text(cfg_)}, {"defaults", Defaults::table()}, {"result", result}};
  }

  std::filesystem::path path(const std::string& suffix) const { return ctx_.out_dir / (cfg_.output + suffix); }

  std::ofstream open(const std::filesystem::path& p) const {
    std::error_code ec;
    std::filesystem::create_directories(ctx_.out_dir, ec);
    std::ofstream f(p);
    if (!f) throw IoError("cannot write " + p.string());
    return f;
  }

  void write_json(const std::string& suffix, const nlohmann::json& j) const {
    auto f = open(path(suffix));
    f << j.dump(2) << '\n';
  }

  int linearize_cmd() {
    const Linearization lin = linearize(polynomial());
    write_json(".json", envelope(linearization_to_json(lin)));
    log_ << "linearize: m = " << lin.m << ", " << lin.arity() << " coefficient matrices -> "
         << path(".json").string() << '\n';
    return kExitPass;
  }

  int density_cmd() {
    const int n = model_size();
    DensityGrid d;
    if (cfg_.model_file.empty()) {
      const auto p = polynomial();
      const auto ds = dets(n);
      d = polynomial_distribution(p, cfg_.r, ds, grid(polynomial_norm_bound(p, cfg_.r, ds)), cfg_.eps, opts_.sweep);
    } else {
      const ModelSpec m = model(n);
      d = density_of_model(m, grid(m.norm_radius()), cfg_.eps, opts_.sweep);
    }
    {
      auto f = open(path(".csv"));
      write_density_csv(f, d);
    }
    const auto failed = std::count(d.converged.begin(), d.converged.end(), false);
    write_json(".json", envelope({{"eps", d.eps},
                                  {"mass", d.mass},
                                  {"points", d.points.size()},
                                  {"failed_points", failed},
                                  {"csv", path(".csv").filename().string()}}));
    log_ << "density: " << d.points.size() << " points, mass " << d.mass;
    if (failed) log_ << ", " << failed << " points did not converge";
    log_ << " -> " << path(".csv").string() << '\n';
    return kExitPass;
  }

  SupportSet support() const {
    const int n = model_size();
    if (cfg_.model_file.empty()) {
      return polynomial_support(polynomial(), cfg_.r, dets(n), cfg_.eps, cfg_.threshold, opts_.sweep);
    }
    return support_of_model(model(n), cfg_.eps, cfg_.threshold, opts_.sweep);
  }

  static std::string intervals_text(const SupportSet& s) {
    std::ostringstream os;
    os.precision(6);
    for (const auto& [l, r] : s.intervals) os << " [" << l << ", " << r << "]";
    return s.empty() ? " (empty)" : os.str();
  }

  int support_cmd() {
    const SupportSet s = support();
    write_json(".json", envelope(s.to_json()));
    log_ << "support:" << intervals_text(s) << " -> " << path(".json").string() << '\n';
    return kExitPass;
  }

  int norm_cmd() {
    const SupportSet s = polynomial_support(polynomial(), cfg_.r, dets(model_size()), cfg_.eps, cfg_.threshold,
                                            opts_.sweep);
    const double norm = support_norm(s);
    write_json(".json", envelope({{"norm", norm}, {"support", s.to_json()}}));
    log_ << "norm: " << format_double(norm) << " -> " << path(".json").string() << '\n';
    return kExitPass;
  }

  int simulate_cmd() {
    const auto p = polynomial();
    struct Task {
      int n;
      int trial;
    };
    std::vector<Task> tasks;
    for (int n : cfg_.ns) {
      for (int k = 0; k < cfg_.trials; ++k) tasks.push_back({n, k});
    }
    std::vector<std::vector<double>> spectra(tasks.size());
    parallel_for(tasks.size(), ctx_.threads, [&](std::size_t i) {
      const auto wigners = ensemble_.sample(tasks[i].n, cfg_.r, static_cast<std::uint64_t>(tasks[i].trial));
      spectra[i] = empirical_spectrum(p, wigners, dets(tasks[i].n));
    });
    auto f = open(path("_eigenvalues.csv"));
    f << "n,trial,eigenvalue\n";
    auto summary = nlohmann::json::array();
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      for (double x : spectra[i]) f << tasks[i].n << ',' << tasks[i].trial << ',' << format_double(x) << '\n';
      summary.push_back({{"n", tasks[i].n},
                         {"trial", tasks[i].trial},
                         {"min_eig", spectra[i].front()},
                         {"max_eig", spectra[i].back()}});
    }
    write_json(".json", envelope({{"ensemble", ensemble_.to_json()}, {"trials", summary}}));
    log_ << "simulate: " << tasks.size() << " spectra -> " << path("_eigenvalues.csv").string() << '\n';
    return kExitPass;
  }

  Report inclusion_report() const {
    const int n = cfg_.ns.front();
    return check_spectrum_inclusion(model(n), ensemble_, n, cfg_.margin, cfg_.trials, opts_);
  }

  Report gap_report() const {
    GapExperiment exp;
    exp.polynomial = polynomial();
    exp.r = cfg_.r;
    exp.dets = cfg_.dets;
    exp.ensembles = {ensemble_};
    exp.ns = cfg_.ns;
    exp.trials = cfg_.trials;
    exp.delta = cfg_.delta;
    exp.model_n = cfg_.model_n;
    if (cfg_.gap) exp.gap = *cfg_.gap;
    prepare_gap(exp, opts_, !cfg_.gap);
    return check_gap(exp, opts_);
  }

  Report norm_report() const {
    return check_strong_convergence(polynomial(), cfg_.r, cfg_.dets, ensemble_, cfg_.ns, cfg_.trials, cfg_.tolerance,
                                    cfg_.model_n, opts_);
  }

  Report compare_report() const {
    return compare_density(polynomial(), cfg_.r, cfg_.dets, ensemble_, cfg_.ns.front(), cfg_.trials, cfg_.ks_tolerance,
                           cfg_.moment_tolerance, cfg_.model_n, opts_);
  }

  int report_cmd(Report rep) {
    rep.parameters["config"] = to_text(cfg_);
    rep.parameters["defaults"] = Defaults::table();
    rep.write(ctx_.out_dir, cfg_.output);
    int failed = 0;
    for (const auto& t : rep.trials) failed += t.ok ? 0 : 1;
    log_ << cfg_.command << ": " << (rep.pass ? "PASS" : "FAIL") << " (" << rep.trials.size() << " trials";
    if (failed) log_ << ", " << failed << " failed";
    log_ << ") -> " << path(".json").string() << '\n';
    return rep.pass ? kExitPass : kExitFail;
  }

  const RunConfig& cfg_;
  const RunContext& ctx_;
  std::ostream& log_;
  HarnessOptions opts_;
  Ensemble ensemble_;
};

}  // namespace

int run(const RunConfig& cfg, const RunContext& ctx) {
  std::ostream& err = ctx.err ? *ctx.err : std::cerr;
  try {
    return Runner(cfg, ctx).dispatch();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace fsp
