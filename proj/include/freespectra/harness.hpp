#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "freespectra/ncalg.hpp"
#include "freespectra/rmt.hpp"
#include "freespectra/spectra.hpp"
#include "freespectra/subord.hpp"

namespace fsp {

// How the Wigner matrices of one experiment are drawn. Trial k, generator v
// reads RandomStream(seed, wigner_stream(k, v)); the optional Gaussian
// convolution partner reads convolution_stream(k, v).
struct Ensemble {
  EntryLaw law = EntryLaw::gaussian();
  std::uint64_t seed = 0;
  std::optional<double> truncation;  // C for truncate_convolve; none = raw entries
  double convolution = 0.0;          // delta for truncate_convolve

  std::vector<WignerSample> sample(int n, int count, std::uint64_t trial) const;
  std::string label() const;
  nlohmann::json to_json() const;
};

struct TrialRecord {
  std::string ensemble;
  int n = 0;
  int trial = 0;
  bool ok = true;
  std::string error;
  std::vector<std::pair<std::string, double>> scalars;

  double scalar(const std::string& key) const;
};

struct Report {
  std::string experiment;
  nlohmann::json parameters;  // everything needed to regenerate the report
  nlohmann::json summary;
  bool pass = false;
  std::vector<TrialRecord> trials;
  double wall_seconds = 0.0;  // kept out of to_json so reruns are byte-identical

  nlohmann::json to_json() const;
  void write_trials_csv(std::ostream& out) const;
  // <stem>.json, <stem>_trials.csv and <stem>_timing.json under dir.
  void write(const std::filesystem::path& dir, const std::string& stem) const;
};

struct HarnessOptions {
  SweepOptions sweep;        // solver settings and thread cap
  double inversion_eps = 1e-3;
  double threshold = 1e-3;
  double endpoint_slack = 1e-9;  // eigenvalues this close to an interval count as inside
};

// Eigenvalues of gamma (x) I + sum alpha_v (x) X_v + sum beta_u (x) A_u.
std::vector<double> model_matrix_spectrum(const ModelSpec& model, std::span<const WignerSample> wigners);

Report check_spectrum_inclusion(const ModelSpec& model, const Ensemble& ensemble, int n, double eps, int trials,
                                const HarnessOptions& opts = {});

struct GapExperiment {
  NCPolynomial polynomial;
  int r = 1;
  std::vector<DetSpec> dets;
  std::vector<Ensemble> ensembles;
  std::vector<int> ns;
  int trials = 20;
  double delta = 0.1;
  std::pair<double, double> gap{0.0, 0.0};  // [b, c], tested for eigenvalues
  int model_n = 0;                          // 0: the largest simulated n
  SupportSet predicted;                     // filled by prepare_gap when empty
  std::vector<int> violations;              // per trial, filled by check_gap

  nlohmann::json to_json() const;
};

// Gaps between consecutive support intervals.
std::vector<std::pair<double, double>> support_gaps(const SupportSet& s);

// Computes the predicted support at model_n. When `pick_gap` is set, the
// widest gap shrunk by delta on both sides becomes the tested interval.
void prepare_gap(GapExperiment& exp, const HarnessOptions& opts, bool pick_gap);

Report check_gap(GapExperiment& exp, const HarnessOptions& opts = {});

Report check_strong_convergence(const NCPolynomial& p, int r, const std::vector<DetSpec>& dets,
                                const Ensemble& ensemble, const std::vector<int>& ns, int trials,
                                double tolerance = 0.07, int model_n = 0, const HarnessOptions& opts = {});

// Kolmogorov-Smirnov distance between sorted samples and a density on a grid
// (the density is normalized by its mass).
double ks_distance(std::span<const double> sorted_samples, const DensityGrid& density);
// First four moments of a density on a grid, normalized by its mass.
std::vector<double> density_moments(const DensityGrid& density, int count = 4);

Report compare_density(const NCPolynomial& p, int r, const std::vector<DetSpec>& dets, const Ensemble& ensemble,
                       int n, int trials, double ks_tolerance = 0.02, double moment_tolerance = 0.02,
                       int model_n = 0, const HarnessOptions& opts = {});

}  // namespace fsp
