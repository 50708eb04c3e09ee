#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "freespectra/rmt.hpp"
#include "freespectra/subord.hpp"

namespace fsp {

// Every default used by the command-line front end, in one place.
struct Defaults {
  static constexpr double solver_tol = 1e-11;
  static constexpr int max_iter = 2000;
  static constexpr double damping_min = 0.05;
  static constexpr double continuation_start = 1.0;
  static constexpr double eps = 1e-3;
  static constexpr double threshold = 1e-3;
  static constexpr int trials = 20;
  static constexpr int n = 512;
  static constexpr std::uint64_t seed = 0;
  static constexpr double margin = 0.3;  // inclusion fattening
  static constexpr double delta = 0.1;   // gap margin
  static constexpr double norm_tolerance = 0.07;
  static constexpr double ks_tolerance = 0.02;
  static constexpr double moment_tolerance = 0.02;

  static nlohmann::json table();
};

inline const std::vector<std::string>& known_commands() {
  static const std::vector<std::string> commands{"linearize",        "density",    "support",
                                                 "norm",             "simulate",   "verify-inclusion",
                                                 "verify-gap",       "verify-norm", "compare"};
  return commands;
}

struct RunConfig {
  std::string command;

  // [model]
  std::string polynomial;
  int r = 1;
  int t = 0;
  std::string model_file;  // JSON with gamma/alphas/betas; empty when unused
  int model_n = 0;         // 0: same size as the simulation
  std::vector<DetSpec> dets;  // [det.a1] ... [det.at]

  // [wigner]
  EntryLaw law = EntryLaw::gaussian();
  std::optional<double> truncation;
  double convolution = 0.0;
  std::vector<int> ns{Defaults::n};
  int trials = Defaults::trials;
  std::uint64_t seed = Defaults::seed;

  // [solver]
  SolverOptions solver{Defaults::solver_tol, Defaults::max_iter, Defaults::damping_min, Defaults::continuation_start,
                       true};

  // [run]
  double eps = Defaults::eps;
  double threshold = Defaults::threshold;
  double margin = Defaults::margin;
  double delta = Defaults::delta;
  std::optional<std::pair<double, double>> gap;
  std::optional<std::vector<double>> grid;  // min, max, step
  double tolerance = Defaults::norm_tolerance;
  double ks_tolerance = Defaults::ks_tolerance;
  double moment_tolerance = Defaults::moment_tolerance;
  std::string output = "result";

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// INI-style text: `key = value` lines grouped under [run], [model],
// [wigner], [solver] and one [det.aK] per deterministic generator. Errors
// are ParseError with the offending line and column.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

// Full config with every default written out; parse_config(to_text(c)) == c.
std::string to_text(const RunConfig& cfg);

}  // namespace fsp
