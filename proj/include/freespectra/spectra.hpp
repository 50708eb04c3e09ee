#pragma once

#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "freespectra/ncalg.hpp"
#include "freespectra/subord.hpp"

namespace fsp {

struct DensityGrid {
  std::vector<double> points;   // ascending
  double eps = 0.0;             // inversion height
  std::vector<double> values;   // -(1/pi) Im g(x + i eps), clipped at 0
  std::vector<bool> converged;  // false where the solver gave up (value 0)
  double mass = 0.0;            // trapezoid integral of values

  bool all_converged() const;
};

struct SupportSet {
  std::vector<std::pair<double, double>> intervals;  // sorted, disjoint, closed
  std::vector<double> atoms;  // detected point masses (each also covered by an interval)
  double threshold = 0.0;
  double eps = 0.0;

  bool empty() const noexcept { return intervals.empty(); }
  bool contains(double x, double slack = 0.0) const;
  nlohmann::json to_json() const;
  static SupportSet from_json(const nlohmann::json& j);
};

// Resolution and threads for the grid sweeps. Results do not depend on the
// thread count: warm-start chains run over fixed-size chunks.
struct SweepOptions {
  SolverOptions solver;
  int threads = 1;
};

// Points from -radius-1 to radius+1 in steps of eps/2.
std::vector<double> default_grid(double radius, double eps);

DensityGrid density_of_model(const ModelSpec& model, std::span<const double> grid, double eps,
                             const SweepOptions& opts = {});
SupportSet support_of_model(const ModelSpec& model, double eps, double threshold, const SweepOptions& opts = {});

// Crude bound sum |c| prod ||gen|| on ||P||, with ||x_v|| = 2.
double polynomial_norm_bound(const NCPolynomial& p, int r, std::span<const CMatrix> dets);

// Distribution of P(x_1..x_r, a_1..a_t) read off the (1,1) corner of the
// linearized operator-valued resolvent at x E11 + i eps I.
DensityGrid polynomial_distribution(const NCPolynomial& p, int r, const std::vector<CMatrix>& dets,
                                    std::span<const double> grid, double eps, const SweepOptions& opts = {});
SupportSet polynomial_support(const NCPolynomial& p, int r, const std::vector<CMatrix>& dets, double eps,
                              double threshold, const SweepOptions& opts = {});
// Largest |x| over the support, using atom centres rather than their
// fattened intervals.
double support_norm(const SupportSet& s);
double norm_of_polynomial(const NCPolynomial& p, int r, const std::vector<CMatrix>& dets, double eps = 1e-3,
                          double threshold = 1e-3, const SweepOptions& opts = {});

SupportSet fatten_support(const SupportSet& s, double eps);

// Columns x, density, converged.
void write_density_csv(std::ostream& out, const DensityGrid& d);
nlohmann::json density_to_json(const DensityGrid& d);

}  // namespace fsp
