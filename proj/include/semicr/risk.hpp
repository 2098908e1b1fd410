#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "semicr/core_data.hpp"

namespace semicr {

enum class RiskKind { F1, F2, F12 };

std::string_view to_string(RiskKind kind);
RiskKind parse_risk_kind(std::string_view text);

// Exposure effects and cumulative baselines of the three transitions.
struct TransitionParameters {
  std::array<double, 3> beta{};
  std::array<StepFunction, 3> baseline;
};

// Survival in the initial state, exp{-e^{b1 a + b} L01(t) - e^{b2 a + b} L02(t)}.
std::vector<double> survival_values(const TransitionParameters& params, int a, double b,
                                    std::span<const double> grid);

// Cumulative incidence on a nondecreasing grid for exposure level a and
// random-effect shift b (b = 0 for the marginal model).
// F1/F2 accumulate S(u-) (1 - e^{-x(u)}) x_j(u) / x(u) over the joint jump
// times u, with x_j(u) = e^{beta_j a + b} dL0j(u) and x = x_1 + x_2, so that
// F1 + F2 + S = 1 holds exactly on the plug-in estimates.
// F12(t1, t) = 1 - exp{-e^{beta_3 a + b} (L03(t) - L03(t1))}; throws GridBeforeT1
// when a grid point precedes t1.
std::vector<double> cif_values(const TransitionParameters& params, RiskKind kind, int a, double b,
                               std::span<const double> grid, double t1 = 0.0);

struct RiskCurve {
  RiskKind kind = RiskKind::F1;
  double t1 = 0.0;  // used by F12 only
  double b = 0.0;   // random-effect value, 0 for marginal curves
  std::vector<double> grid;
  std::vector<double> a0;
  std::vector<double> a1;
};

RiskCurve make_risk_curve(const TransitionParameters& params, RiskKind kind, double b,
                          std::span<const double> grid, double t1 = 0.0);

struct ContrastSeries {
  RiskCurve curve;
  std::vector<double> rd;                 // a1 - a0
  std::vector<std::optional<double>> rr;  // a1 / a0, empty where a0 == 0
  std::vector<double> lo;                 // optional interval for rd
  std::vector<double> hi;
};

ContrastSeries make_contrast(RiskCurve curve);

// Columns t,kind,a0,a1,rd,rr,lo,hi; lo/hi are NA when no interval is attached.
void write_contrast_csv(std::ostream& out, std::span<const ContrastSeries> series);

// Distinct observed event times up to the 95th percentile of x2. For F12 the
// grid starts at t1 and keeps only later event times.
std::vector<double> default_grid(const Cohort& cohort, RiskKind kind = RiskKind::F1, double t1 = 0.0);

// Median of x1 among subjects with an observed non-terminal event.
double default_t1(const Cohort& cohort);

// Linear-interpolation (type 7) sample quantile.
double quantile(std::vector<double> values, double prob);

}  // namespace semicr
