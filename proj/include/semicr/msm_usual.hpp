#pragma once

#include <Eigen/Core>
#include <array>
#include <span>
#include <string>
#include <vector>

#include "semicr/core_data.hpp"
#include "semicr/cox.hpp"
#include "semicr/risk.hpp"

namespace semicr {

// Usual Markov illness-death structural model: one weighted Cox fit per
// transition, with cross-transition sandwich covariance.
struct UsualMarkovFit {
  std::array<CoxFit, 3> transitions;
  Eigen::Matrix3d covariance;
  std::string weights_provenance;

  TransitionParameters parameters() const;
  std::array<double, 3> beta() const;
  std::array<double, 3> se() const;  // sqrt of the covariance diagonal
};

// weights are the analysis weights (e.g. record weight * IP weight).
UsualMarkovFit fit_usual_markov(const Cohort& cohort, std::span<const double> weights,
                                std::string weights_provenance = {}, const CoxOptions& options = {});

std::vector<double> cif(const UsualMarkovFit& fit, RiskKind kind, int a, std::span<const double> grid,
                        double t1 = 0.0);

RiskCurve risk_curve(const UsualMarkovFit& fit, RiskKind kind, std::span<const double> grid, double t1 = 0.0);

ContrastSeries risk_contrast(const UsualMarkovFit& fit, RiskKind kind, std::span<const double> grid,
                             double t1 = 0.0);

}  // namespace semicr
