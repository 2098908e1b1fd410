#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "semicr/core_data.hpp"

namespace semicr {

// Logistic model for P(A = 1 | Z); coefficients are intercept first.
struct PropensityModel {
  std::vector<double> coefficients;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
  double loglik = 0.0;

  double linear_predictor(std::span<const double> z) const;
  double predict(std::span<const double> z) const;
};

struct LogisticOptions {
  int max_iter = 100;
  double gradient_tol = 1e-8;
  double separation_bound = 30.0;
};

// Maximum likelihood by IRLS with step-halving. Record weights act as case
// weights (all 1 unless the cohort was reweighted, e.g. by a Bayesian bootstrap).
PropensityModel fit_logistic(const Cohort& cohort, const LogisticOptions& options = {});

struct WeightOptions {
  bool stabilized = false;
  std::optional<std::pair<double, double>> trim;
};

// w_i = A_i / pi(Z_i) + (1 - A_i) / (1 - pi(Z_i)), optionally multiplied by the
// (case-weighted) marginal arm proportion and then clamped into [lo, hi].
std::vector<double> ip_weights(const PropensityModel& model, const Cohort& cohort,
                               const WeightOptions& options = {});

struct SmdRow {
  std::string covariate;
  double smd_raw = 0.0;
  double smd_weighted = 0.0;
};

// (weighted treated mean - weighted control mean) / pooled unweighted SD,
// pooled SD = sqrt((s_treated^2 + s_control^2) / 2).
std::vector<SmdRow> smd(const Cohort& cohort, std::span<const double> weights);

// Propensity fit plus the weights handed to the structural models:
// analysis weight = record weight * IP weight.
struct WeightResult {
  PropensityModel model;
  std::vector<double> ip;
  std::vector<double> analysis;
};

WeightResult estimate_weights(const Cohort& cohort, const WeightOptions& options = {});

}  // namespace semicr
