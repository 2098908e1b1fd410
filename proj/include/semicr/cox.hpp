#pragma once

#include <Eigen/Core>
#include <array>
#include <span>
#include <vector>

#include "semicr/core_data.hpp"

namespace semicr {

struct CoxOptions {
  int max_iter = 50;
  double score_tol = 1e-8;
  double step_tol = 1e-10;
  double max_abs_beta = 30.0;
  double initial_beta = 0.0;
};

// Weighted Cox fit for a single binary exposure with offsets and delayed entry.
struct CoxFit {
  double beta = 0.0;
  StepFunction baseline;  // Breslow cumulative baseline hazard
  double loglik = 0.0;    // weighted partial log-likelihood at beta
  double score = 0.0;
  double information = 0.0;
  double naive_se = 0.0;  // 1 / sqrt(information)
  double model_se = 0.0;  // robust (sandwich) SE treating the weights as known
  int iterations = 0;
  std::size_t n_records = 0;
  double event_weight = 0.0;

  // Per record, in the order of the input records.
  std::vector<std::size_t> subjects;
  std::vector<double> score_contributions;

  // Weighted risk-set sums at the distinct event times (ascending).
  std::vector<double> event_times;
  std::vector<double> s0;
  std::vector<double> s1;
};

// Weighted partial log-likelihood, score and information at a given beta
// (Breslow handling of ties; at risk on (entry, exit]).
struct PartialLikelihood {
  double loglik = 0.0;
  double score = 0.0;
  double information = 0.0;
};

PartialLikelihood partial_likelihood(std::span<const TransitionRecord> records, double beta);

CoxFit fit_weighted_cox(std::span<const TransitionRecord> records, const CoxOptions& options = {});

// Increment at each distinct event time t: (sum of event weights at t) / S0(beta; t),
// S0 summing w * exp(beta * a + offset) over the risk set.
StepFunction breslow_baseline(std::span<const TransitionRecord> records, double beta);

// Per-record score residuals at beta (two-part martingale structure:
// the event term minus the risk-set compensator).
std::vector<double> score_residuals(std::span<const TransitionRecord> records, double beta);

struct SandwichVariance {
  Eigen::Matrix3d covariance;   // of (beta1, beta2, beta3)
  Eigen::Vector3d information;  // unnormalised weighted information per transition
  Eigen::Matrix3d meat;         // n^-1 sum_i U_i U_i^T
  Eigen::MatrixXd scores;       // n x 3 per-subject score residuals
};

// covariance = I^-1 (sum_i U_i U_i^T) I^-1 with I = diag(information).
SandwichVariance sandwich_variance(const std::array<const CoxFit*, 3>& fits, std::size_t n_subjects);

}  // namespace semicr
