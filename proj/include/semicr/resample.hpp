#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "semicr/core_data.hpp"
#include "semicr/rng.hpp"

namespace semicr {

enum class BootstrapMode { Standard, Bayesian };

struct BootstrapPlan {
  std::size_t replicates = 200;
  std::uint64_t seed = 1;
  BootstrapMode mode = BootstrapMode::Standard;
  bool refit_propensity = true;
  double max_failure_fraction = 0.1;
  int threads = 1;
};

void validate(const BootstrapPlan& plan);

// Analysis weights for a cohort; record weights carry any resampling weight.
using WeightFunction = std::function<std::vector<double>(const Cohort&)>;
// Fit-and-extract closure; throwing marks the replicate as failed.
using Estimator = std::function<std::vector<double>(const Cohort&, std::span<const double> weights)>;

struct BootstrapResult {
  std::vector<double> estimate;  // on the original cohort
  std::vector<std::vector<double>> replicates;  // one row per replicate; empty when failed
  std::vector<std::string> failures;            // message per replicate, empty when it succeeded
  std::size_t failed = 0;

  // Per component, over successful replicates with a finite value.
  std::vector<double> se;
  std::vector<double> percentile_lo;
  std::vector<double> percentile_hi;
  std::vector<double> normal_lo;  // estimate - 1.96 se
  std::vector<double> normal_hi;
};

// Standard mode draws n rows with replacement; Bayesian mode keeps every
// subject and multiplies its record weight by u_i / mean(u), u_i ~ Exp(1).
// With refit_propensity the weight function is re-applied to each replicate
// cohort; otherwise the original analysis weights are carried along (scaled
// by the Bayesian weight). Throws TooManyFailures when more than
// max_failure_fraction of replicates fail.
BootstrapResult bootstrap(const Cohort& cohort, const BootstrapPlan& plan, const WeightFunction& weights,
                          const Estimator& estimator);

// Row indices of standard replicate `index`.
std::vector<std::size_t> bootstrap_rows(std::size_t n, std::uint64_t seed, std::size_t index);

// u / mean(u); strictly positive and summing to n for positive finite u.
std::vector<double> normalized_exponential_weights(std::span<const double> u);
// Draws u_i ~ Exp(1) for Bayesian replicate `index` and normalizes.
std::vector<double> bayesian_weights(std::size_t n, std::uint64_t seed, std::size_t index);

// One Bayesian replicate with given normalized weights.
std::vector<double> bayesian_replicate(const Cohort& cohort, std::span<const double> boot_weights,
                                       const WeightFunction& weights, const Estimator& estimator);

// Columns replicate,status,<names...>; NA for failed rows.
void write_replicates_csv(std::ostream& out, const BootstrapResult& result, std::span<const std::string> names);

}  // namespace semicr
