#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "semicr/core_data.hpp"

namespace semicr {

struct SimConfig {
  std::size_t n = 500;
  std::array<double, 3> beta{1.0, 1.0, 0.5};
  double sigma2 = 0.0;
  std::array<double, 4> alpha{0.5, 0.1, -0.1, -0.2};
  double censor_lo = 0.4;
  double censor_hi = 0.5;
  std::uint64_t seed = 1;
};

// Throws InvalidArgument for n == 0, sigma2 < 0, non-finite entries or an
// empty censoring window.
void validate(const SimConfig& config);

// Baseline truths: lambda01 = lambda02 = 2 e^{-t} on [0, 3], 2 e^{-3} after;
// lambda03 = 2 lambda01.
double lambda01_truth(double t);
double Lambda01_truth(double t);
double Lambda01_inverse(double y);
double Lambda03_truth(double t);

struct LatentTruth {
  double b = 0.0;
  double t1 = 0.0;  // +inf when the non-terminal event never occurs
  double t2 = 0.0;
  double c = 0.0;
  double p_t1_inf = 0.0;
};

struct SimulatedCohort {
  Cohort cohort;
  std::vector<LatentTruth> truth;  // aligned with cohort rows
};

// Subject i draws from RandomStream(seed, i), so output does not depend on
// the thread count.
SimulatedCohort generate(const SimConfig& config, int threads = 1);

// Columns id,b,t1,t2,c,p_t1_inf (t1 written as Inf when infinite).
void write_truth_csv(std::ostream& out, const SimulatedCohort& sim);

}  // namespace semicr
