#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "semicr/core_data.hpp"
#include "semicr/cox.hpp"
#include "semicr/msm_usual.hpp"
#include "semicr/risk.hpp"

namespace semicr {

// theta = (beta_1..3, Lambda_01..03, sigma^2) of the log-normal frailty model.
struct FrailtyParameters {
  TransitionParameters transitions;
  double sigma2 = 1.0;
};

// As a function of the random effect, a subject's conditional log-likelihood is
// constant + events * b - hazard * e^b.
struct SubjectKernel {
  double constant = 0.0;
  int events = 0;
  double hazard = 0.0;
};

SubjectKernel subject_kernel(const SubjectRecord& subject, const TransitionParameters& params);

// log L_c(O_i | b): jump sizes of the step baselines stand in for the
// hazards at event times, and the transition-3 cumulative runs over (x1, x2].
double conditional_loglik(const SubjectRecord& subject, const TransitionParameters& params, double b);

struct PosteriorMoments {
  double exp_b = 1.0;  // E[e^b | O]
  double mean_b = 0.0;
  double mean_b2 = 0.0;
};

struct QuadratureOptions {
  int nodes = 20;
  int fallback_nodes = 50;
};

struct SubjectPosterior {
  PosteriorMoments moments;
  double log_marginal = 0.0;  // log int L_c(O | b) phi(b; 0, sigma2) db
  double mode = 0.0;
  bool adaptive = true;
};

// Adaptive Gauss-Hermite integration centred at the posterior mode with the
// curvature-based scale; non-adaptive rule when the mode search fails.
// sigma2 == 0 gives the point mass at b = 0.
SubjectPosterior integrate_subject(const SubjectKernel& kernel, double sigma2, const QuadratureOptions& options = {});

struct EStepResult {
  std::vector<PosteriorMoments> moments;
  std::vector<double> log_marginal;
  double loglik = 0.0;  // sum_i w_i log_marginal_i
  std::size_t fallbacks = 0;
};

EStepResult e_step(const Cohort& cohort, const FrailtyParameters& theta, std::span<const double> weights,
                   const QuadratureOptions& options = {}, int threads = 1);

double observed_loglik(const Cohort& cohort, const FrailtyParameters& theta, std::span<const double> weights,
                       const QuadratureOptions& options = {});

struct EMState {
  FrailtyParameters theta;
  std::vector<double> offsets;  // log E[e^b | O]
  std::array<double, 4> q{};    // Q1..Q4 at theta
  bool sigma2_floored = false;
};

struct MStepOptions {
  CoxOptions cox;
  double sigma2_floor = 1e-10;
  // Warm starts for the three Newton solves; the maximiser does not depend on them.
  std::optional<std::array<double, 3>> start;
};

// Offset Cox fits with offsets log E[e^b] for the three transitions and
// sigma2 = sum w E[b^2] / sum w (floored).
EMState m_step(const Cohort& cohort, std::span<const double> weights, std::span<const PosteriorMoments> moments,
               const MStepOptions& options = {});

// Q1..Q4 of the expected complete-data weighted log-likelihood.
std::array<double, 4> q_components(const Cohort& cohort, std::span<const double> weights,
                                   std::span<const PosteriorMoments> moments, const FrailtyParameters& theta);

// Squarem extrapolates two EM maps per cycle (SqS3 step length on beta,
// log baseline jumps and log sigma2) and then applies one more EM map. An
// extrapolation that ends below the plain double step is shortened at most
// four times before the cycle falls back to the double step.
enum class EmAcceleration { None, Squarem };

struct EmControls {
  int max_iter = 500;  // EM iterations, or Squarem cycles
  EmAcceleration acceleration = EmAcceleration::None;
  double loglik_tol = 1e-5;
  double beta_tol = 1e-3;
  double sigma2_tol = 1e-3;
  double sigma2_init = 1.0;
  double sigma2_floor = 1e-10;
  QuadratureOptions quadrature;
  CoxOptions cox;
  int threads = 1;
};

struct EmTraceRow {
  double loglik = 0.0;
  std::array<double, 3> beta{};
  double sigma2 = 0.0;
};

struct GeneralMarkovFit {
  FrailtyParameters theta;
  std::vector<PosteriorMoments> posterior;  // at theta
  std::vector<double> loglik_trace;         // theta^(0), theta^(1), ...
  std::vector<EmTraceRow> trace;
  std::array<double, 4> q{};
  int iterations = 0;
  int em_maps = 0;  // M-steps performed, equal to iterations without acceleration
  bool converged = false;
  bool sigma2_floored = false;
};

// Starts from the usual Markov fit (no offsets) and sigma2_init; stops when
// the log-likelihood, every beta and sigma2 all move less than their
// tolerances, or after max_iter M-steps (returned with converged = false).
GeneralMarkovFit fit_general_markov(const Cohort& cohort, std::span<const double> weights,
                                    const EmControls& controls = {});
GeneralMarkovFit fit_general_markov(const Cohort& cohort, std::span<const double> weights,
                                    const UsualMarkovFit& start, const EmControls& controls = {});

// Posterior means E[b_i | O_i, theta-hat] for the given cohort.
std::vector<double> predict_b(const GeneralMarkovFit& fit, const Cohort& cohort,
                              const QuadratureOptions& options = {});

std::vector<double> conditional_cif(const GeneralMarkovFit& fit, RiskKind kind, int a, double b,
                                    std::span<const double> grid, double t1 = 0.0);

RiskCurve conditional_risk_curve(const GeneralMarkovFit& fit, RiskKind kind, double b,
                                 std::span<const double> grid, double t1 = 0.0);

struct IndividualContrast {
  double b = 0.0;
  double ird = 0.0;
  std::optional<double> irr;  // empty when the a = 0 risk is zero
};

// IRD/IRR at time t, evaluated at each subject's predicted random effect.
std::vector<IndividualContrast> individual_contrasts(const GeneralMarkovFit& fit, std::span<const double> b_hat,
                                                     double t, RiskKind kind, double t1 = 0.0);
std::vector<IndividualContrast> individual_contrasts(const GeneralMarkovFit& fit, const Cohort& cohort, double t,
                                                     RiskKind kind, double t1 = 0.0);

}  // namespace semicr
