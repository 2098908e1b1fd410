#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "semicr/core_data.hpp"
#include "semicr/cox.hpp"
#include "semicr/frailty_em.hpp"
#include "semicr/msm_usual.hpp"
#include "semicr/propensity.hpp"

namespace semicr {

nlohmann::json to_json(const StepFunction& f);
StepFunction step_function_from_json(const nlohmann::json& j);

nlohmann::json to_json(const CoxFit& fit);
nlohmann::json to_json(const PropensityModel& model);

// {"model":"usual", beta, se, covariance, transitions:[CoxFit...], weights_provenance}
nlohmann::json to_json(const UsualMarkovFit& fit);
// {"model":"general", beta, sigma2, baselines, loglik_trace, iterations, converged, sigma2_floored}
nlohmann::json to_json(const GeneralMarkovFit& fit);

// Parameters from either fit artifact; sigma2 is 0 for a usual fit.
struct LoadedFit {
  std::string model;  // "usual" or "general"
  FrailtyParameters theta;
  bool converged = true;
};

LoadedFit load_fit(const nlohmann::json& j);

// id,weight,ip_weight
void write_weights_csv(std::ostream& out, const Cohort& cohort, std::span<const double> ip,
                       std::span<const double> analysis);
// covariate,smd_raw,smd_weighted
void write_smd_csv(std::ostream& out, std::span<const SmdRow> rows);
// id,mean_b,mean_b2,exp_b
void write_posterior_csv(std::ostream& out, const Cohort& cohort, std::span<const PosteriorMoments> moments);
// iteration,loglik,beta1,beta2,beta3,sigma2
void write_trace_csv(std::ostream& out, std::span<const EmTraceRow> trace);

}  // namespace semicr
