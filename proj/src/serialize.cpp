#include "semicr/serialize.hpp"

#include <ostream>

#include "semicr/csv_io.hpp"

namespace semicr {

using nlohmann::json;

namespace {

// JSON has no infinities or NaN; they are written as null.
json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json baselines_json(const TransitionParameters& p) {
  json out = json::array();
  for (const auto& b : p.baseline) out.push_back(to_json(b));
  return out;
}

}  // namespace

json to_json(const StepFunction& f) { return {{"times", f.times()}, {"increments", f.increments()}}; }

StepFunction step_function_from_json(const json& j) {
  try {
    return StepFunction(j.at("times").get<std::vector<double>>(), j.at("increments").get<std::vector<double>>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("baseline: ") + e.what());
  }
}

json to_json(const CoxFit& fit) {
  return {{"beta", fit.beta},
          {"se_model", number(fit.model_se)},
          {"se_naive", number(fit.naive_se)},
          {"loglik", fit.loglik},
          {"score", fit.score},
          {"information", fit.information},
          {"iterations", fit.iterations},
          {"event_weight", fit.event_weight},
          {"baseline", to_json(fit.baseline)}};
}

json to_json(const PropensityModel& model) {
  return {{"coefficients", model.coefficients},
          {"converged", model.converged},
          {"iterations", model.iterations},
          {"gradient_norm", model.gradient_norm},
          {"loglik", model.loglik}};
}

json to_json(const UsualMarkovFit& fit) {
  json cov = json::array();
  for (int r = 0; r < 3; ++r) {
    json row = json::array();
    for (int c = 0; c < 3; ++c) row.push_back(number(fit.covariance(r, c)));
    cov.push_back(row);
  }
  json transitions = json::array();
  for (const auto& t : fit.transitions) transitions.push_back(to_json(t));
  json se = json::array();
  for (double s : fit.se()) se.push_back(number(s));
  return {{"model", "usual"},
          {"beta", fit.beta()},
          {"se", se},
          {"covariance", cov},
          {"baselines", baselines_json(fit.parameters())},
          {"transitions", transitions},
          {"weights_provenance", fit.weights_provenance},
          {"converged", true}};
}

json to_json(const GeneralMarkovFit& fit) {
  return {{"model", "general"},
          {"beta", fit.theta.transitions.beta},
          {"sigma2", fit.theta.sigma2},
          {"baselines", baselines_json(fit.theta.transitions)},
          {"loglik_trace", fit.loglik_trace},
          {"q", fit.q},
          {"iterations", fit.iterations},
          {"em_maps", fit.em_maps},
          {"converged", fit.converged},
          {"sigma2_floored", fit.sigma2_floored}};
}

LoadedFit load_fit(const json& j) {
  LoadedFit out;
  try {
    out.model = j.at("model").get<std::string>();
    if (out.model != "usual" && out.model != "general") {
      throw Error(ErrorCode::SchemaError, "fit model must be 'usual' or 'general'");
    }
    const auto beta = j.at("beta").get<std::vector<double>>();
    const auto& baselines = j.at("baselines");
    if (beta.size() != 3 || !baselines.is_array() || baselines.size() != 3) {
      throw Error(ErrorCode::SchemaError, "fit needs three betas and three baselines");
    }
    for (std::size_t k = 0; k < 3; ++k) {
      out.theta.transitions.beta[k] = beta[k];
      out.theta.transitions.baseline[k] = step_function_from_json(baselines[k]);
    }
    out.theta.sigma2 = out.model == "general" ? j.at("sigma2").get<double>() : 0.0;
    out.converged = j.value("converged", true);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("fit artifact: ") + e.what());
  }
  return out;
}

void write_weights_csv(std::ostream& out, const Cohort& cohort, std::span<const double> ip,
                       std::span<const double> analysis) {
  out << "id,weight,ip_weight\n";
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    out << cohort[i].id << ',' << format_double(analysis[i]) << ',' << format_double(ip[i]) << '\n';
  }
}

void write_smd_csv(std::ostream& out, std::span<const SmdRow> rows) {
  out << "covariate,smd_raw,smd_weighted\n";
  for (const auto& r : rows) {
    out << r.covariate << ',' << format_double(r.smd_raw) << ',' << format_double(r.smd_weighted) << '\n';
  }
}

void write_posterior_csv(std::ostream& out, const Cohort& cohort, std::span<const PosteriorMoments> moments) {
  out << "id,mean_b,mean_b2,exp_b\n";
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    out << cohort[i].id << ',' << format_double(moments[i].mean_b) << ',' << format_double(moments[i].mean_b2) << ','
        << format_double(moments[i].exp_b) << '\n';
  }
}

void write_trace_csv(std::ostream& out, std::span<const EmTraceRow> trace) {
  out << "iteration,loglik,beta1,beta2,beta3,sigma2\n";
  for (std::size_t k = 0; k < trace.size(); ++k) {
    const auto& r = trace[k];
    out << k << ',' << format_double(r.loglik) << ',' << format_double(r.beta[0]) << ',' << format_double(r.beta[1])
        << ',' << format_double(r.beta[2]) << ',' << format_double(r.sigma2) << '\n';
  }
}

}  // namespace semicr
