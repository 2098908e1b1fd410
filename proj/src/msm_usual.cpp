#include "semicr/msm_usual.hpp"

#include <cmath>

namespace semicr {

TransitionParameters UsualMarkovFit::parameters() const {
  TransitionParameters p;
  for (std::size_t j = 0; j < 3; ++j) {
    p.beta[j] = transitions[j].beta;
    p.baseline[j] = transitions[j].baseline;
  }
  return p;
}

std::array<double, 3> UsualMarkovFit::beta() const {
  return {transitions[0].beta, transitions[1].beta, transitions[2].beta};
}

std::array<double, 3> UsualMarkovFit::se() const {
  return {std::sqrt(covariance(0, 0)), std::sqrt(covariance(1, 1)), std::sqrt(covariance(2, 2))};
}

UsualMarkovFit fit_usual_markov(const Cohort& cohort, std::span<const double> weights,
                                std::string weights_provenance, const CoxOptions& options) {
  if (weights.size() != cohort.size()) {
    throw Error(ErrorCode::InvalidArgument, "weight vector length differs from cohort size");
  }
  UsualMarkovFit fit;
  for (int j = 1; j <= 3; ++j) {
    const auto records = build_transition_data(cohort, j, weights);
    try {
      fit.transitions[static_cast<std::size_t>(j - 1)] = fit_weighted_cox(records, options);
    } catch (const Error& e) {
      throw Error(e.code(), "transition " + std::to_string(j) + ": " + e.what());
    }
  }
  fit.covariance =
      sandwich_variance({&fit.transitions[0], &fit.transitions[1], &fit.transitions[2]}, cohort.size()).covariance;
  fit.weights_provenance = std::move(weights_provenance);
  return fit;
}

std::vector<double> cif(const UsualMarkovFit& fit, RiskKind kind, int a, std::span<const double> grid, double t1) {
  return cif_values(fit.parameters(), kind, a, 0.0, grid, t1);
}

RiskCurve risk_curve(const UsualMarkovFit& fit, RiskKind kind, std::span<const double> grid, double t1) {
  return make_risk_curve(fit.parameters(), kind, 0.0, grid, t1);
}

ContrastSeries risk_contrast(const UsualMarkovFit& fit, RiskKind kind, std::span<const double> grid, double t1) {
  return make_contrast(risk_curve(fit, kind, grid, t1));
}

}  // namespace semicr
