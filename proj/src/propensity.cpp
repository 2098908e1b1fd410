#include "semicr/propensity.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

namespace semicr {

namespace {

double log1p_exp(double eta) { return eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta)); }

double logistic(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

struct Design {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  Eigen::VectorXd c;  // case weights
};

Design make_design(const Cohort& cohort) {
  const auto n = static_cast<Eigen::Index>(cohort.size());
  const auto p = static_cast<Eigen::Index>(cohort.covariate_count());
  Design d{Eigen::MatrixXd(n, p + 1), Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = cohort[static_cast<std::size_t>(i)];
    d.x(i, 0) = 1.0;
    for (Eigen::Index j = 0; j < p; ++j) d.x(i, j + 1) = s.z[static_cast<std::size_t>(j)];
    d.y(i) = s.a;
    d.c(i) = s.weight;
  }
  return d;
}

double loglik(const Design& d, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = d.x * beta;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) ll += d.c(i) * (d.y(i) * eta(i) - log1p_exp(eta(i)));
  return ll;
}

}  // namespace

double PropensityModel::linear_predictor(std::span<const double> z) const {
  if (z.size() + 1 != coefficients.size()) {
    throw Error(ErrorCode::InvalidArgument, "covariate length does not match the propensity model");
  }
  double eta = coefficients[0];
  for (std::size_t j = 0; j < z.size(); ++j) eta += coefficients[j + 1] * z[j];
  return eta;
}

double PropensityModel::predict(std::span<const double> z) const { return logistic(linear_predictor(z)); }

PropensityModel fit_logistic(const Cohort& cohort, const LogisticOptions& options) {
  const Design d = make_design(cohort);
  const Eigen::Index k = d.x.cols();

  const double treated = d.c.dot(d.y);
  const double total = d.c.sum();
  if (treated <= 0.0 || treated >= total) {
    throw Error(ErrorCode::NoVariation, "treatment takes a single value");
  }
  {
    const Eigen::MatrixXd scaled = d.c.cwiseSqrt().asDiagonal() * d.x;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
    if (qr.rank() < k) throw Error(ErrorCode::RankDeficient, "design matrix is not of full column rank");
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
  double ll = loglik(d, beta);
  PropensityModel model;

  for (int iter = 1; iter <= options.max_iter; ++iter) {
    const Eigen::VectorXd eta = d.x * beta;
    Eigen::VectorXd p(eta.size()), v(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      p(i) = logistic(eta(i));
      v(i) = d.c(i) * p(i) * (1.0 - p(i));
    }
    const Eigen::VectorXd grad = d.x.transpose() * (d.c.cwiseProduct(d.y - p));
    model.iterations = iter - 1;
    model.gradient_norm = grad.norm();
    if (model.gradient_norm <= options.gradient_tol) {
      model.converged = true;
      break;
    }
    const Eigen::MatrixXd info = d.x.transpose() * v.asDiagonal() * d.x;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success) throw Error(ErrorCode::Separation, "information matrix is singular");
    Eigen::VectorXd step = ldlt.solve(grad);

    // A drop within rounding noise of the loglik is not a decrease.
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(ll));
    double ll_new = loglik(d, beta + step);
    int halvings = 0;
    while (!(ll_new >= ll - noise) && halvings < 40) {
      step *= 0.5;
      ll_new = loglik(d, beta + step);
      ++halvings;
    }
    if (!(ll_new >= ll - noise)) {
      // No ascent direction left at floating-point resolution.
      model.converged = model.gradient_norm <= 1e-6 * std::max(1.0, total);
      break;
    }
    beta += step;
    ll = ll_new;
    if (beta.cwiseAbs().maxCoeff() > options.separation_bound) {
      throw Error(ErrorCode::Separation, "logistic coefficients diverge (|coef| > " +
                                             std::to_string(options.separation_bound) + ")");
    }
    model.iterations = iter;
  }
  if (!model.converged) {
    // Final gradient after the last accepted step.
    const Eigen::VectorXd eta = d.x * beta;
    Eigen::VectorXd resid(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) resid(i) = d.c(i) * (d.y(i) - logistic(eta(i)));
    model.gradient_norm = (d.x.transpose() * resid).norm();
    model.converged = model.gradient_norm <= options.gradient_tol;
  }
  {
    // Complete separation: the gradient vanishes because every fitted
    // probability has collapsed onto its outcome, not at a finite optimum.
    const Eigen::VectorXd eta = d.x * beta;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) worst = std::max(worst, std::abs(d.y(i) - logistic(eta(i))));
    if (worst < 1e-6) throw Error(ErrorCode::Separation, "covariates separate the exposure arms completely");
  }
  model.coefficients.assign(beta.data(), beta.data() + beta.size());
  model.loglik = ll;
  return model;
}

std::vector<double> ip_weights(const PropensityModel& model, const Cohort& cohort, const WeightOptions& options) {
  if (!model.converged) throw Error(ErrorCode::NotConverged, "propensity model did not converge");
  if (options.trim && !(options.trim->first > 0.0 && options.trim->first <= options.trim->second)) {
    throw Error(ErrorCode::InvalidArgument, "trim bounds must satisfy 0 < lo <= hi");
  }
  double treated = 0.0, total = 0.0;
  for (const auto& s : cohort.subjects()) {
    treated += s.weight * s.a;
    total += s.weight;
  }
  const double p_treated = treated / total;

  std::vector<double> w(cohort.size());
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const auto& s = cohort[i];
    const double pi = model.predict(s.z);
    w[i] = s.a == 1 ? 1.0 / pi : 1.0 / (1.0 - pi);
    if (options.stabilized) w[i] *= s.a == 1 ? p_treated : 1.0 - p_treated;
    if (options.trim) w[i] = std::clamp(w[i], options.trim->first, options.trim->second);
  }
  return w;
}

std::vector<SmdRow> smd(const Cohort& cohort, std::span<const double> weights) {
  if (weights.size() != cohort.size()) {
    throw Error(ErrorCode::InvalidArgument, "weight vector length differs from cohort size");
  }
  std::vector<SmdRow> rows;
  for (std::size_t j = 0; j < cohort.covariate_count(); ++j) {
    double n[2] = {0, 0}, sum[2] = {0, 0}, sumsq[2] = {0, 0};
    double wsum[2] = {0, 0}, wx[2] = {0, 0};
    for (std::size_t i = 0; i < cohort.size(); ++i) {
      const int g = cohort[i].a;
      const double x = cohort[i].z[j];
      n[g] += 1;
      sum[g] += x;
      sumsq[g] += x * x;
      wsum[g] += weights[i];
      wx[g] += weights[i] * x;
    }
    if (n[0] < 2 || n[1] < 2) throw Error(ErrorCode::ZeroVariance, "each arm needs at least two subjects");
    double var[2];
    for (int g = 0; g < 2; ++g) {
      const double mean = sum[g] / n[g];
      var[g] = std::max(0.0, (sumsq[g] - n[g] * mean * mean) / (n[g] - 1));
    }
    const double pooled = std::sqrt(0.5 * (var[0] + var[1]));
    if (!(pooled > 0.0)) {
      throw Error(ErrorCode::ZeroVariance, "covariate " + cohort.covariate_names()[j] + " is constant");
    }
    SmdRow row;
    row.covariate = cohort.covariate_names()[j];
    row.smd_raw = (sum[1] / n[1] - sum[0] / n[0]) / pooled;
    row.smd_weighted = (wx[1] / wsum[1] - wx[0] / wsum[0]) / pooled;
    rows.push_back(row);
  }
  return rows;
}

WeightResult estimate_weights(const Cohort& cohort, const WeightOptions& options) {
  WeightResult out;
  out.model = fit_logistic(cohort);
  out.ip = ip_weights(out.model, cohort, options);
  out.analysis.resize(cohort.size());
  for (std::size_t i = 0; i < cohort.size(); ++i) out.analysis[i] = cohort[i].weight * out.ip[i];
  return out;
}

}  // namespace semicr
