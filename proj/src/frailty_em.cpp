#include "semicr/frailty_em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "semicr/parallel.hpp"
#include "semicr/quadrature.hpp"

namespace semicr {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_jump(const StepFunction& f, double t) {
  const double j = f.jump_at(t);
  return j > 0.0 ? std::log(j) : kNegInf;
}

// Root of f'(b) = k - H e^b - b / sigma2, which is strictly decreasing; the
// bracket [-H sigma2, 0] or [0, k sigma2] always contains it.
std::optional<double> posterior_mode(const SubjectKernel& kernel, double sigma2) {
  const double k = kernel.events;
  const double h = kernel.hazard;
  auto grad = [&](double b) { return k - h * std::exp(b) - b / sigma2; };
  auto curv = [&](double b) { return h * std::exp(b) + 1.0 / sigma2; };
  const double g0 = grad(0.0);
  if (!std::isfinite(g0)) return std::nullopt;
  if (g0 == 0.0) return 0.0;
  double lo = g0 > 0 ? 0.0 : -h * sigma2;
  double hi = g0 > 0 ? k * sigma2 : 0.0;
  double b = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double g = grad(b);
    if (!std::isfinite(g)) return std::nullopt;
    if (g > 0) lo = b; else hi = b;
    double next = b + g / curv(b);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - b) <= 1e-13 * (1.0 + std::abs(b)) || hi - lo <= 1e-15 * (1.0 + std::abs(b))) {
      return next;
    }
    b = next;
  }
  return std::nullopt;
}

}  // namespace

SubjectKernel subject_kernel(const SubjectRecord& s, const TransitionParameters& p) {
  SubjectKernel k;
  const auto& l1 = p.baseline[0];
  const auto& l2 = p.baseline[1];
  const auto& l3 = p.baseline[2];
  if (s.delta1 == 1) {
    k.constant += p.beta[0] * s.a + log_jump(l1, s.x1);
    ++k.events;
    if (s.delta2 == 1) {
      k.constant += p.beta[2] * s.a + log_jump(l3, s.x2);
      ++k.events;
    }
  } else if (s.delta2 == 1) {
    k.constant += p.beta[1] * s.a + log_jump(l2, s.x2);
    ++k.events;
  }
  k.hazard = l1.evaluate(s.x1) * std::exp(p.beta[0] * s.a) + l2.evaluate(s.x1) * std::exp(p.beta[1] * s.a);
  if (s.delta1 == 1) k.hazard += (l3.evaluate(s.x2) - l3.evaluate(s.x1)) * std::exp(p.beta[2] * s.a);
  return k;
}

double conditional_loglik(const SubjectRecord& subject, const TransitionParameters& params, double b) {
  const SubjectKernel k = subject_kernel(subject, params);
  return k.constant + k.events * b - k.hazard * std::exp(b);
}

SubjectPosterior integrate_subject(const SubjectKernel& kernel, double sigma2, const QuadratureOptions& options) {
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) {
    throw Error(ErrorCode::InvalidArgument, "sigma2 must be finite and >= 0");
  }
  SubjectPosterior out;
  if (sigma2 == 0.0) {
    out.log_marginal = kernel.constant - kernel.hazard;
    return out;
  }
  const double k = kernel.events;
  const double h = kernel.hazard;
  const double half_log_2pi_s2 = 0.5 * std::log(2.0 * std::numbers::pi * sigma2);

  std::vector<double> nodes, logs, exp_nodes;
  double log_scale = 0.0;  // log of the change-of-variable factor
  auto mode = posterior_mode(kernel, sigma2);
  if (mode) {
    const auto& rule = gauss_hermite(options.nodes);
    const double scale = std::sqrt(2.0) / std::sqrt(h * std::exp(*mode) + 1.0 / sigma2);
    log_scale = std::log(scale);
    nodes.resize(rule.nodes.size());
    exp_nodes.resize(rule.nodes.size());
    logs.resize(rule.nodes.size());
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      const double b = *mode + scale * rule.nodes[j];
      nodes[j] = b;
      exp_nodes[j] = std::exp(b);
      logs[j] = rule.log_weights[j] + k * b - h * exp_nodes[j] - 0.5 * b * b / sigma2 - half_log_2pi_s2;
    }
    out.mode = *mode;
  } else {
    // Prior-scaled rule: b = sqrt(2 sigma2) x, density factor e^{-x^2} / sqrt(pi).
    const auto& rule = gauss_hermite(options.fallback_nodes);
    const double scale = std::sqrt(2.0 * sigma2);
    nodes.resize(rule.nodes.size());
    exp_nodes.resize(rule.nodes.size());
    logs.resize(rule.nodes.size());
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      const double b = scale * rule.nodes[j];
      nodes[j] = b;
      exp_nodes[j] = std::exp(b);
      logs[j] = std::log(rule.weights[j]) - 0.5 * std::log(std::numbers::pi) + k * b - h * exp_nodes[j];
    }
    out.adaptive = false;
  }

  const double top = *std::max_element(logs.begin(), logs.end());
  if (!std::isfinite(top)) throw Error(ErrorCode::QuadratureFailure, "posterior normaliser is not finite");
  double total = 0.0, m1 = 0.0, m2 = 0.0, me = 0.0;
  for (std::size_t j = 0; j < logs.size(); ++j) {
    const double p = std::exp(logs[j] - top);
    total += p;
    m1 += p * nodes[j];
    m2 += p * nodes[j] * nodes[j];
    me += p * exp_nodes[j];
  }
  out.moments.mean_b = m1 / total;
  out.moments.mean_b2 = m2 / total;
  out.moments.exp_b = me / total;
  out.log_marginal = kernel.constant + top + std::log(total) + log_scale;
  if (!std::isfinite(out.moments.exp_b) || !std::isfinite(out.moments.mean_b2) || !(out.moments.exp_b > 0.0)) {
    throw Error(ErrorCode::QuadratureFailure, "posterior moments are not finite");
  }
  return out;
}

EStepResult e_step(const Cohort& cohort, const FrailtyParameters& theta, std::span<const double> weights,
                   const QuadratureOptions& options, int threads) {
  const std::size_t n = cohort.size();
  if (!weights.empty() && weights.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "weight vector length differs from cohort size");
  }
  EStepResult out;
  out.moments.resize(n);
  out.log_marginal.resize(n);
  std::vector<char> adaptive(n, 1);
  parallel_for(n, threads, [&](std::size_t i) {
    const auto post = integrate_subject(subject_kernel(cohort[i], theta.transitions), theta.sigma2, options);
    out.moments[i] = post.moments;
    out.log_marginal[i] = post.log_marginal;
    adaptive[i] = post.adaptive ? 1 : 0;
  });
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights.empty() ? cohort[i].weight : weights[i];
    out.loglik += w * out.log_marginal[i];
    out.fallbacks += adaptive[i] ? 0 : 1;
  }
  return out;
}

double observed_loglik(const Cohort& cohort, const FrailtyParameters& theta, std::span<const double> weights,
                       const QuadratureOptions& options) {
  return e_step(cohort, theta, weights, options).loglik;
}

std::array<double, 4> q_components(const Cohort& cohort, std::span<const double> weights,
                                   std::span<const PosteriorMoments> moments, const FrailtyParameters& theta) {
  std::array<double, 4> q{};
  const auto& p = theta.transitions;
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const auto& s = cohort[i];
    const double w = weights.empty() ? s.weight : weights[i];
    const auto& m = moments[i];
    const double mu = std::log(m.exp_b);
    q[0] += w * ((s.delta1 ? m.mean_b + p.beta[0] * s.a + log_jump(p.baseline[0], s.x1) : 0.0) -
                 p.baseline[0].evaluate(s.x1) * std::exp(p.beta[0] * s.a + mu));
    const bool terminal_only = s.delta1 == 0 && s.delta2 == 1;
    q[1] += w * ((terminal_only ? m.mean_b + p.beta[1] * s.a + log_jump(p.baseline[1], s.x2) : 0.0) -
                 p.baseline[1].evaluate(s.x1) * std::exp(p.beta[1] * s.a + mu));
    if (s.delta1 == 1) {
      q[2] += w * ((s.delta2 ? m.mean_b + p.beta[2] * s.a + log_jump(p.baseline[2], s.x2) : 0.0) -
                   (p.baseline[2].evaluate(s.x2) - p.baseline[2].evaluate(s.x1)) * std::exp(p.beta[2] * s.a + mu));
    }
    q[3] += w * (-0.5 * (log_2pi + std::log(theta.sigma2)) - m.mean_b2 / (2.0 * theta.sigma2));
  }
  return q;
}

EMState m_step(const Cohort& cohort, std::span<const double> weights, std::span<const PosteriorMoments> moments,
               const MStepOptions& options) {
  const std::size_t n = cohort.size();
  if (moments.size() != n) throw Error(ErrorCode::InvalidArgument, "one posterior moment set per subject required");
  const std::vector<double> w = weights.empty() ? cohort.record_weights() : std::vector<double>(weights.begin(), weights.end());
  if (w.size() != n) throw Error(ErrorCode::InvalidArgument, "weight vector length differs from cohort size");

  EMState state;
  state.offsets.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(moments[i].exp_b > 0.0) || !std::isfinite(moments[i].exp_b)) {
      throw Error(ErrorCode::InvalidArgument, "E[e^b] must be positive and finite");
    }
    state.offsets[i] = std::log(moments[i].exp_b);
  }

  for (int j = 1; j <= 3; ++j) {
    const auto idx = static_cast<std::size_t>(j - 1);
    const auto records = build_transition_data(cohort, j, w, state.offsets);
    CoxOptions cox = options.cox;
    if (options.start) cox.initial_beta = (*options.start)[idx];
    CoxFit fit;
    try {
      fit = fit_weighted_cox(records, cox);
    } catch (const Error& e) {
      throw Error(e.code(), "M-step transition " + std::to_string(j) + ": " + e.what());
    }
    state.theta.transitions.beta[idx] = fit.beta;
    state.theta.transitions.baseline[idx] = std::move(fit.baseline);
  }

  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += w[i] * moments[i].mean_b2;
    den += w[i];
  }
  state.theta.sigma2 = num / den;
  if (state.theta.sigma2 < options.sigma2_floor) {
    state.theta.sigma2 = options.sigma2_floor;
    state.sigma2_floored = true;
  }
  state.q = q_components(cohort, w, moments, state.theta);
  return state;
}

GeneralMarkovFit fit_general_markov(const Cohort& cohort, std::span<const double> weights, const EmControls& controls) {
  const UsualMarkovFit start = fit_usual_markov(cohort, weights, {}, controls.cox);
  return fit_general_markov(cohort, weights, start, controls);
}

namespace {

struct EmPoint {
  EMState state;
  EStepResult estep;  // at state.theta
};

class EmDriver {
 public:
  EmDriver(const Cohort& cohort, std::span<const double> weights, const EmControls& controls)
      : cohort_(cohort), weights_(weights), controls_(controls) {
    mopts_.cox = controls.cox;
    mopts_.sigma2_floor = controls.sigma2_floor;
  }

  EStepResult expect(const FrailtyParameters& theta) const {
    return e_step(cohort_, theta, weights_, controls_.quadrature, controls_.threads);
  }

  // One EM map: M-step at the moments of `from`, then the E-step at the result.
  EmPoint map(const EmPoint& from) {
    ++maps_;
    mopts_.start = from.state.theta.transitions.beta;
    EmPoint out;
    out.state = m_step(cohort_, weights_, from.estep.moments, mopts_);
    out.estep = expect(out.state.theta);
    return out;
  }

  int maps() const { return maps_; }
  double sigma2_floor() const { return controls_.sigma2_floor; }

 private:
  const Cohort& cohort_;
  std::span<const double> weights_;
  const EmControls& controls_;
  MStepOptions mopts_;
  int maps_ = 0;
};

// Coordinates in which extrapolation keeps every jump and sigma2 positive.
std::vector<double> pack(const FrailtyParameters& theta) {
  std::vector<double> x(theta.transitions.beta.begin(), theta.transitions.beta.end());
  for (const auto& f : theta.transitions.baseline) {
    for (double inc : f.increments()) x.push_back(std::log(inc));
  }
  x.push_back(std::log(theta.sigma2));
  return x;
}

FrailtyParameters unpack(std::span<const double> x, const FrailtyParameters& shape, double sigma2_floor) {
  FrailtyParameters theta;
  std::size_t k = 0;
  for (std::size_t j = 0; j < 3; ++j) theta.transitions.beta[j] = x[k++];
  for (std::size_t j = 0; j < 3; ++j) {
    const auto& times = shape.transitions.baseline[j].times();
    std::vector<double> inc(times.size());
    for (auto& v : inc) v = std::exp(x[k++]);
    theta.transitions.baseline[j] = StepFunction(times, std::move(inc));
  }
  theta.sigma2 = std::max(std::exp(x[k]), sigma2_floor);
  return theta;
}

// One Squarem cycle from `x0`; never returns a point with lower log-likelihood.
EmPoint squarem_cycle(EmDriver& driver, const EmPoint& x0) {
  constexpr int kMaxBackoffs = 4;
  EmPoint x1 = driver.map(x0);
  EmPoint x2 = driver.map(x1);
  // No measurable ascent over the double step: extrapolating only amplifies M-step rounding.
  if (!(x2.estep.loglik > x0.estep.loglik)) {
    return x1.estep.loglik > x2.estep.loglik ? std::move(x1) : std::move(x2);
  }
  const auto p0 = pack(x0.state.theta), p1 = pack(x1.state.theta), p2 = pack(x2.state.theta);
  // Zero jumps (log = -inf) cannot be extrapolated.
  bool finite = p0.size() == p1.size() && p1.size() == p2.size();
  double rr = 0.0, vv = 0.0;
  std::vector<double> r(p0.size()), v(p0.size());
  for (std::size_t i = 0; finite && i < p0.size(); ++i) {
    r[i] = p1[i] - p0[i];
    v[i] = p2[i] - 2.0 * p1[i] + p0[i];
    finite = std::isfinite(r[i]) && std::isfinite(v[i]);
    rr += r[i] * r[i];
    vv += v[i] * v[i];
  }
  if (finite && vv > 0.0) {
    double alpha = std::min(-1.0, -std::sqrt(rr / vv));
    std::vector<double> xp(p0.size());
    for (int attempt = 0; attempt < kMaxBackoffs && alpha < -1.01; ++attempt) {
      for (std::size_t i = 0; i < p0.size(); ++i) xp[i] = p0[i] - 2.0 * alpha * r[i] + alpha * alpha * v[i];
      try {
        EmPoint jump;
        jump.state.theta = unpack(xp, x0.state.theta, driver.sigma2_floor());
        jump.estep = driver.expect(jump.state.theta);
        EmPoint out = driver.map(jump);
        if (out.estep.loglik >= x2.estep.loglik) return out;
      } catch (const Error&) {
        // Extrapolated point outside the fittable region; shorten the step.
      }
      alpha = 0.5 * (alpha - 1.0);
    }
  }
  // alpha = -1 is the plain double step.
  return x2;
}

}  // namespace

GeneralMarkovFit fit_general_markov(const Cohort& cohort, std::span<const double> weights, const UsualMarkovFit& start,
                                    const EmControls& controls) {
  if (weights.size() != cohort.size()) {
    throw Error(ErrorCode::InvalidArgument, "weight vector length differs from cohort size");
  }
  if (!(controls.sigma2_init > 0.0)) throw Error(ErrorCode::InvalidArgument, "initial sigma2 must be > 0");

  EmDriver driver(cohort, weights, controls);
  EmPoint current;
  current.state.theta.transitions = start.parameters();
  current.state.theta.sigma2 = controls.sigma2_init;
  current.estep = driver.expect(current.state.theta);

  GeneralMarkovFit fit;
  fit.loglik_trace.push_back(current.estep.loglik);
  fit.trace.push_back({current.estep.loglik, current.state.theta.transitions.beta, current.state.theta.sigma2});

  for (int iter = 1; iter <= controls.max_iter; ++iter) {
    EmPoint next = controls.acceleration == EmAcceleration::Squarem ? squarem_cycle(driver, current)
                                                                     : driver.map(current);
    const auto& a = current.state.theta;
    const auto& b = next.state.theta;
    bool small = std::abs(next.estep.loglik - current.estep.loglik) <= controls.loglik_tol &&
                 std::abs(b.sigma2 - a.sigma2) <= controls.sigma2_tol;
    for (std::size_t j = 0; j < 3; ++j) {
      small = small && std::abs(b.transitions.beta[j] - a.transitions.beta[j]) <= controls.beta_tol;
    }
    current = std::move(next);
    fit.iterations = iter;
    fit.loglik_trace.push_back(current.estep.loglik);
    fit.trace.push_back({current.estep.loglik, current.state.theta.transitions.beta, current.state.theta.sigma2});
    if (small) {
      fit.converged = true;
      break;
    }
  }
  fit.theta = std::move(current.state.theta);
  fit.q = current.state.q;
  fit.sigma2_floored = current.state.sigma2_floored;
  fit.posterior = std::move(current.estep.moments);
  fit.em_maps = driver.maps();
  return fit;
}

std::vector<double> predict_b(const GeneralMarkovFit& fit, const Cohort& cohort, const QuadratureOptions& options) {
  const auto e = e_step(cohort, fit.theta, {}, options);
  std::vector<double> b(cohort.size());
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = e.moments[i].mean_b;
  return b;
}

std::vector<double> conditional_cif(const GeneralMarkovFit& fit, RiskKind kind, int a, double b,
                                    std::span<const double> grid, double t1) {
  return cif_values(fit.theta.transitions, kind, a, b, grid, t1);
}

RiskCurve conditional_risk_curve(const GeneralMarkovFit& fit, RiskKind kind, double b, std::span<const double> grid,
                                 double t1) {
  return make_risk_curve(fit.theta.transitions, kind, b, grid, t1);
}

std::vector<IndividualContrast> individual_contrasts(const GeneralMarkovFit& fit, std::span<const double> b_hat,
                                                     double t, RiskKind kind, double t1) {
  const double grid[] = {t};
  std::vector<IndividualContrast> out(b_hat.size());
  for (std::size_t i = 0; i < b_hat.size(); ++i) {
    const double r0 = cif_values(fit.theta.transitions, kind, 0, b_hat[i], grid, t1)[0];
    const double r1 = cif_values(fit.theta.transitions, kind, 1, b_hat[i], grid, t1)[0];
    out[i].b = b_hat[i];
    out[i].ird = r1 - r0;
    if (r0 > 0.0) out[i].irr = r1 / r0;
  }
  return out;
}

std::vector<IndividualContrast> individual_contrasts(const GeneralMarkovFit& fit, const Cohort& cohort, double t,
                                                     RiskKind kind, double t1) {
  const auto b = predict_b(fit, cohort);
  return individual_contrasts(fit, b, t, kind, t1);
}

}  // namespace semicr
