#include "semicr/cox.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <string>

namespace semicr {

namespace {

// Sorted views of a transition data set, built once per fit.
class RiskSetIndex {
 public:
  explicit RiskSetIndex(std::span<const TransitionRecord> records) : records_(records) {
    for (const auto& r : records) {
      if (r.event == 1) event_times_.push_back(r.exit);
    }
    std::sort(event_times_.begin(), event_times_.end());
    event_times_.erase(std::unique(event_times_.begin(), event_times_.end()), event_times_.end());

    event_weight_.assign(event_times_.size(), 0.0);
    event_wa_.assign(event_times_.size(), 0.0);
    for (const auto& r : records) {
      if (r.event != 1) continue;
      const auto k = position(r.exit);
      event_weight_[k] += r.weight;
      event_wa_[k] += r.weight * r.a;
    }

    by_exit_.resize(records.size());
    std::iota(by_exit_.begin(), by_exit_.end(), std::size_t{0});
    by_entry_ = by_exit_;
    std::sort(by_exit_.begin(), by_exit_.end(),
              [&](std::size_t x, std::size_t y) { return records[x].exit > records[y].exit; });
    std::sort(by_entry_.begin(), by_entry_.end(),
              [&](std::size_t x, std::size_t y) { return records[x].entry > records[y].entry; });
  }

  const std::vector<double>& event_times() const { return event_times_; }
  const std::vector<double>& event_weight() const { return event_weight_; }
  const std::vector<double>& event_wa() const { return event_wa_; }

  std::size_t position(double t) const {
    return static_cast<std::size_t>(std::lower_bound(event_times_.begin(), event_times_.end(), t) -
                                    event_times_.begin());
  }

  // S0, S1, S2 at each event time: sums of w exp(beta a + offset) a^k over
  // records with entry < t <= exit.
  void sums(double beta, std::vector<double>& s0, std::vector<double>& s1, std::vector<double>& s2) const {
    const std::size_t m = event_times_.size();
    s0.assign(m, 0.0);
    s1.assign(m, 0.0);
    s2.assign(m, 0.0);
    double in0 = 0, in1 = 0, in2 = 0, out0 = 0, out1 = 0, out2 = 0;
    std::size_t pe = 0, pn = 0;
    for (std::size_t k = m; k-- > 0;) {
      const double t = event_times_[k];
      while (pe < by_exit_.size() && records_[by_exit_[pe]].exit >= t) {
        const auto& r = records_[by_exit_[pe++]];
        const double v = r.weight * std::exp(beta * r.a + r.offset);
        in0 += v;
        in1 += v * r.a;
        in2 += v * r.a * r.a;
      }
      while (pn < by_entry_.size() && records_[by_entry_[pn]].entry >= t) {
        const auto& r = records_[by_entry_[pn++]];
        const double v = r.weight * std::exp(beta * r.a + r.offset);
        out0 += v;
        out1 += v * r.a;
        out2 += v * r.a * r.a;
      }
      s0[k] = in0 - out0;
      s1[k] = in1 - out1;
      s2[k] = in2 - out2;
    }
  }

 private:
  std::span<const TransitionRecord> records_;
  std::vector<double> event_times_;
  std::vector<double> event_weight_;
  std::vector<double> event_wa_;
  std::vector<std::size_t> by_exit_;
  std::vector<std::size_t> by_entry_;
};

PartialLikelihood evaluate(const RiskSetIndex& index, std::span<const TransitionRecord> records, double beta,
                           std::vector<double>& s0, std::vector<double>& s1, std::vector<double>& s2) {
  index.sums(beta, s0, s1, s2);
  PartialLikelihood pl;
  for (const auto& r : records) {
    if (r.event == 1) pl.loglik += r.weight * (beta * r.a + r.offset);
  }
  const auto& dw = index.event_weight();
  const auto& dwa = index.event_wa();
  for (std::size_t k = 0; k < s0.size(); ++k) {
    if (!(s0[k] > 0.0)) {
      throw Error(ErrorCode::EmptyRiskSet, "empty risk set at event time " + std::to_string(index.event_times()[k]));
    }
    const double mean = s1[k] / s0[k];
    pl.loglik -= dw[k] * std::log(s0[k]);
    pl.score += dwa[k] - dw[k] * mean;
    pl.information += dw[k] * std::max(0.0, s2[k] / s0[k] - mean * mean);
  }
  return pl;
}

void check_records(std::span<const TransitionRecord> records) {
  for (const auto& r : records) {
    if (!(r.exit > r.entry) || r.entry < 0.0 || !std::isfinite(r.exit)) {
      throw Error(ErrorCode::InvalidArgument, "transition record needs 0 <= entry < exit < inf");
    }
    if (!(r.weight > 0.0) || !std::isfinite(r.weight)) {
      throw Error(ErrorCode::NonPositiveWeight, "transition record weight must be positive and finite");
    }
    if (!std::isfinite(r.offset) || !std::isfinite(r.a)) {
      throw Error(ErrorCode::NonFiniteValue, "transition record offset/covariate not finite");
    }
  }
}

// A finite maximiser exists iff some event has a larger and some event a
// smaller exposure than another member of its risk set.
void check_finite_maximiser(std::span<const TransitionRecord> records) {
  std::vector<const TransitionRecord*> by_entry, by_exit, events;
  for (const auto& r : records) {
    by_entry.push_back(&r);
    by_exit.push_back(&r);
    if (r.event == 1) events.push_back(&r);
  }
  const auto entry_less = [](const TransitionRecord* x, const TransitionRecord* y) { return x->entry < y->entry; };
  const auto exit_less = [](const TransitionRecord* x, const TransitionRecord* y) { return x->exit < y->exit; };
  std::sort(by_entry.begin(), by_entry.end(), entry_less);
  std::sort(by_exit.begin(), by_exit.end(), exit_less);
  std::sort(events.begin(), events.end(), exit_less);

  std::multiset<double> at_risk;
  std::size_t added = 0, removed = 0;
  bool above = false, below = false;
  for (const auto* ev : events) {
    const double t = ev->exit;
    for (; added < by_entry.size() && by_entry[added]->entry < t; ++added) at_risk.insert(by_entry[added]->a);
    for (; removed < by_exit.size() && by_exit[removed]->exit < t; ++removed) {
      at_risk.erase(at_risk.find(by_exit[removed]->a));
    }
    above = above || ev->a < *at_risk.rbegin();
    below = below || ev->a > *at_risk.begin();
  }
  if (!above && !below) {
    throw Error(ErrorCode::DegenerateCovariate, "exposure is constant within every event-time risk set");
  }
  if (!above || !below) {
    throw Error(ErrorCode::MonotoneLikelihood, std::string("partial likelihood increases without bound as beta -> ") +
                                                   (above ? "-inf" : "+inf"));
  }
}

std::vector<double> residuals(const RiskSetIndex& index, std::span<const TransitionRecord> records, double beta,
                              const std::vector<double>& s0, const std::vector<double>& s1) {
  const std::size_t m = s0.size();
  // Cumulative hazard increments and the matching running mean of a.
  std::vector<double> h(m + 1, 0.0), g(m + 1, 0.0), mean(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double dl = index.event_weight()[k] / s0[k];
    mean[k] = s1[k] / s0[k];
    h[k + 1] = h[k] + dl;
    g[k + 1] = g[k] + dl * mean[k];
  }
  const auto& times = index.event_times();
  auto count_le = [&](double t) {
    return static_cast<std::size_t>(std::upper_bound(times.begin(), times.end(), t) - times.begin());
  };
  std::vector<double> u(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const std::size_t hi = count_le(r.exit);
    const std::size_t lo = count_le(r.entry);
    const double risk = std::exp(beta * r.a + r.offset);
    double value = -risk * (r.a * (h[hi] - h[lo]) - (g[hi] - g[lo]));
    if (r.event == 1) value += r.a - mean[index.position(r.exit)];
    u[i] = r.weight * value;
  }
  return u;
}

}  // namespace

PartialLikelihood partial_likelihood(std::span<const TransitionRecord> records, double beta) {
  check_records(records);
  RiskSetIndex index(records);
  std::vector<double> s0, s1, s2;
  return evaluate(index, records, beta, s0, s1, s2);
}

StepFunction breslow_baseline(std::span<const TransitionRecord> records, double beta) {
  if (!std::isfinite(beta)) throw Error(ErrorCode::InvalidArgument, "beta must be finite");
  check_records(records);
  RiskSetIndex index(records);
  std::vector<double> s0, s1, s2;
  index.sums(beta, s0, s1, s2);
  std::vector<double> inc(s0.size());
  for (std::size_t k = 0; k < s0.size(); ++k) {
    if (!(s0[k] > 0.0)) {
      throw Error(ErrorCode::EmptyRiskSet, "empty risk set at event time " + std::to_string(index.event_times()[k]));
    }
    inc[k] = index.event_weight()[k] / s0[k];
  }
  return StepFunction(index.event_times(), std::move(inc));
}

std::vector<double> score_residuals(std::span<const TransitionRecord> records, double beta) {
  check_records(records);
  RiskSetIndex index(records);
  std::vector<double> s0, s1, s2;
  evaluate(index, records, beta, s0, s1, s2);
  return residuals(index, records, beta, s0, s1);
}

CoxFit fit_weighted_cox(std::span<const TransitionRecord> records, const CoxOptions& options) {
  constexpr double kMaxStep = 5.0;
  check_records(records);
  RiskSetIndex index(records);
  if (index.event_times().empty()) throw Error(ErrorCode::NoEvents, "no events in this transition");
  check_finite_maximiser(records);

  CoxFit fit;
  fit.n_records = records.size();
  fit.event_weight = std::accumulate(index.event_weight().begin(), index.event_weight().end(), 0.0);
  const double score_tol = options.score_tol * std::max(1.0, fit.event_weight);

  std::vector<double> s0, s1, s2;
  double beta = options.initial_beta;
  PartialLikelihood pl = evaluate(index, records, beta, s0, s1, s2);
  if (!(pl.information > 0.0)) {
    PartialLikelihood at_zero = evaluate(index, records, 0.0, s0, s1, s2);
    if (!(at_zero.information > 0.0)) {
      throw Error(ErrorCode::DegenerateCovariate, "exposure is constant within every event-time risk set");
    }
    beta = 0.0;
    pl = at_zero;
  }

  bool converged = false;
  int iter = 0;
  for (iter = 1; iter <= options.max_iter; ++iter) {
    if (!(pl.information > 0.0)) {
      throw Error(ErrorCode::MonotoneLikelihood, "information vanished; estimate diverging");
    }
    // Bounded steps keep exp(beta * a) representable while a monotone
    // likelihood drifts towards max_abs_beta.
    double step = std::clamp(pl.score / pl.information, -kMaxStep, kMaxStep);
    double candidate = beta + step;
    PartialLikelihood next = evaluate(index, records, candidate, s0, s1, s2);
    // Near the maximum the loglik change falls below rounding; a drop within
    // that noise does not trigger step-halving.
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(pl.loglik));
    int halvings = 0;
    while (!(next.loglik >= pl.loglik - noise) && halvings < 30) {
      step *= 0.5;
      candidate = beta + step;
      next = evaluate(index, records, candidate, s0, s1, s2);
      ++halvings;
    }
    if (!(next.loglik >= pl.loglik - noise)) {
      // Already at the maximum to floating-point resolution.
      converged = std::abs(pl.score) <= score_tol;
      break;
    }
    beta = candidate;
    pl = next;
    if (std::abs(beta) > options.max_abs_beta) {
      throw Error(ErrorCode::MonotoneLikelihood,
                  "|beta| exceeded " + std::to_string(options.max_abs_beta) + "; partial likelihood is monotone");
    }
    if (std::abs(pl.score) <= score_tol && std::abs(step) <= options.step_tol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw Error(ErrorCode::NotConverged, "Newton-Raphson did not converge in " + std::to_string(options.max_iter) +
                                             " iterations");
  }

  // Refresh the risk-set sums at the accepted beta.
  pl = evaluate(index, records, beta, s0, s1, s2);
  fit.beta = beta;
  fit.loglik = pl.loglik;
  fit.score = pl.score;
  fit.information = pl.information;
  fit.naive_se = 1.0 / std::sqrt(pl.information);
  fit.iterations = std::min(iter, options.max_iter);

  std::vector<double> inc(s0.size());
  for (std::size_t k = 0; k < s0.size(); ++k) inc[k] = index.event_weight()[k] / s0[k];
  fit.baseline = StepFunction(index.event_times(), std::move(inc));
  fit.event_times = index.event_times();
  fit.s0 = s0;
  fit.s1 = s1;

  fit.score_contributions = residuals(index, records, beta, s0, s1);
  fit.subjects.resize(records.size());
  std::size_t max_subject = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    fit.subjects[i] = records[i].subject;
    max_subject = std::max(max_subject, records[i].subject);
  }
  std::vector<double> per_subject(max_subject + 1, 0.0);
  for (std::size_t i = 0; i < records.size(); ++i) per_subject[fit.subjects[i]] += fit.score_contributions[i];
  double meat = 0.0;
  for (double u : per_subject) meat += u * u;
  fit.model_se = std::sqrt(meat) / pl.information;
  return fit;
}

SandwichVariance sandwich_variance(const std::array<const CoxFit*, 3>& fits, std::size_t n_subjects) {
  if (n_subjects == 0) throw Error(ErrorCode::InvalidArgument, "no subjects");
  SandwichVariance out;
  out.scores = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_subjects), 3);
  for (int j = 0; j < 3; ++j) {
    const CoxFit* fit = fits[static_cast<std::size_t>(j)];
    if (fit == nullptr || !(fit->information > 0.0) || !std::isfinite(fit->information)) {
      throw Error(ErrorCode::SingularInformation, "transition " + std::to_string(j + 1) + " has no information");
    }
    out.information(j) = fit->information;
    for (std::size_t r = 0; r < fit->subjects.size(); ++r) {
      if (fit->subjects[r] >= n_subjects) throw Error(ErrorCode::InvalidArgument, "subject index out of range");
      out.scores(static_cast<Eigen::Index>(fit->subjects[r]), j) += fit->score_contributions[r];
    }
  }
  const Eigen::Matrix3d cross = out.scores.transpose() * out.scores;
  out.meat = cross / static_cast<double>(n_subjects);
  const Eigen::Vector3d inv = out.information.cwiseInverse();
  out.covariance = inv.asDiagonal() * cross * inv.asDiagonal();
  return out;
}

}  // namespace semicr
