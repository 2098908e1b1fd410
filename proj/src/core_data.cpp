#include "semicr/core_data.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace semicr {

Scenario scenario_of(const SubjectRecord& s) noexcept {
  if (s.delta1 == 1) {
    return s.delta2 == 1 ? Scenario::NonTerminalThenTerminal : Scenario::NonTerminalThenCensored;
  }
  return s.delta2 == 1 ? Scenario::TerminalOnly : Scenario::EventFree;
}

// ---------------------------------------------------------------------------
// StepFunction

StepFunction::StepFunction(std::vector<double> times, std::vector<double> increments)
    : times_(std::move(times)), increments_(std::move(increments)) {
  if (times_.size() != increments_.size()) {
    throw Error(ErrorCode::InvalidArgument, "step function times and increments differ in length");
  }
  cumulative_.resize(times_.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < times_.size(); ++k) {
    if (!std::isfinite(times_[k]) || times_[k] <= 0.0) {
      throw Error(ErrorCode::InvalidArgument, "step function times must be finite and positive");
    }
    if (k > 0 && times_[k] <= times_[k - 1]) {
      throw Error(ErrorCode::InvalidArgument, "step function times must be strictly increasing");
    }
    if (!std::isfinite(increments_[k]) || increments_[k] < 0.0) {
      throw Error(ErrorCode::InvalidArgument, "step function increments must be finite and >= 0");
    }
    acc += increments_[k];
    cumulative_[k] = acc;
  }
}

double StepFunction::evaluate(double t) const noexcept {
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return 0.0;
  return cumulative_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

double StepFunction::left_limit(double t) const noexcept {
  auto it = std::lower_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return 0.0;
  return cumulative_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

double StepFunction::jump_at(double t) const noexcept {
  auto it = std::lower_bound(times_.begin(), times_.end(), t);
  if (it == times_.end() || *it != t) return 0.0;
  return increments_[static_cast<std::size_t>(it - times_.begin())];
}

StepFunction StepFunction::scaled(double factor) const {
  std::vector<double> inc(increments_);
  for (double& v : inc) v *= factor;
  return StepFunction(times_, std::move(inc));
}

// ---------------------------------------------------------------------------
// Cohort

namespace {

std::string describe(const std::vector<ValidationIssue>& issues) {
  std::ostringstream out;
  out << issues.size() << " invalid record(s)";
  const std::size_t shown = std::min<std::size_t>(issues.size(), 5);
  for (std::size_t k = 0; k < shown; ++k) {
    out << (k == 0 ? ": " : "; ") << "id " << issues[k].id << " " << to_string(issues[k].code)
        << " (" << issues[k].detail << ")";
  }
  if (issues.size() > shown) out << "; ...";
  return out.str();
}

ErrorCode first_code(const std::vector<ValidationIssue>& issues) {
  return issues.empty() ? ErrorCode::InvalidArgument : issues.front().code;
}

}  // namespace

CohortError::CohortError(std::vector<ValidationIssue> issues)
    : Error(first_code(issues), describe(issues)), issues_(std::move(issues)) {}

std::vector<double> Cohort::record_weights() const {
  std::vector<double> w(subjects_.size());
  std::transform(subjects_.begin(), subjects_.end(), w.begin(),
                 [](const SubjectRecord& s) { return s.weight; });
  return w;
}

Cohort Cohort::subset(std::span<const std::size_t> rows) const {
  Cohort out;
  out.covariate_names_ = covariate_names_;
  out.subjects_.reserve(rows.size());
  for (std::size_t r : rows) {
    if (r >= subjects_.size()) throw Error(ErrorCode::InvalidArgument, "subset row out of range");
    out.subjects_.push_back(subjects_[r]);
    switch (scenario_of(subjects_[r])) {
      case Scenario::NonTerminalThenCensored: ++out.counts_.nonterminal_censored; break;
      case Scenario::NonTerminalThenTerminal: ++out.counts_.nonterminal_terminal; break;
      case Scenario::TerminalOnly: ++out.counts_.terminal_only; break;
      case Scenario::EventFree: ++out.counts_.event_free; break;
    }
  }
  return out;
}

Cohort Cohort::reweighted(std::span<const double> weights) const {
  if (weights.size() != subjects_.size()) {
    throw Error(ErrorCode::InvalidArgument, "weight vector length differs from cohort size");
  }
  Cohort out(*this);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!std::isfinite(weights[i]) || weights[i] <= 0.0) {
      throw Error(ErrorCode::NonPositiveWeight, "id " + subjects_[i].id);
    }
    out.subjects_[i].weight = weights[i];
  }
  return out;
}

Cohort validate_cohort(std::vector<SubjectRecord> records, std::vector<std::string> covariate_names) {
  if (records.empty()) throw Error(ErrorCode::EmptyCohort, "no subjects");

  const std::size_t p = covariate_names.empty() ? records.front().z.size() : covariate_names.size();
  if (covariate_names.empty()) {
    for (std::size_t j = 0; j < p; ++j) covariate_names.push_back("z" + std::to_string(j + 1));
  }

  std::vector<ValidationIssue> issues;
  auto flag = [&](ErrorCode code, const SubjectRecord& s, std::string detail) {
    issues.push_back({code, s.id, std::move(detail)});
  };

  std::unordered_set<std::string> seen;
  for (const auto& s : records) {
    if (!seen.insert(s.id).second) flag(ErrorCode::DuplicateId, s, "id repeated");
    if (!std::isfinite(s.x1) || !std::isfinite(s.x2)) {
      flag(ErrorCode::NonFiniteValue, s, "x1/x2 not finite");
      continue;
    }
    if (s.x1 <= 0.0 || s.x2 <= 0.0) {
      flag(ErrorCode::NonPositiveTime, s, "x1 and x2 must be > 0");
      continue;
    }
    if ((s.delta1 != 0 && s.delta1 != 1) || (s.delta2 != 0 && s.delta2 != 1) ||
        (s.a != 0 && s.a != 1)) {
      flag(ErrorCode::InvalidIndicator, s, "delta1, delta2 and a must be 0 or 1");
      continue;
    }
    if (s.x1 > s.x2) {
      flag(ErrorCode::OrderViolation, s, "x1 > x2");
      continue;
    }
    if (s.delta1 == 0 && s.x1 != s.x2) {
      flag(ErrorCode::InconsistentIndicators, s, "delta1 = 0 requires x1 == x2");
      continue;
    }
    if (s.z.size() != p) {
      flag(ErrorCode::SchemaError, s, "expected " + std::to_string(p) + " covariates");
      continue;
    }
    if (std::any_of(s.z.begin(), s.z.end(), [](double v) { return !std::isfinite(v); })) {
      flag(ErrorCode::NonFiniteValue, s, "covariate not finite");
      continue;
    }
    if (!std::isfinite(s.weight)) {
      flag(ErrorCode::NonFiniteValue, s, "weight not finite");
      continue;
    }
    if (s.weight <= 0.0) flag(ErrorCode::NonPositiveWeight, s, "weight must be > 0");
  }
  if (!issues.empty()) throw CohortError(std::move(issues));

  Cohort cohort;
  cohort.covariate_names_ = std::move(covariate_names);

  // Tie resolution for an illness and death observed at the same instant.
  const bool any_tie = std::any_of(records.begin(), records.end(), [](const SubjectRecord& s) {
    return s.delta1 == 1 && s.x1 == s.x2;
  });
  if (any_tie) {
    std::vector<double> times;
    times.reserve(2 * records.size());
    for (const auto& s : records) {
      times.push_back(s.x1);
      times.push_back(s.x2);
    }
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < times.size(); ++k) gap = std::min(gap, times[k] - times[k - 1]);
    if (!std::isfinite(gap)) gap = times.front();  // a single distinct time
    for (auto& s : records) {
      if (s.delta1 == 1 && s.x1 == s.x2) {
        s.x2 += 0.5 * gap;
        ++cohort.jittered_;
      }
    }
  }

  for (const auto& s : records) {
    switch (scenario_of(s)) {
      case Scenario::NonTerminalThenCensored: ++cohort.counts_.nonterminal_censored; break;
      case Scenario::NonTerminalThenTerminal: ++cohort.counts_.nonterminal_terminal; break;
      case Scenario::TerminalOnly: ++cohort.counts_.terminal_only; break;
      case Scenario::EventFree: ++cohort.counts_.event_free; break;
    }
  }
  cohort.subjects_ = std::move(records);
  return cohort;
}

// ---------------------------------------------------------------------------
// Transition data

std::vector<TransitionRecord> build_transition_data(const Cohort& cohort, int transition,
                                                    std::span<const double> weights,
                                                    std::span<const double> offsets) {
  if (transition < 1 || transition > 3) {
    throw Error(ErrorCode::UnknownTransition, "transition must be 1, 2 or 3, got " +
                                                  std::to_string(transition));
  }
  const std::size_t n = cohort.size();
  if (!weights.empty() && weights.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "weight vector length differs from cohort size");
  }
  if (!offsets.empty() && offsets.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "offset vector length differs from cohort size");
  }

  std::vector<TransitionRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = cohort[i];
    TransitionRecord r;
    r.subject = i;
    r.a = static_cast<double>(s.a);
    r.weight = weights.empty() ? s.weight : weights[i];
    r.offset = offsets.empty() ? 0.0 : offsets[i];
    switch (transition) {
      case 1:
        r.entry = 0.0;
        r.exit = s.x1;
        r.event = s.delta1;
        break;
      case 2:
        r.entry = 0.0;
        r.exit = s.x1;
        r.event = s.delta2 * (1 - s.delta1);
        break;
      default:
        if (s.delta1 != 1) continue;
        r.entry = s.x1;
        r.exit = s.x2;
        r.event = s.delta2;
        break;
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace semicr
