#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "semicr/error.hpp"

namespace semicr {

// One subject's semi-competing observation. x1 = min(T1, T2, C), x2 = min(T2, C).
struct SubjectRecord {
  std::string id;
  double x1 = 0.0;
  double x2 = 0.0;
  int delta1 = 0;
  int delta2 = 0;
  int a = 0;
  std::vector<double> z;
  double weight = 1.0;
};

// The four observable shapes of a semi-competing record.
enum class Scenario {
  NonTerminalThenCensored = 1,  // (i)   delta1 = 1, delta2 = 0
  NonTerminalThenTerminal = 2,  // (ii)  delta1 = 1, delta2 = 1
  TerminalOnly = 3,             // (iii) delta1 = 0, delta2 = 1
  EventFree = 4,                // (iv)  delta1 = 0, delta2 = 0
};

Scenario scenario_of(const SubjectRecord& s) noexcept;

struct ScenarioCounts {
  std::size_t nonterminal_censored = 0;
  std::size_t nonterminal_terminal = 0;
  std::size_t terminal_only = 0;
  std::size_t event_free = 0;

  std::size_t total() const noexcept {
    return nonterminal_censored + nonterminal_terminal + terminal_only + event_free;
  }
};

// Nondecreasing right-continuous step function stored as jump times and increments.
class StepFunction {
 public:
  StepFunction() = default;
  // Throws InvalidArgument unless times are strictly increasing and positive and
  // increments are finite and nonnegative.
  StepFunction(std::vector<double> times, std::vector<double> increments);

  // Sum of increments at times <= t.
  double evaluate(double t) const noexcept;
  // Sum of increments at times < t.
  double left_limit(double t) const noexcept;
  // Increment located exactly at t, zero when t is not a jump time.
  double jump_at(double t) const noexcept;

  StepFunction scaled(double factor) const;

  const std::vector<double>& times() const noexcept { return times_; }
  const std::vector<double>& increments() const noexcept { return increments_; }
  std::size_t size() const noexcept { return times_.size(); }
  bool empty() const noexcept { return times_.empty(); }
  double total() const noexcept { return cumulative_.empty() ? 0.0 : cumulative_.back(); }

 private:
  std::vector<double> times_;
  std::vector<double> increments_;
  std::vector<double> cumulative_;
};

struct ValidationIssue {
  ErrorCode code;
  std::string id;
  std::string detail;
};

class CohortError : public Error {
 public:
  explicit CohortError(std::vector<ValidationIssue> issues);
  const std::vector<ValidationIssue>& issues() const noexcept { return issues_; }

 private:
  std::vector<ValidationIssue> issues_;
};

// Validated, immutable set of subjects. Only validate_cohort and the
// resampling helpers below construct one.
class Cohort {
 public:
  const std::vector<SubjectRecord>& subjects() const noexcept { return subjects_; }
  const SubjectRecord& operator[](std::size_t i) const { return subjects_[i]; }
  std::size_t size() const noexcept { return subjects_.size(); }
  std::size_t covariate_count() const noexcept { return covariate_names_.size(); }
  const std::vector<std::string>& covariate_names() const noexcept { return covariate_names_; }
  const ScenarioCounts& counts() const noexcept { return counts_; }
  // Number of records whose x2 was moved off a delta1 = 1 tie.
  std::size_t jittered() const noexcept { return jittered_; }

  std::vector<double> record_weights() const;

  // Rows picked by index (repeats allowed), e.g. a bootstrap draw.
  Cohort subset(std::span<const std::size_t> rows) const;
  // Same subjects with record weights replaced.
  Cohort reweighted(std::span<const double> weights) const;

 private:
  friend Cohort validate_cohort(std::vector<SubjectRecord>, std::vector<std::string>);
  Cohort() = default;

  std::vector<SubjectRecord> subjects_;
  std::vector<std::string> covariate_names_;
  ScenarioCounts counts_;
  std::size_t jittered_ = 0;
};

// Checks every record invariant and resolves delta1 = 1 ties x1 == x2 by
// moving x2 up by half the smallest positive gap between distinct observed
// times. Throws CohortError listing every offending id.
Cohort validate_cohort(std::vector<SubjectRecord> records,
                       std::vector<std::string> covariate_names = {});

// One row of a transition-specific counting-process data set. The subject is
// at risk on (entry, exit].
struct TransitionRecord {
  std::size_t subject = 0;  // row in the cohort
  double entry = 0.0;
  double exit = 0.0;
  int event = 0;
  double a = 0.0;
  double weight = 1.0;
  double offset = 0.0;
};

// Transition 1: healthy -> non-terminal, 2: healthy -> terminal,
// 3: non-terminal -> terminal (left truncated at x1).
// Empty weights use the record weights; empty offsets mean zero.
std::vector<TransitionRecord> build_transition_data(const Cohort& cohort, int transition,
                                                    std::span<const double> weights = {},
                                                    std::span<const double> offsets = {});

}  // namespace semicr
