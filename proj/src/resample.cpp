#include "semicr/resample.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ostream>
#include <thread>

#include "semicr/csv_io.hpp"
#include "semicr/parallel.hpp"
#include "semicr/risk.hpp"

namespace semicr {

int default_threads() {
  if (const char* env = std::getenv("SEMICR_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) return static_cast<int>(v);
  }
  return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

void validate(const BootstrapPlan& plan) {
  if (plan.replicates < 1) throw Error(ErrorCode::InvalidArgument, "replicates must be >= 1");
  if (!(plan.max_failure_fraction >= 0.0 && plan.max_failure_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "max_failure_fraction must be in [0, 1]");
  }
}

std::vector<std::size_t> bootstrap_rows(std::size_t n, std::uint64_t seed, std::size_t index) {
  RandomStream rng(seed, index);
  std::vector<std::size_t> rows(n);
  for (auto& r : rows) r = static_cast<std::size_t>(rng.below(n));
  return rows;
}

std::vector<double> normalized_exponential_weights(std::span<const double> u) {
  if (u.empty()) throw Error(ErrorCode::InvalidArgument, "no exponential draws");
  double total = 0.0;
  for (double x : u) {
    if (!(x > 0.0) || !std::isfinite(x)) throw Error(ErrorCode::InvalidArgument, "draws must be positive and finite");
    total += x;
  }
  const double mean = total / static_cast<double>(u.size());
  std::vector<double> w(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) w[i] = u[i] / mean;
  return w;
}

std::vector<double> bayesian_weights(std::size_t n, std::uint64_t seed, std::size_t index) {
  RandomStream rng(seed, index);
  std::vector<double> u(n);
  for (auto& x : u) x = rng.exponential();
  return normalized_exponential_weights(u);
}

namespace {

Cohort with_boot_weights(const Cohort& cohort, std::span<const double> boot) {
  std::vector<double> w = cohort.record_weights();
  for (std::size_t i = 0; i < w.size(); ++i) w[i] *= boot[i];
  return cohort.reweighted(w);
}

}  // namespace

std::vector<double> bayesian_replicate(const Cohort& cohort, std::span<const double> boot_weights,
                                       const WeightFunction& weights, const Estimator& estimator) {
  if (boot_weights.size() != cohort.size()) throw Error(ErrorCode::InvalidArgument, "one weight per subject required");
  const Cohort rep = with_boot_weights(cohort, boot_weights);
  return estimator(rep, weights(rep));
}

BootstrapResult bootstrap(const Cohort& cohort, const BootstrapPlan& plan, const WeightFunction& weights,
                          const Estimator& estimator) {
  validate(plan);
  const std::size_t n = cohort.size();
  BootstrapResult out;
  const std::vector<double> point_weights = weights(cohort);
  try {
    out.estimate = estimator(cohort, point_weights);
  } catch (const Error& e) {
    const std::string what = e.what();
    const std::size_t prefix = to_string(e.code()).size() + 2;  // "<code>: "
    throw Error(e.code(), "estimator failed on the full cohort: " + what.substr(std::min(prefix, what.size())));
  }

  out.replicates.resize(plan.replicates);
  out.failures.resize(plan.replicates);
  parallel_for(plan.replicates, plan.threads, [&](std::size_t r) {
    try {
      if (plan.mode == BootstrapMode::Standard) {
        const auto rows = bootstrap_rows(n, plan.seed, r);
        const Cohort rep = cohort.subset(rows);
        std::vector<double> w;
        if (plan.refit_propensity) {
          w = weights(rep);
        } else {
          w.resize(n);
          for (std::size_t i = 0; i < n; ++i) w[i] = point_weights[rows[i]];
        }
        out.replicates[r] = estimator(rep, w);
      } else {
        const auto boot = bayesian_weights(n, plan.seed, r);
        if (plan.refit_propensity) {
          out.replicates[r] = bayesian_replicate(cohort, boot, weights, estimator);
        } else {
          const Cohort rep = with_boot_weights(cohort, boot);
          std::vector<double> w(n);
          for (std::size_t i = 0; i < n; ++i) w[i] = point_weights[i] * boot[i];
          out.replicates[r] = estimator(rep, w);
        }
      }
      if (out.replicates[r].size() != out.estimate.size()) {
        throw Error(ErrorCode::InvalidArgument, "estimator returned a different number of components");
      }
    } catch (const std::exception& e) {
      out.replicates[r].clear();
      out.failures[r] = e.what();
      if (out.failures[r].empty()) out.failures[r] = "failed";
    }
  });

  for (const auto& f : out.failures) out.failed += f.empty() ? 0 : 1;
  if (static_cast<double>(out.failed) > plan.max_failure_fraction * static_cast<double>(plan.replicates)) {
    std::string first;
    for (const auto& f : out.failures) {
      if (!f.empty()) {
        first = f;
        break;
      }
    }
    throw Error(ErrorCode::TooManyFailures, std::to_string(out.failed) + " of " + std::to_string(plan.replicates) +
                                                " replicates failed; first: " + first);
  }

  const std::size_t p = out.estimate.size();
  out.se.assign(p, std::nan(""));
  out.percentile_lo.assign(p, std::nan(""));
  out.percentile_hi.assign(p, std::nan(""));
  out.normal_lo.assign(p, std::nan(""));
  out.normal_hi.assign(p, std::nan(""));
  for (std::size_t k = 0; k < p; ++k) {
    std::vector<double> v;
    for (const auto& row : out.replicates) {
      if (!row.empty() && std::isfinite(row[k])) v.push_back(row[k]);
    }
    if (v.empty()) continue;
    // Sorting first makes the sums independent of replicate order.
    std::sort(v.begin(), v.end());
    // Deviations from the first value keep a constant sample at exactly zero spread.
    const double shift = v.front();
    double mean = 0.0;
    for (double x : v) mean += x - shift;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - shift - mean) * (x - shift - mean);
    out.se[k] = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    out.percentile_lo[k] = quantile(v, 0.025);
    out.percentile_hi[k] = quantile(v, 0.975);
    out.normal_lo[k] = out.estimate[k] - 1.96 * out.se[k];
    out.normal_hi[k] = out.estimate[k] + 1.96 * out.se[k];
  }
  return out;
}

void write_replicates_csv(std::ostream& out, const BootstrapResult& result, std::span<const std::string> names) {
  out << "replicate,status";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (std::size_t r = 0; r < result.replicates.size(); ++r) {
    const bool ok = result.failures[r].empty();
    out << r << ',' << (ok ? "ok" : "failed");
    for (std::size_t k = 0; k < names.size(); ++k) {
      out << ',' << (ok && k < result.replicates[r].size() ? format_double(result.replicates[r][k]) : std::string("NA"));
    }
    out << '\n';
  }
}

}  // namespace semicr
