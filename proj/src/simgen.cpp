#include "semicr/simgen.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "semicr/csv_io.hpp"
#include "semicr/parallel.hpp"
#include "semicr/rng.hpp"

namespace semicr {

namespace {

const double kE3 = std::exp(-3.0);
const double kKnot = 2.0 * (1.0 - std::exp(-3.0));  // Lambda01(3)

void require_nonnegative(double x, const char* what) {
  if (!(x >= 0.0)) throw Error(ErrorCode::NegativeInput, std::string(what) + " must be >= 0");
}

}  // namespace

void validate(const SimConfig& c) {
  if (c.n == 0) throw Error(ErrorCode::InvalidArgument, "n must be >= 1");
  if (!(c.sigma2 >= 0.0) || !std::isfinite(c.sigma2)) throw Error(ErrorCode::InvalidArgument, "sigma2 must be finite and >= 0");
  for (double b : c.beta) {
    if (!std::isfinite(b)) throw Error(ErrorCode::InvalidArgument, "beta must be finite");
  }
  for (double a : c.alpha) {
    if (!std::isfinite(a)) throw Error(ErrorCode::InvalidArgument, "alpha must be finite");
  }
  if (!(c.censor_lo > 0.0) || !(c.censor_hi > c.censor_lo) || !std::isfinite(c.censor_hi)) {
    throw Error(ErrorCode::InvalidArgument, "censoring window must satisfy 0 < lo < hi < inf");
  }
}

double lambda01_truth(double t) {
  require_nonnegative(t, "t");
  return t <= 3.0 ? 2.0 * std::exp(-t) : 2.0 * kE3;
}

double Lambda01_truth(double t) {
  require_nonnegative(t, "t");
  return t <= 3.0 ? -2.0 * std::expm1(-t) : kKnot + 2.0 * kE3 * (t - 3.0);
}

double Lambda01_inverse(double y) {
  require_nonnegative(y, "y");
  return y <= kKnot ? -std::log1p(-y / 2.0) : 3.0 + (y - kKnot) / (2.0 * kE3);
}

double Lambda03_truth(double t) { return 2.0 * Lambda01_truth(t); }

SimulatedCohort generate(const SimConfig& config, int threads) {
  validate(config);
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<SubjectRecord> records(config.n);
  std::vector<LatentTruth> truth(config.n);

  parallel_for(config.n, threads, [&](std::size_t i) {
    RandomStream rng(config.seed, i);
    const double u1 = rng.uniform();
    const double u2 = rng.uniform();
    const std::array<double, 3> z{u1 + u2 + rng.normal(0.0, 1.0), u1 + u2 + rng.normal(0.0, 1.5),
                                  u1 + u2 + rng.normal(0.0, 1.8)};
    const auto& al = config.alpha;
    const double eta = al[0] + al[1] * z[0] + al[2] * z[1] + al[3] * z[2];
    const int a = rng.uniform() < 1.0 / (1.0 + std::exp(-eta)) ? 1 : 0;
    const double b = config.sigma2 > 0.0 ? rng.normal(0.0, config.sigma2) : 0.0;
    const double r1 = std::exp(config.beta[0] * a + b);
    const double r2 = std::exp(config.beta[1] * a + b);
    const double r3 = std::exp(config.beta[2] * a + b);
    const double p_inf = r2 / (r1 + r2);

    double t1 = inf;
    double t2;
    const double first = Lambda01_inverse(-std::log(u1) / (r1 + r2));
    if (rng.uniform() < p_inf) {
      t2 = first;
    } else {
      t1 = first;
      t2 = Lambda01_inverse(-std::log(u2) / (2.0 * r3) + Lambda01_truth(t1));
    }
    const double c = config.censor_lo + (config.censor_hi - config.censor_lo) * rng.uniform();

    SubjectRecord& s = records[i];
    s.id = std::to_string(i + 1);
    s.x2 = std::min(t2, c);
    s.x1 = std::min(t1, s.x2);
    s.delta1 = t1 <= s.x2 ? 1 : 0;
    s.delta2 = t2 <= c ? 1 : 0;
    s.a = a;
    s.z.assign(z.begin(), z.end());
    truth[i] = {b, t1, t2, c, p_inf};
  });
  return {validate_cohort(std::move(records), {"z1", "z2", "z3"}), std::move(truth)};
}

void write_truth_csv(std::ostream& out, const SimulatedCohort& sim) {
  out << "id,b,t1,t2,c,p_t1_inf\n";
  for (std::size_t i = 0; i < sim.truth.size(); ++i) {
    const auto& t = sim.truth[i];
    out << sim.cohort[i].id << ',' << format_double(t.b) << ',' << format_double(t.t1) << ','
        << format_double(t.t2) << ',' << format_double(t.c) << ',' << format_double(t.p_t1_inf) << '\n';
  }
}

}  // namespace semicr
