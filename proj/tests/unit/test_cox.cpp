#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "semicr/cox.hpp"

using namespace semicr;

namespace {

TransitionRecord tr(std::size_t id, double entry, double exit, int event, double a, double w = 1.0, double off = 0.0) {
  return {id, entry, exit, event, a, w, off};
}

std::vector<TransitionRecord> toy6() {
  return {tr(0, 0, 1.0, 1, 1), tr(1, 0, 2.0, 1, 0), tr(2, 0, 3.0, 0, 1),
          tr(3, 0, 4.0, 1, 1), tr(4, 0, 5.0, 1, 0), tr(5, 0, 6.0, 0, 0)};
}

// Brute-force score residuals at beta.
std::vector<double> residual_oracle(const std::vector<TransitionRecord>& rs, double beta) {
  std::vector<double> u(rs.size(), 0.0);
  for (const auto& ev : rs) {
    if (!ev.event) continue;
    double s0 = 0.0, s1 = 0.0;
    for (const auto& r : rs) {
      if (r.entry < ev.exit && ev.exit <= r.exit) {
        const double e = r.weight * std::exp(beta * r.a + r.offset);
        s0 += e;
        s1 += e * r.a;
      }
    }
    const double ebar = s1 / s0;
    for (std::size_t i = 0; i < rs.size(); ++i) {
      const auto& r = rs[i];
      if (&r == &ev) u[i] += r.weight * (r.a - ebar);
      if (r.entry < ev.exit && ev.exit <= r.exit) {
        u[i] -= r.weight * std::exp(beta * r.a + r.offset) * (r.a - ebar) * ev.weight / s0;
      }
    }
  }
  return u;
}

std::vector<TransitionRecord> random_records(std::mt19937_64& gen, int n, bool truncate, bool ties) {
  std::uniform_real_distribution<double> unif(0.1, 3.0);
  std::bernoulli_distribution coin(0.5);
  std::vector<TransitionRecord> rs;
  for (int i = 0; i < n; ++i) {
    double exit = unif(gen);
    if (ties) exit = std::round(exit * 2.0) / 2.0 + 0.5;
    const double entry = truncate && coin(gen) ? exit * 0.4 : 0.0;
    rs.push_back(tr(static_cast<std::size_t>(i), entry, exit, coin(gen) ? 1 : 0, coin(gen) ? 1.0 : 0.0,
                    0.5 + unif(gen), 0.3 * (unif(gen) - 1.5)));
  }
  // Guarantee both arms carry events.
  rs[0].event = 1;
  rs[0].a = 1.0;
  rs[1].event = 1;
  rs[1].a = 0.0;
  return rs;
}

}  // namespace

TEST_CASE("n = 6 toy: Newton-Raphson agrees with the grid maximiser") {
  const auto rs = toy6();
  const CoxFit fit = fit_weighted_cox(rs);
  const double grid = oracle::grid_argmax([&](double b) { return oracle::cox_loglik(rs, b); }, -5, 5);
  CHECK(std::abs(fit.beta - grid) <= 1e-4);
  CHECK(fit.loglik == doctest::Approx(oracle::cox_loglik(rs, fit.beta)).epsilon(1e-12));
  CHECK(std::abs(fit.score) <= 1e-8);
}

TEST_CASE("random small cohorts with weights, offsets, ties and truncation match the oracle") {
  std::mt19937_64 gen(42);
  int checked = 0;
  for (int rep = 0; rep < 40; ++rep) {
    const int n = 5 + rep % 4;  // n <= 8
    const auto rs = random_records(gen, n, rep % 2 == 0, rep % 3 == 0);
    CoxFit fit;
    try {
      fit = fit_weighted_cox(rs);
    } catch (const Error& e) {
      // Monotone likelihood is legitimate on tiny random data.
      CHECK(e.code() == ErrorCode::MonotoneLikelihood);
      continue;
    }
    const double grid = oracle::grid_argmax([&](double b) { return oracle::cox_loglik(rs, b); }, -12, 12);
    CHECK(std::abs(fit.beta - grid) <= 1e-4);
    const auto pl = partial_likelihood(rs, 0.37);
    CHECK(pl.loglik == doctest::Approx(oracle::cox_loglik(rs, 0.37)).epsilon(1e-12));
    const double h = 1e-5;
    const double num_score = (oracle::cox_loglik(rs, 0.37 + h) - oracle::cox_loglik(rs, 0.37 - h)) / (2 * h);
    const double num_info = -(oracle::cox_loglik(rs, 0.37 + h) - 2 * oracle::cox_loglik(rs, 0.37) +
                              oracle::cox_loglik(rs, 0.37 - h)) / (h * h);
    CHECK(pl.score == doctest::Approx(num_score).epsilon(1e-6));
    CHECK(pl.information == doctest::Approx(num_info).epsilon(1e-3));

    const auto u = score_residuals(rs, 0.37);
    const auto uo = residual_oracle(rs, 0.37);
    double total = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      CHECK(u[i] == doctest::Approx(uo[i]).epsilon(1e-10).scale(1.0));
      total += u[i];
    }
    CHECK(total == doctest::Approx(pl.score).epsilon(1e-10).scale(1.0));
    ++checked;
  }
  CHECK(checked >= 20);
}

TEST_CASE("antisymmetry, offset absorption and weight invariances") {
  std::mt19937_64 gen(7);
  const auto rs = random_records(gen, 60, true, true);
  const CoxFit base = fit_weighted_cox(rs);

  auto swapped = rs;
  for (auto& r : swapped) r.a = 1.0 - r.a;
  CHECK(fit_weighted_cox(swapped).beta == doctest::Approx(-base.beta).epsilon(1e-9));

  auto shifted = rs;
  for (auto& r : shifted) r.offset += 0.7;
  const CoxFit sh = fit_weighted_cox(shifted);
  CHECK(sh.beta == doctest::Approx(base.beta).epsilon(1e-9));
  for (std::size_t k = 0; k < base.baseline.size(); ++k) {
    CHECK(sh.baseline.increments()[k] == doctest::Approx(base.baseline.increments()[k] * std::exp(-0.7)).epsilon(1e-9));
  }

  auto scaled = rs;
  for (auto& r : scaled) r.weight *= 3.5;
  const CoxFit sc = fit_weighted_cox(scaled);
  CHECK(sc.beta == doctest::Approx(base.beta).epsilon(1e-9));
  CHECK(sc.baseline.evaluate(2.0) == doctest::Approx(base.baseline.evaluate(2.0)).epsilon(1e-12));

  std::vector<TransitionRecord> dup;
  for (auto r : rs) {
    r.weight *= 0.5;
    dup.push_back(r);
    dup.push_back(r);
  }
  const CoxFit d = fit_weighted_cox(dup);
  CHECK(d.beta == doctest::Approx(base.beta).epsilon(1e-9));
  CHECK(d.information == doctest::Approx(base.information).epsilon(1e-9));

  double score_sum = 0.0;
  for (double u : base.score_contributions) score_sum += u;
  CHECK(std::abs(score_sum) <= 1e-8);

  // Breslow increments times S0 recover the event weight.
  double recovered = 0.0;
  for (std::size_t k = 0; k < base.s0.size(); ++k) recovered += base.baseline.increments()[k] * base.s0[k];
  CHECK(recovered == doctest::Approx(base.event_weight).epsilon(1e-12));
}

TEST_CASE("Breslow baseline arithmetic") {
  // Nelson-Aalen at beta = 0.
  const auto rs = toy6();
  const auto na = breslow_baseline(rs, 0.0);
  REQUIRE(na.size() == 4);
  CHECK(na.increments()[0] == doctest::Approx(1.0 / 6.0));
  CHECK(na.increments()[1] == doctest::Approx(1.0 / 5.0));
  CHECK(na.increments()[2] == doctest::Approx(1.0 / 3.0));
  CHECK(na.increments()[3] == doctest::Approx(1.0 / 2.0));

  const std::vector<TransitionRecord> three{tr(0, 0, 1, 1, 0, 2.0), tr(1, 0, 2, 0, 0, 1.0), tr(2, 0, 3, 0, 1, 1.0)};
  const auto b = breslow_baseline(three, 0.0);
  REQUIRE(b.size() == 1);
  CHECK(b.increments()[0] == doctest::Approx(0.5));

  const std::vector<TransitionRecord> none{tr(0, 0, 1, 0, 0), tr(1, 0, 2, 0, 1)};
  CHECK(breslow_baseline(none, 0.3).empty());
  try {
    fit_weighted_cox(none);
    FAIL("expected NoEvents");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoEvents);
  }
}

TEST_CASE("entry is exclusive and exit inclusive") {
  // Subject 1 enters exactly at the event time of subject 0: not at risk.
  const std::vector<TransitionRecord> rs{tr(0, 0, 1.0, 1, 1), tr(1, 1.0, 2.0, 1, 0), tr(2, 0, 2.0, 0, 0)};
  const auto b = breslow_baseline(rs, 0.0);
  CHECK(b.increments()[0] == doctest::Approx(1.0 / 2.0));  // at risk: 0 and 2
  CHECK(b.increments()[1] == doctest::Approx(1.0 / 2.0));  // at risk: 1 and 2
}

TEST_CASE("degenerate and monotone likelihoods") {
  const std::vector<TransitionRecord> all_treated{tr(0, 0, 1, 1, 1), tr(1, 0, 2, 1, 1), tr(2, 0, 3, 0, 1)};
  try {
    fit_weighted_cox(all_treated);
    FAIL("expected DegenerateCovariate");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateCovariate);
  }
  // Every event is a treated subject that fails first.
  const std::vector<TransitionRecord> mono{tr(0, 0, 1, 1, 1), tr(1, 0, 2, 1, 1), tr(2, 0, 3, 0, 0), tr(3, 0, 4, 0, 0)};
  try {
    fit_weighted_cox(mono);
    FAIL("expected MonotoneLikelihood");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MonotoneLikelihood);
  }
}

TEST_CASE("monotone likelihood is reported even when the score underflows first") {
  // Left-truncated records where every event is the largest exposure in its
  // risk set; Newton reaches a vanishing score near beta = 25.
  const std::vector<TransitionRecord> rs{
      tr(0, 0.00612574, 0.13537, 1, 0, 1.23054, 0.296136),   tr(1, 0.00214559, 0.111784, 1, 1, 0.559779, 0.491647),
      tr(2, 0.000429404, 0.126196, 1, 1, 1.24992, 0.348171), tr(3, 0.272953, 0.433144, 0, 0, 2.32373, -0.366015),
      tr(4, 0.158121, 0.248649, 1, 1, 1.52829, 0.034493),    tr(5, 0.158683, 0.260858, 1, 0, 0.701162, -0.286892)};
  try {
    fit_weighted_cox(rs);
    FAIL("expected MonotoneLikelihood");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MonotoneLikelihood);
    CHECK(std::string(e.what()).find("+inf") != std::string::npos);
  }
  // The reflected exposure diverges the other way.
  auto flipped = rs;
  for (auto& r : flipped) r.a = 1.0 - r.a;
  try {
    fit_weighted_cox(flipped);
    FAIL("expected MonotoneLikelihood");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("-inf") != std::string::npos);
  }
}

TEST_CASE("sandwich variance: diagonal matches the single-fit robust SE") {
  std::mt19937_64 gen(11);
  std::vector<CoxFit> fits;
  for (int j = 0; j < 3; ++j) fits.push_back(fit_weighted_cox(random_records(gen, 40, j == 2, false)));
  const auto sv = sandwich_variance({&fits[0], &fits[1], &fits[2]}, 40);
  for (int j = 0; j < 3; ++j) {
    CHECK(std::sqrt(sv.covariance(j, j)) == doctest::Approx(fits[static_cast<std::size_t>(j)].model_se).epsilon(1e-10));
    CHECK(sv.information(j) == doctest::Approx(fits[static_cast<std::size_t>(j)].information));
  }
  CHECK(sv.covariance(0, 1) == doctest::Approx(sv.covariance(1, 0)));

  // Subjects absent from a transition contribute a zero score there.
  auto partial = random_records(gen, 40, false, false);
  partial.resize(25);
  const CoxFit third = fit_weighted_cox(partial);
  const auto sv2 = sandwich_variance({&fits[0], &fits[1], &third}, 40);
  for (int i = 25; i < 40; ++i) CHECK(sv2.scores(i, 2) == 0.0);
}
