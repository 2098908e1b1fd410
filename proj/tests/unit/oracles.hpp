#pragma once
// Independent brute-force reference computations used as test oracles.

#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

#include "semicr/core_data.hpp"
#include "semicr/frailty_em.hpp"

namespace oracle {

// Weighted Breslow partial log-likelihood by direct double loop.
inline double cox_loglik(std::span<const semicr::TransitionRecord> recs, double beta) {
  double ll = 0.0;
  for (const auto& ev : recs) {
    if (!ev.event) continue;
    double s0 = 0.0;
    for (const auto& r : recs) {
      if (r.entry < ev.exit && ev.exit <= r.exit) s0 += r.weight * std::exp(beta * r.a + r.offset);
    }
    ll += ev.weight * (beta * ev.a + ev.offset - std::log(s0));
  }
  return ll;
}

// Maximiser of f on [lo, hi]: a 2001-point grid, then three 401-point grids
// on shrinking windows around the incumbent (final spacing ~ 5e-9 per unit).
inline double grid_argmax(const std::function<double(double)>& f, double lo, double hi) {
  double step = (hi - lo) / 2000.0;
  double best = lo, best_val = -INFINITY;
  for (int j = 0; j <= 2000; ++j) {
    const double b = lo + j * step;
    if (const double v = f(b); v > best_val) best_val = v, best = b;
  }
  for (int level = 0; level < 3; ++level) {
    const double from = best - 2.0 * step;
    step /= 100.0;
    for (int j = 0; j <= 400; ++j) {
      const double b = from + j * step;
      if (const double v = f(b); v > best_val) best_val = v, best = b;
    }
  }
  return best;
}

struct Moments {
  double z = 0.0;  // integral of L_c(b) phi(b)
  double m1 = 0.0;
  double m2 = 0.0;
  double me = 0.0;
};

// Trapezoid rule over b in [-half_width, half_width] for
// exp(constant + k b - H e^b) phi(b; 0, sigma2).
inline Moments dense_posterior(const semicr::SubjectKernel& k, double sigma2, double half_width = 10.0,
                               int nodes = 20001) {
  const double lo = -half_width, hi = half_width, h = (hi - lo) / (nodes - 1);
  // Log-scale shift for stability.
  double shift = -INFINITY;
  std::vector<double> logf(nodes);
  for (int j = 0; j < nodes; ++j) {
    const double b = lo + j * h;
    logf[j] = k.events * b - k.hazard * std::exp(b) - 0.5 * b * b / sigma2 -
              0.5 * std::log(2 * std::numbers::pi * sigma2);
    shift = std::max(shift, logf[j]);
  }
  Moments m;
  for (int j = 0; j < nodes; ++j) {
    const double b = lo + j * h;
    const double w = (j == 0 || j == nodes - 1 ? 0.5 : 1.0) * h * std::exp(logf[j] - shift);
    m.z += w;
    m.m1 += w * b;
    m.m2 += w * b * b;
    m.me += w * std::exp(b);
  }
  m.m1 /= m.z;
  m.m2 /= m.z;
  m.me /= m.z;
  m.z = std::log(m.z) + shift + k.constant;  // log marginal
  return m;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1e-300, std::abs(b)); }

}  // namespace oracle
