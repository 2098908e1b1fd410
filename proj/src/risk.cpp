#include "semicr/risk.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "semicr/csv_io.hpp"

namespace semicr {

std::string_view to_string(RiskKind kind) {
  switch (kind) {
    case RiskKind::F1: return "f1";
    case RiskKind::F2: return "f2";
    case RiskKind::F12: return "f12";
  }
  return "f1";
}

RiskKind parse_risk_kind(std::string_view text) {
  if (text == "f1" || text == "F1") return RiskKind::F1;
  if (text == "f2" || text == "F2") return RiskKind::F2;
  if (text == "f12" || text == "F12") return RiskKind::F12;
  throw Error(ErrorCode::InvalidArgument, "unknown risk kind '" + std::string(text) + "' (f1, f2, f12)");
}

namespace {

void check_grid(std::span<const double> grid) {
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!std::isfinite(grid[k]) || grid[k] < 0.0) throw Error(ErrorCode::InvalidArgument, "grid must be finite and >= 0");
    if (k > 0 && grid[k] < grid[k - 1]) throw Error(ErrorCode::InvalidArgument, "grid must be nondecreasing");
  }
}

}  // namespace

std::vector<double> survival_values(const TransitionParameters& params, int a, double b,
                                    std::span<const double> grid) {
  check_grid(grid);
  const double r1 = std::exp(params.beta[0] * a + b);
  const double r2 = std::exp(params.beta[1] * a + b);
  std::vector<double> out(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    out[k] = std::exp(-r1 * params.baseline[0].evaluate(grid[k]) - r2 * params.baseline[1].evaluate(grid[k]));
  }
  return out;
}

std::vector<double> cif_values(const TransitionParameters& params, RiskKind kind, int a, double b,
                               std::span<const double> grid, double t1) {
  check_grid(grid);
  std::vector<double> out(grid.size());

  if (kind == RiskKind::F12) {
    if (!grid.empty() && grid.front() < t1) {
      throw Error(ErrorCode::GridBeforeT1, "grid starts before t1 = " + format_double(t1));
    }
    const double r3 = std::exp(params.beta[2] * a + b);
    const double base = params.baseline[2].evaluate(t1);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      out[k] = -std::expm1(-r3 * (params.baseline[2].evaluate(grid[k]) - base));
    }
    return out;
  }

  const double r1 = std::exp(params.beta[0] * a + b);
  const double r2 = std::exp(params.beta[1] * a + b);
  const auto& l1 = params.baseline[0];
  const auto& l2 = params.baseline[1];

  std::vector<double> jumps(l1.times());
  jumps.insert(jumps.end(), l2.times().begin(), l2.times().end());
  std::sort(jumps.begin(), jumps.end());
  jumps.erase(std::unique(jumps.begin(), jumps.end()), jumps.end());

  double surv = 1.0, f1 = 0.0, f2 = 0.0;
  std::size_t next = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    while (next < jumps.size() && jumps[next] <= grid[k]) {
      const double u = jumps[next++];
      const double x1 = r1 * l1.jump_at(u);
      const double x2 = r2 * l2.jump_at(u);
      const double x = x1 + x2;
      if (x <= 0.0) continue;
      const double mass = surv * -std::expm1(-x);
      f1 += mass * (x1 / x);
      f2 += mass * (x2 / x);
      surv *= std::exp(-x);
    }
    out[k] = kind == RiskKind::F1 ? f1 : f2;
  }
  return out;
}

RiskCurve make_risk_curve(const TransitionParameters& params, RiskKind kind, double b,
                          std::span<const double> grid, double t1) {
  RiskCurve curve;
  curve.kind = kind;
  curve.t1 = t1;
  curve.b = b;
  curve.grid.assign(grid.begin(), grid.end());
  curve.a0 = cif_values(params, kind, 0, b, grid, t1);
  curve.a1 = cif_values(params, kind, 1, b, grid, t1);
  return curve;
}

ContrastSeries make_contrast(RiskCurve curve) {
  ContrastSeries s;
  s.rd.resize(curve.grid.size());
  s.rr.resize(curve.grid.size());
  for (std::size_t k = 0; k < curve.grid.size(); ++k) {
    s.rd[k] = curve.a1[k] - curve.a0[k];
    if (curve.a0[k] > 0.0) s.rr[k] = curve.a1[k] / curve.a0[k];
  }
  s.curve = std::move(curve);
  return s;
}

void write_contrast_csv(std::ostream& out, std::span<const ContrastSeries> series) {
  out << "t,kind,a0,a1,rd,rr,lo,hi\n";
  for (const auto& s : series) {
    const bool bounds = s.lo.size() == s.curve.grid.size() && s.hi.size() == s.curve.grid.size();
    for (std::size_t k = 0; k < s.curve.grid.size(); ++k) {
      out << format_double(s.curve.grid[k]) << ',' << to_string(s.curve.kind) << ',' << format_double(s.curve.a0[k])
          << ',' << format_double(s.curve.a1[k]) << ',' << format_double(s.rd[k]) << ','
          << (s.rr[k] ? format_double(*s.rr[k]) : std::string("NA")) << ','
          << (bounds ? format_double(s.lo[k]) : std::string("NA")) << ','
          << (bounds ? format_double(s.hi[k]) : std::string("NA")) << '\n';
    }
  }
}

double quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * std::clamp(prob, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<double> default_grid(const Cohort& cohort, RiskKind kind, double t1) {
  std::vector<double> x2;
  std::vector<double> events;
  for (const auto& s : cohort.subjects()) {
    x2.push_back(s.x2);
    if (kind == RiskKind::F1 && s.delta1 == 1) events.push_back(s.x1);
    if (kind == RiskKind::F2 && s.delta1 == 0 && s.delta2 == 1) events.push_back(s.x2);
    if (kind == RiskKind::F12 && s.delta1 == 1 && s.delta2 == 1) events.push_back(s.x2);
  }
  const double upper = quantile(x2, 0.95);
  std::vector<double> grid;
  if (kind == RiskKind::F12) grid.push_back(t1);
  std::sort(events.begin(), events.end());
  events.erase(std::unique(events.begin(), events.end()), events.end());
  for (double t : events) {
    if (t > upper) break;
    if (kind == RiskKind::F12 && t <= t1) continue;
    grid.push_back(t);
  }
  return grid;
}

double default_t1(const Cohort& cohort) {
  std::vector<double> x1;
  for (const auto& s : cohort.subjects()) {
    if (s.delta1 == 1) x1.push_back(s.x1);
  }
  if (x1.empty()) throw Error(ErrorCode::NoEvents, "no non-terminal events to place t1");
  return quantile(std::move(x1), 0.5);
}

}  // namespace semicr
