#pragma once

#include <vector>

namespace semicr {

// Gauss-Hermite rule for the weight e^{-x^2}: sum_k w_k f(x_k) ~ int f(x) e^{-x^2} dx.
struct GaussHermiteRule {
  std::vector<double> nodes;        // ascending
  std::vector<double> weights;
  std::vector<double> log_weights;  // log(w_k) + x_k^2, the log of the adaptive weight factor
};

// Cached per node count; safe to call from several threads.
const GaussHermiteRule& gauss_hermite(int n);

}  // namespace semicr
