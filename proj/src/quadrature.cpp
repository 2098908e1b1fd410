#include "semicr/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "semicr/error.hpp"

namespace semicr {

namespace {

// Golub-Welsch for starting values, then Newton polishing on the orthonormal
// Hermite recurrence, which also yields weights with full relative accuracy.
GaussHermiteRule build_rule(int n) {
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(0.5 * k);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);

  GaussHermiteRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  rule.log_weights.resize(static_cast<std::size_t>(n));
  const double pim4 = std::pow(std::numbers::pi, -0.25);
  for (int k = 0; k < n; ++k) {
    double z = eig.eigenvalues()(k);
    double deriv = 0.0;
    for (int it = 0; it < 20; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt(static_cast<double>(j - 1) / j) * p3;
      }
      deriv = std::sqrt(2.0 * n) * p2;
      const double dz = p1 / deriv;
      z -= dz;
      if (std::abs(dz) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    const auto i = static_cast<std::size_t>(k);
    rule.nodes[i] = z;
    rule.weights[i] = 2.0 / (deriv * deriv);
    rule.log_weights[i] = std::log(rule.weights[i]) + z * z;
  }
  return rule;
}

}  // namespace

const GaussHermiteRule& gauss_hermite(int n) {
  if (n < 1 || n > 200) throw Error(ErrorCode::InvalidArgument, "Gauss-Hermite node count must be in [1, 200]");
  static std::mutex mutex;
  static std::map<int, GaussHermiteRule> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build_rule(n)).first;
  return it->second;
}

}  // namespace semicr
