#include "shapepose/svm.hpp"

#include "shapepose/error.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace shapepose {

double svm_primal(const SvmProblem& p, const Eigen::VectorXd& beta) {
  double loss = 0;
  for (const auto& e : p.examples) loss += std::max(0.0, 1.0 - e.label * e.features.dot(beta));
  return 0.5 * beta.squaredNorm() + p.c * loss;
}

SvmResult train_structural_svm(const SvmProblem& p, int iterations, double tolerance, std::uint64_t seed) {
  const bool has_pos = std::any_of(p.examples.begin(), p.examples.end(), [](const auto& e) { return e.label > 0; });
  const bool has_neg = std::any_of(p.examples.begin(), p.examples.end(), [](const auto& e) { return e.label < 0; });
  if (!has_pos || !has_neg) fail(ErrorKind::InsufficientData, "training needs positive and negative examples");
  if (!(p.c > 0)) fail(ErrorKind::ConfigError, "C must be positive");
  for (const auto& e : p.examples)
    if (e.features.size() != p.dim) fail(ErrorKind::DimensionMismatch, "feature vector length differs from the problem");

  const int n = int(p.examples.size());
  SvmResult r;
  r.alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(p.dim);  // sum_n alpha_n y_n Gamma_n
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(p.dim);  // bound multipliers; beta = v - mu
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p.dim);
  std::vector<double> q(n);
  for (int i = 0; i < n; ++i) q[i] = p.examples[i].features.squaredNorm();

  auto bound_step = [&] {
    for (int j : p.bounded) {
      mu(j) = std::max(0.0, v(j) - p.upper_bound);
      beta(j) = v(j) - mu(j);
    }
  };
  auto dual_value = [&] {
    // Maximization form: sum alpha - 1/2 |beta|^2 - upper_bound * sum mu.
    double s = r.alpha.sum() - 0.5 * beta.squaredNorm();
    for (int j : p.bounded) s -= p.upper_bound * mu(j);
    return s;
  };

  bound_step();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  for (r.epochs = 1; r.epochs <= iterations; ++r.epochs) {
    std::shuffle(order.begin(), order.end(), rng);
    for (int i : order) {
      if (q[i] <= 0) {
        r.alpha(i) = p.c;  // constant loss 1; any alpha is optimal, C matches the hinge subgradient
        continue;
      }
      const auto& e = p.examples[i];
      const double g = e.label * e.features.dot(beta) - 1.0;
      const double a = std::clamp(r.alpha(i) - g / q[i], 0.0, p.c);
      const double d = a - r.alpha(i);
      if (d != 0) {
        for (SparseVec::InnerIterator it(e.features); it; ++it) {
          v(it.index()) += d * e.label * it.value();
          beta(it.index()) += d * e.label * it.value();
        }
        r.alpha(i) = a;
      }
    }
    bound_step();
    r.dual = dual_value();
    r.primal = svm_primal(p, beta);
    r.history.push_back(-r.dual);
    if (r.primal - r.dual <= tolerance * std::max(1.0, r.primal)) {
      r.converged = true;
      break;
    }
  }
  r.epochs = std::min(r.epochs, iterations);
  r.beta = beta;
  return r;
}

}  // namespace shapepose
