#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstdint>
#include <vector>

namespace shapepose {

using SparseVec = Eigen::SparseVector<double>;

struct SvmExample {
  SparseVec features;  // Gamma(Z, I)
  int label = 1;       // +1 positive, -1 negative
};

/// min 1/2 |beta|^2 + C sum_n xi_n  s.t.  y_n beta . Gamma_n >= 1 - xi_n and
/// beta_j <= upper_bound for every j in `bounded` (no bias term, one slack
/// per example).
struct SvmProblem {
  int dim = 0;
  std::vector<SvmExample> examples;
  double c = 0.002;
  std::vector<int> bounded;
  double upper_bound = -1e-3;
};

struct SvmResult {
  Eigen::VectorXd beta;
  Eigen::VectorXd alpha;      // dual variables, in [0, C]
  double primal = 0;
  double dual = 0;
  int epochs = 0;
  bool converged = false;
  std::vector<double> history;  // dual objective in minimization form, per epoch
};

double svm_primal(const SvmProblem& problem, const Eigen::VectorXd& beta);

/// Dual coordinate descent over the example multipliers, alternating with an
/// exact step on the multipliers of the bound constraints (which clamps the
/// bounded weights). Stops when primal - dual <= tolerance * max(1, primal)
/// or after `iterations` epochs. Throws InsufficientData without both labels.
SvmResult train_structural_svm(const SvmProblem& problem, int iterations, double tolerance,
                               std::uint64_t seed = 1);

}  // namespace shapepose
