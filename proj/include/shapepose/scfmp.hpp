#pragma once

#include "shapepose/chamfer.hpp"
#include "shapepose/edges.hpp"
#include "shapepose/fmp.hpp"
#include "shapepose/hog.hpp"
#include "shapepose/shape.hpp"
#include "shapepose/tree_dp.hpp"

#include <Eigen/Core>

#include <vector>

namespace shapepose {

using Vector5d = Eigen::Matrix<double, 5, 1>;

struct PriorSummary {
  double median = 0;
  double spread = 0;  // median absolute deviation
};

/// Per-part radius, flaring and relative-angle distributions.
struct ShapePriors {
  std::vector<PriorSummary> radius;
  std::vector<PriorSummary> flare;
  std::vector<PriorSummary> alpha;

  int part_count() const { return int(radius.size()); }
  static ShapePriors constant(int parts, double radius, double flare = 0, double alpha = 0);
};

/// Stage-1 FMP plus the shape-consistent stage-2 terms. Stage 2 has
/// its own appearance block; w_ij and the Chamfer weight are indexed by the
/// child part of each edge ([0] unused).
struct ScfmpModel {
  FmpModel fmp;
  Appearance appearance;
  std::vector<Vector5d> shape_weights;
  std::vector<double> chamfer_weights;
  ShapePriors priors;
  double sample_step = 1.0;

  const std::vector<int>& parent() const { return fmp.parent; }
  int part_count() const { return fmp.part_count(); }
  int type_count() const { return fmp.type_count(); }

  static ScfmpModel zeros(std::vector<int> parent, int types, int template_rows, int template_cols);
};

/// A distinct (x, y, level) location of one part in the restricted space.
struct ShapeSite {
  int level = 0;
  int cell_x = 0;
  int cell_y = 0;
  double x = 0;
  double y = 0;
  double r = 1;
  double eta = 0;
};

/// Restricted stage-2 state space. State s of part i is site s / T with
/// type s % T; (site, type) pairs never proposed by stage 1 carry a -inf
/// unary so that every edge message factors as O(N^2 T).
struct StateSpace {
  int type_count = 0;
  std::vector<std::vector<ShapeSite>> sites;  // [part]
  std::vector<Eigen::VectorXd> unary;         // [part][site * T + type]

  int part_count() const { return int(sites.size()); }
  int states(int part) const { return int(unary[part].size()); }
  /// Number of proposed (finite-unary) states of a part.
  int proposed(int part) const;
  /// The state with r, eta bound from the priors and theta left at 0.
  PartState state(int part, int s) const;
};

/// Part state at a location: r = r_hat / level scale, eta = eta_hat, theta 0.
PartState prior_state(const ScfmpModel& model, int part, const PartLocation& loc, double level_scale);

/// theta_child = orient(c_parent - c_child) + alpha_hat_child and
/// theta_parent = orient(c_parent - c_child) + alpha_hat_parent.
void bind_orientations(PartState& child, PartState& parent, double alpha_child, double alpha_parent);

/// Psi and Theta of one edge after orientation binding.
struct PairFeatures {
  Vector5d psi = Vector5d::Zero();
  double theta = 0;
};

/// Binds orientations (input thetas are ignored) and evaluates Psi and, when
/// `with_chamfer`, Theta. Throws DegenerateInput on coincident centers.
PairFeatures pair_features(const ScfmpModel& model, int child, PartState zi, PartState zj,
                           const OrientedDistanceTransform& odt, bool with_chamfer = true);

/// b_ij^{ti,tj} + w_ij . Psi + wbar_ij . Theta for child zi and parent zj.
double score_pair(const ScfmpModel& model, int child, const PartState& zi, const PartState& zj,
                  const OrientedDistanceTransform& odt);

/// Distinct part locations across stage-1 candidates, with cached stage-2
/// unaries w_i^t . Phi + b_i^t. Throws EmptyStateSpace on empty input.
StateSpace build_state_space(const std::vector<PoseCandidate>& stage1, const ScfmpModel& model,
                             const HogPyramid& pyr);

/// Stage-2 score evaluated directly for a pose given by part locations.
double score_shape_pose(const ScfmpModel& model, const PoseCandidate& pose, const HogPyramid& pyr,
                        const OrientedDistanceTransform& odt);

/// Two-way tables over the restricted space with the pairwise site table
/// computed once per edge and reused for every type pair.
TreeTables shape_tables(const StateSpace& space, const ScfmpModel& model, const OrientedDistanceTransform& odt,
                        PairScore* pair_out = nullptr);

/// Exact M-best stage-2 poses over the restricted space, sorted by score.
/// Each part stores theta bound on its parent edge; the root stores the
/// binding of its first child edge.
std::vector<PoseCandidate> infer_m_best_shape(const StateSpace& space, const ScfmpModel& model,
                                              const OrientedDistanceTransform& odt, int m);

struct DetectParams {
  HogParams hog;
  EdgeParams edges;
  int orientation_bins = kDefaultOrientationBins;
  int stage1_m = 500;
  int stage2_m = 80;
  double nms_radius = 4;  // px; 0 gives the exact top-M
};

struct Detection {
  std::vector<PoseCandidate> stage1;
  std::vector<PoseCandidate> stage2;  // stage1_score holds the appearance+deformation score
  bool stage2_fallback = false;       // stage2 copies stage1 when no shape-feasible pose exists
};

/// The full cascade on one image.
Detection detect(const ScfmpModel& model, const Image& img, const DetectParams& params);

}  // namespace shapepose
