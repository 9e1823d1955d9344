#pragma once

#include "shapepose/annotations.hpp"
#include "shapepose/model_io.hpp"
#include "shapepose/scfmp.hpp"
#include "shapepose/svm.hpp"

#include <cstdint>
#include <vector>

namespace shapepose {

struct TrainConfig {
  int type_count = 4;
  int template_rows = 4;  // cells
  int template_cols = 4;
  double svm_c = 0.002;
  int rounds = 3;
  double tolerance = 1e-3;
  int max_epochs = 2000;
  int negatives_per_image = 10;
  int mining_m = 50;  // stage-1 candidates per background when mining stage-2 negatives
  std::uint64_t seed = 1;
  DetectParams detect;
};

/// Offsets of the parameter blocks inside beta. Both stages share the
/// appearance blocks (templates, part biases, pair biases); stage 1 appends
/// the deformation weights, stage 2 the Psi weights and the Chamfer weight.
struct FeatureLayout {
  int parts = 0;
  int types = 0;
  int cells = 0;  // template_rows * template_cols
  bool shape = false;

  FeatureLayout(int parts, int types, int cells, bool shape);
  int template_index(int part, int type) const { return (part * types + type) * cells * 31; }
  int part_bias_index(int part, int type) const;
  int pair_bias_index(int child, int child_type, int parent_type) const;
  int deformation_index(int child, int child_type, int parent_type) const;  // 4 entries
  int shape_index(int child) const;                                         // 5 entries
  int chamfer_index(int child) const;
  int dim() const;
};

FeatureLayout fmp_layout(const FmpModel& model);
FeatureLayout shape_layout(const ScfmpModel& model);

/// Gamma(Z, I) for the stage-1 score; beta . Gamma equals score_pose.
SparseVec fmp_features(const FmpModel& model, const PoseCandidate& pose, const HogPyramid& pyr);
Eigen::VectorXd fmp_parameters(const FmpModel& model);
void set_fmp_parameters(FmpModel& model, const Eigen::VectorXd& beta);
/// Indices of the dx^2 and dy^2 weights.
std::vector<int> fmp_quadratic_indices(const FmpModel& model);

/// Gamma(Z, I) for the stage-2 score; beta . Gamma equals score_shape_pose.
SparseVec shape_features(const ScfmpModel& model, const PoseCandidate& pose, const HogPyramid& pyr,
                         const OrientedDistanceTransform& odt);
Eigen::VectorXd shape_parameters(const ScfmpModel& model);
void set_shape_parameters(ScfmpModel& model, const Eigen::VectorXd& beta);

/// Per-part r, eta and alpha medians with median-absolute-deviation spreads.
/// Radii come from the annotations or, when absent, from the nearest edge
/// (minimum over orientation bins) at each keypoint.
ShapePriors learn_shape_priors(const Dataset& data, const std::vector<int>& parent, const EdgeParams& edges = {});

/// Orientation estimate of part i from annotated keypoints: the mean of the
/// unit vectors toward the parent and away from each child.
double keypoint_orientation(const std::vector<Eigen::Vector2d>& keypoints, const std::vector<int>& parent, int part);

/// k-means with k-means++ seeding; ties go to the lower cluster index.
struct Clustering {
  std::vector<Eigen::Vector2d> centers;
  std::vector<int> assignment;
};
Clustering kmeans(const std::vector<Eigen::Vector2d>& points, int k, std::uint64_t seed, int iterations = 100);

struct MinedNegative {
  PoseCandidate pose;
  SparseVec features;
  double score = 0;
  int image = 0;
};

/// Stage-1 negatives: the top `per_image` poses per background whose score
/// exceeds `threshold`, sorted by score within each image.
std::vector<MinedNegative> mine_fmp_negatives(const FmpModel& model, const std::vector<Image>& backgrounds,
                                              int per_image, const DetectParams& params, double threshold = -1.0);
/// Stage-2 negatives from the full cascade.
std::vector<MinedNegative> mine_shape_negatives(const ScfmpModel& model, const std::vector<Image>& backgrounds,
                                                int per_image, const DetectParams& params, int stage1_m,
                                                double threshold = -1.0);

struct RoundReport {
  int fmp_negatives = 0;
  int shape_negatives = 0;
  SvmResult fmp;
  SvmResult shape;
};

struct TrainReport {
  int positives = 0;
  std::vector<RoundReport> rounds;
};

std::vector<int> chain_parent(int parts);

/// Clusters part types, estimates priors and alternates negative mining with
/// SVM training for `rounds` rounds. Positives are placed at pyramid level 0.
ModelBundle train(const Dataset& data, const std::vector<Image>& backgrounds, const TrainConfig& config,
                  TrainReport* report = nullptr);

}  // namespace shapepose
