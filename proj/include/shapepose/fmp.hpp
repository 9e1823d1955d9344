#pragma once

#include "shapepose/distance_transform.hpp"
#include "shapepose/hog.hpp"
#include "shapepose/shape.hpp"
#include "shapepose/tree_dp.hpp"

#include <Eigen/Core>

#include <limits>
#include <vector>

namespace shapepose {

/// Mixture-of-templates appearance terms shared by both inference stages:
/// HoG templates w_i^t, part-type biases b_i^t and pair-type biases
/// b_ij^{t_i,t_j} (indexed by the child part of each edge).
struct Appearance {
  int part_count = 0;
  int type_count = 0;
  int template_rows = 0;  // in cells
  int template_cols = 0;
  std::vector<Eigen::MatrixXd> templates;  // [part * T + type], (rows*cols) x 31
  Eigen::MatrixXd part_bias;               // K x T
  std::vector<Eigen::MatrixXd> pair_bias;  // [child part]: T x T (child type, parent type); [0] is empty

  static Appearance zeros(int parts, int types, int template_rows, int template_cols);

  const Eigen::MatrixXd& weights(int part, int type) const { return templates[std::size_t(part) * type_count + type]; }
  Eigen::MatrixXd& weights(int part, int type) { return templates[std::size_t(part) * type_count + type]; }
};

/// Baseline flexible-mixture-of-parts model. Edges are (i, parent[i]) for
/// i > 0; parents precede children.
struct FmpModel {
  std::vector<int> parent;
  Appearance appearance;
  std::vector<std::vector<Eigen::Vector2i>> anchor;       // [child][child type]: rest offset (dx, dy) in cells
  std::vector<std::vector<Eigen::Vector4d>> deformation;  // [child][tc * T + tp]: weights on [dx, dy, dx^2, dy^2]

  int part_count() const { return int(parent.size()); }
  int type_count() const { return appearance.type_count; }
  const Eigen::Vector4d& deformation_weights(int child, int child_type, int parent_type) const {
    return deformation[child][std::size_t(child_type) * type_count() + parent_type];
  }

  static FmpModel zeros(std::vector<int> parent, int types, int template_rows, int template_cols);
};

/// A part placement: template anchor cell at a pyramid level plus the part
/// center mapped back to image pixels.
struct PartLocation {
  int cell_x = 0;
  int cell_y = 0;
  int level = 0;
  int type = 0;
  double x = 0;
  double y = 0;
};

/// A scored full-body configuration. `states` is filled only by the shape
/// stage; stage-1 candidates carry locations alone.
struct PoseCandidate {
  int level = 0;
  std::vector<PartLocation> parts;
  std::vector<PartState> states;
  double score = 0;
  double stage1_score = std::numeric_limits<double>::quiet_NaN();

  bool has_shape() const { return !states.empty(); }
  Eigen::Vector2d point(int part) const {
    return has_shape() ? Eigen::Vector2d(states[part].x, states[part].y) : Eigen::Vector2d(parts[part].x, parts[part].y);
  }
};

/// Unary maps w_i^t . Phi + b_i^t for one pyramid level, over all template
/// anchor positions (grid rows x cols).
struct LevelResponse {
  double scale = 1.0;
  int cell_size = 4;
  int template_rows = 0;
  int template_cols = 0;
  std::vector<std::vector<Grid>> unary;  // [part][type]

  int rows() const { return int(unary.front().front().rows()); }
  int cols() const { return int(unary.front().front().cols()); }
};

struct FmpResponses {
  std::vector<LevelResponse> levels;
};

/// Image-pixel center of a template anchored at (cell_x, cell_y).
Eigen::Vector2d cell_to_pixel(int cell_x, int cell_y, double scale, int cell_size, int template_rows,
                              int template_cols);
/// Inverse of cell_to_pixel rounded to the nearest anchor (not clamped).
Eigen::Vector2i pixel_to_cell(const Eigen::Vector2d& p, double scale, int cell_size, int template_rows,
                              int template_cols);

/// w_i^t . Phi(z, I) for the template window anchored at (cx, cy).
double template_response(const Eigen::MatrixXd& weights, const HogLevel& level, int cx, int cy, int template_rows,
                         int template_cols);
/// w_i^t . Phi + b_i^t. Throws BoundsError when the window leaves the level.
double appearance_score(const Appearance& app, const HogLevel& level, int part, int type, int cx, int cy);

/// [dx, dy, dx^2, dy^2] of the child anchor relative to parent + anchor offset.
Eigen::Vector4d deformation_feature(const FmpModel& model, int child, int child_type, const Eigen::Vector2i& child_cell,
                                    const Eigen::Vector2i& parent_cell);
double pair_score(const FmpModel& model, int child, int child_type, int parent_type, const Eigen::Vector2i& child_cell,
                  const Eigen::Vector2i& parent_cell);

/// Stage-1 objective evaluated directly from pyramid features.
double score_pose(const FmpModel& model, const PoseCandidate& pose, const HogPyramid& pyr);
/// Same objective with unaries read from precomputed response maps.
double score_pose(const FmpModel& model, const PoseCandidate& pose, const FmpResponses& responses);

FmpResponses compute_responses(const FmpModel& model, const HogPyramid& pyr);

/// Two-way tables for one level. States are flattened as
/// (cell_y * cols + cell_x) * T + type, so index order is (y, x, type).
/// Messages use separable quadratic max-convolutions (distance transforms).
TreeTables fmp_tables(const FmpModel& model, const LevelResponse& level);
PairScore fmp_pair_score(const FmpModel& model, const LevelResponse& level);

PoseCandidate infer_best(const FmpModel& model, const FmpResponses& responses);
PoseCandidate infer_best(const FmpModel& model, const HogPyramid& pyr);

/// M-best poses. nms_radius == 0: the exact top-M configurations. nms_radius
/// > 0: union of the best configurations through every state of every part,
/// deduplicated, with a pose suppressed when its root part lies strictly
/// closer than nms_radius pixels to the root of a higher-scored kept pose.
std::vector<PoseCandidate> infer_m_best(const FmpModel& model, const FmpResponses& responses, int m,
                                        double nms_radius);
std::vector<PoseCandidate> infer_m_best(const FmpModel& model, const HogPyramid& pyr, int m, double nms_radius);

/// Builds a candidate from flattened per-part states of one level.
PoseCandidate make_candidate(const FmpModel& model, const LevelResponse& level, int level_index,
                             const std::vector<int>& states, double score);

}  // namespace shapepose
