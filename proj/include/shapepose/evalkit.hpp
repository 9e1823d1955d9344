#pragma once

#include "shapepose/annotations.hpp"
#include "shapepose/fmp.hpp"
#include "shapepose/tracking.hpp"

#include <filesystem>
#include <vector>

namespace shapepose {

inline constexpr double kDefaultPckBeta = 0.1;

struct PckResult {
  double beta = kDefaultPckBeta;
  double threshold = 0;  // beta * max(h, w) of the ground-truth keypoint box
  std::vector<bool> correct;
  double fraction = 0;
};

/// Part k is correct iff |pred_k - gt_k| <= beta * max(h, w) (inclusive).
PckResult pck(const PoseCandidate& pred, const Annotation& gt, double beta = kDefaultPckBeta);
PckResult pck(const std::vector<Eigen::Vector2d>& pred, const Annotation& gt, double beta = kDefaultPckBeta);

struct CurvePoint {
  int m = 0;
  double mean_pck = 0;
  double max_pck = 0;
};

struct PckCurve {
  std::vector<CurvePoint> points;
  bool clamped = false;  // some M exceeded a frame's candidate count
};

/// candidate_lists[f] are the ranked candidates of frame f; each annotation
/// refers to its frame by frame_index. Frames without annotation are skipped.
PckCurve mean_max_pck_curve(const std::vector<std::vector<PoseCandidate>>& candidate_lists,
                            const std::vector<Annotation>& gts, double beta, const std::vector<int>& ms);

/// Mean PCK of the tracked poses over the annotated frames.
double sequence_pck(const TrackPath& path, const std::vector<Annotation>& gts, double beta = kDefaultPckBeta);

/// CSV with header `M,meanPCK,maxPCK`.
void write_curve_csv(const std::filesystem::path& path, const PckCurve& curve);

}  // namespace shapepose
