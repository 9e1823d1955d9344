#pragma once

#include "shapepose/fmp.hpp"

#include <Eigen/Core>

#include <vector>

namespace shapepose {

/// n points at uniform arc length along the body axis.
struct ResampledPose {
  std::vector<Eigen::Vector2d> points;
  double spacing = 0;  // arc length between consecutive samples
};

/// Concatenates the axis bi-arcs of consecutive parts (0-1, 1-2, ...) and
/// samples n points at uniform arc length. Poses without shape states
/// (stage-1 output) use straight segments between part locations.
ResampledPose resample_pose(const PoseCandidate& pose, int n);

/// -sum_k |p_k(a) - p_k(b)|^2 over corresponding samples. With
/// `flip_tolerant` the better of the two point orderings is used.
double pairwise_smoothness(const ResampledPose& a, const ResampledPose& b, bool flip_tolerant = false);
double pairwise_smoothness(const PoseCandidate& a, const PoseCandidate& b, int n, bool flip_tolerant = false);

struct TrackParams {
  double gamma = 0.01;
  int samples = 0;  // 0: 4x the part count
  bool flip_tolerant = false;
};

struct TrackPath {
  std::vector<int> choices;
  std::vector<PoseCandidate> poses;
  double score = 0;
};

/// Exact chain DP maximizing sum_t S(Z_t) + gamma * sum_t S_pair(Z_{t-1}, Z_t)
/// over all T - 1 transitions. Ties go to the smaller candidate index.
TrackPath track(const std::vector<std::vector<PoseCandidate>>& candidates, const TrackParams& params = {});

/// Tracking objective of a fixed choice of candidates.
double track_score(const std::vector<std::vector<PoseCandidate>>& candidates, const std::vector<int>& choices,
                   const TrackParams& params = {});

}  // namespace shapepose
