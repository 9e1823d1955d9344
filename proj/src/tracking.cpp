#include "shapepose/tracking.hpp"

#include "shapepose/error.hpp"
#include "shapepose/shape.hpp"

#include <cmath>
#include <limits>

namespace shapepose {

namespace {

// Piecewise axis curve: each piece maps a local arc length to a point.
struct AxisPiece {
  double length = 0;
  bool curved = false;
  Biarc<double> arc;
  Eigen::Vector2d a, b;

  Eigen::Vector2d at(double s) const {
    if (curved) return arc.point_at(s);
    return length > 0 ? Eigen::Vector2d(a + (b - a) * (s / length)) : a;
  }
};

int default_samples(const PoseCandidate& pose, int n) { return n > 0 ? n : 4 * int(pose.parts.size()); }

}  // namespace

ResampledPose resample_pose(const PoseCandidate& pose, int n) {
  const int k = int(pose.parts.size());
  if (k < 1) fail(ErrorKind::ArityError, "pose has no parts");
  if (n < 2) fail(ErrorKind::ConfigError, "resampling needs at least 2 points");

  std::vector<AxisPiece> pieces;
  double total = 0;
  for (int i = 0; i + 1 < k; ++i) {
    AxisPiece piece;
    piece.a = pose.point(i);
    piece.b = pose.point(i + 1);
    if ((piece.b - piece.a).squaredNorm() > 0 && pose.has_shape()) {
      piece.curved = true;
      piece.arc = fragment_boundary(pose.states[i], pose.states[i + 1], 1.0).axis;
      piece.length = piece.arc.length();
    } else {
      piece.length = (piece.b - piece.a).norm();
    }
    total += piece.length;
    pieces.push_back(piece);
  }

  ResampledPose out;
  out.spacing = total / (n - 1);
  out.points.reserve(n);
  std::size_t idx = 0;
  double offset = 0;  // arc length at the start of pieces[idx]
  for (int j = 0; j < n; ++j) {
    if (pieces.empty()) {
      out.points.push_back(pose.point(0));
      continue;
    }
    const double s = j == n - 1 ? total : total * j / (n - 1);
    while (idx + 1 < pieces.size() && s > offset + pieces[idx].length) offset += pieces[idx++].length;
    out.points.push_back(pieces[idx].at(std::clamp(s - offset, 0.0, pieces[idx].length)));
  }
  return out;
}

double pairwise_smoothness(const ResampledPose& a, const ResampledPose& b, bool flip_tolerant) {
  if (a.points.size() != b.points.size()) fail(ErrorKind::DimensionMismatch, "resampled point counts differ");
  const std::size_t n = a.points.size();
  double direct = 0, flipped = 0;
  for (std::size_t k = 0; k < n; ++k) {
    direct += (a.points[k] - b.points[k]).squaredNorm();
    if (flip_tolerant) flipped += (a.points[k] - b.points[n - 1 - k]).squaredNorm();
  }
  return -(flip_tolerant ? std::min(direct, flipped) : direct);
}

double pairwise_smoothness(const PoseCandidate& a, const PoseCandidate& b, int n, bool flip_tolerant) {
  return pairwise_smoothness(resample_pose(a, n), resample_pose(b, n), flip_tolerant);
}

TrackPath track(const std::vector<std::vector<PoseCandidate>>& candidates, const TrackParams& params) {
  if (candidates.empty()) fail(ErrorKind::EmptySequence, "no frames to track");
  for (std::size_t t = 0; t < candidates.size(); ++t)
    if (candidates[t].empty()) fail(ErrorKind::EmptyFrame, "frame " + std::to_string(t) + " has no candidates");
  if (params.gamma < 0) fail(ErrorKind::ConfigError, "gamma must be non-negative");

  const int frames = int(candidates.size());
  const int n = default_samples(candidates[0][0], params.samples);
  std::vector<std::vector<ResampledPose>> resampled(frames);
  if (params.gamma > 0)
    for (int t = 0; t < frames; ++t)
      for (const auto& c : candidates[t]) resampled[t].push_back(resample_pose(c, n));

  std::vector<std::vector<double>> value(frames);
  std::vector<std::vector<int>> back(frames);
  for (const auto& c : candidates[0]) value[0].push_back(c.score);
  for (int t = 1; t < frames; ++t) {
    const int m = int(candidates[t].size());
    value[t].assign(m, -std::numeric_limits<double>::infinity());
    back[t].assign(m, 0);
    for (int j = 0; j < m; ++j) {
      for (int i = 0; i < int(candidates[t - 1].size()); ++i) {
        double v = value[t - 1][i];
        if (params.gamma > 0)
          v += params.gamma * pairwise_smoothness(resampled[t - 1][i], resampled[t][j], params.flip_tolerant);
        if (v > value[t][j]) {
          value[t][j] = v;
          back[t][j] = i;
        }
      }
      value[t][j] += candidates[t][j].score;
    }
  }

  TrackPath path;
  path.choices.assign(frames, 0);
  int best = 0;
  for (int j = 1; j < int(value[frames - 1].size()); ++j)
    if (value[frames - 1][j] > value[frames - 1][best]) best = j;
  for (int t = frames - 1; t >= 0; --t) {
    path.choices[t] = best;
    if (t > 0) best = back[t][best];
  }
  for (int t = 0; t < frames; ++t) path.poses.push_back(candidates[t][path.choices[t]]);
  path.score = track_score(candidates, path.choices, params);
  return path;
}

double track_score(const std::vector<std::vector<PoseCandidate>>& candidates, const std::vector<int>& choices,
                   const TrackParams& params) {
  if (choices.size() != candidates.size()) fail(ErrorKind::DimensionMismatch, "one choice per frame required");
  double s = 0;
  for (std::size_t t = 0; t < candidates.size(); ++t) {
    const auto& c = candidates[t].at(choices[t]);
    s += c.score;
    if (t > 0 && params.gamma > 0) {
      const int n = default_samples(c, params.samples);
      s += params.gamma * pairwise_smoothness(candidates[t - 1].at(choices[t - 1]), c, n, params.flip_tolerant);
    }
  }
  return s;
}

}  // namespace shapepose
