#include "shapepose/evalkit.hpp"

#include "shapepose/error.hpp"

#include <algorithm>
#include <fstream>

namespace shapepose {

PckResult pck(const std::vector<Eigen::Vector2d>& pred, const Annotation& gt, double beta) {
  const std::size_t k = gt.keypoints.size();
  if (pred.size() != k) fail(ErrorKind::ArityError, "prediction and ground truth part counts differ");
  if (k == 0) fail(ErrorKind::ArityError, "ground truth has no keypoints");

  Eigen::Vector2d lo = gt.keypoints[0], hi = gt.keypoints[0];
  for (const auto& p : gt.keypoints) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  PckResult r;
  r.beta = beta;
  r.threshold = beta * (hi - lo).maxCoeff();
  int hits = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const bool ok = (pred[i] - gt.keypoints[i]).norm() <= r.threshold;
    r.correct.push_back(ok);
    hits += ok;
  }
  r.fraction = double(hits) / double(k);
  return r;
}

PckResult pck(const PoseCandidate& pred, const Annotation& gt, double beta) {
  std::vector<Eigen::Vector2d> pts;
  for (int i = 0; i < int(pred.parts.size()); ++i) pts.push_back(pred.point(i));
  return pck(pts, gt, beta);
}

PckCurve mean_max_pck_curve(const std::vector<std::vector<PoseCandidate>>& lists, const std::vector<Annotation>& gts,
                            double beta, const std::vector<int>& ms) {
  if (!std::is_sorted(ms.begin(), ms.end())) fail(ErrorKind::ConfigError, "M values must be ascending");
  std::vector<const Annotation*> used;
  for (const auto& g : gts) {
    if (g.frame_index < 0 || g.frame_index >= int(lists.size()))
      fail(ErrorKind::BoundsError, "annotation frame " + std::to_string(g.frame_index) + " has no candidates");
    used.push_back(&g);
  }
  if (used.empty()) fail(ErrorKind::InsufficientData, "no annotated frames");

  // Per-frame PCK of every candidate, computed once.
  std::vector<std::vector<double>> scores;
  for (const auto* g : used) {
    std::vector<double> s;
    for (const auto& c : lists[g->frame_index]) s.push_back(pck(c, *g, beta).fraction);
    scores.push_back(std::move(s));
  }

  PckCurve curve;
  for (int m : ms) {
    if (m < 1) fail(ErrorKind::ConfigError, "M must be at least 1");
    CurvePoint pt;
    pt.m = m;
    for (const auto& s : scores) {
      const int top = std::min<int>(m, int(s.size()));
      if (top < m) curve.clamped = true;
      if (top == 0) continue;  // no candidates: counts as 0
      double sum = 0, best = 0;
      for (int i = 0; i < top; ++i) {
        sum += s[i];
        best = std::max(best, s[i]);
      }
      pt.mean_pck += sum / top;
      pt.max_pck += best;
    }
    pt.mean_pck /= double(scores.size());
    pt.max_pck /= double(scores.size());
    curve.points.push_back(pt);
  }
  return curve;
}

double sequence_pck(const TrackPath& path, const std::vector<Annotation>& gts, double beta) {
  double sum = 0;
  int n = 0;
  for (const auto& g : gts) {
    if (g.frame_index < 0 || g.frame_index >= int(path.poses.size())) continue;
    sum += pck(path.poses[g.frame_index], g, beta).fraction;
    ++n;
  }
  if (n == 0) fail(ErrorKind::InsufficientData, "no annotated frames on the track");
  return sum / n;
}

void write_curve_csv(const std::filesystem::path& path, const PckCurve& curve) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());
  out << "M,meanPCK,maxPCK\n";
  out.precision(10);
  for (const auto& p : curve.points) out << p.m << ',' << p.mean_pck << ',' << p.max_pck << '\n';
}

}  // namespace shapepose
