#include "shapepose/render.hpp"

#include "shapepose/shape.hpp"

#include <algorithm>
#include <cmath>

namespace shapepose {

Color rank_color(int rank, int count) {
  const double t = count > 1 ? double(rank) / (count - 1) : 0.0;
  return {static_cast<unsigned char>(std::lround(255 * (1 - t))), 0, static_cast<unsigned char>(std::lround(255 * t))};
}

void draw_line(RgbImage& img, const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Color& c) {
  const int steps = std::max(1, int(std::ceil((b - a).lpNorm<Eigen::Infinity>())));
  for (int i = 0; i <= steps; ++i) {
    const Eigen::Vector2d p = a + (b - a) * (double(i) / steps);
    const int x = int(std::lround(p.x())), y = int(std::lround(p.y()));
    if (x >= 0 && y >= 0 && x < img.width && y < img.height) img.set(x, y, c[0], c[1], c[2]);
  }
}

void draw_marker(RgbImage& img, const Eigen::Vector2d& p, int radius, const Color& c) {
  draw_line(img, p - Eigen::Vector2d(radius, 0), p + Eigen::Vector2d(radius, 0), c);
  draw_line(img, p - Eigen::Vector2d(0, radius), p + Eigen::Vector2d(0, radius), c);
}

void draw_pose(RgbImage& img, const PoseCandidate& pose, const std::vector<int>& parent, const Color& c) {
  const int k = int(pose.parts.size());
  for (int i = 1; i < k && i < int(parent.size()); ++i) {
    const int p = parent[i];
    if (pose.has_shape() && (pose.point(i) - pose.point(p)).squaredNorm() > 0) {
      const auto f = fragment_boundary(pose.states[i], pose.states[p], 1.0, false);
      for (const auto* side : {&f.left_samples, &f.right_samples})
        for (std::size_t s = 1; s < side->size(); ++s) draw_line(img, (*side)[s - 1].point, (*side)[s].point, c);
    } else {
      draw_line(img, pose.point(i), pose.point(p), c);
    }
  }
  for (int i = 0; i < k; ++i) draw_marker(img, pose.point(i), i == 0 ? 3 : 2, c);
}

RgbImage overlay(const Image& frame, const std::vector<PoseCandidate>& ranked, const std::vector<int>& parent) {
  RgbImage img = RgbImage::from_gray(frame);
  for (int r = int(ranked.size()) - 1; r >= 0; --r) draw_pose(img, ranked[r], parent, rank_color(r, int(ranked.size())));
  return img;
}

}  // namespace shapepose
