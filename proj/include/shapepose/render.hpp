#pragma once

#include "shapepose/fmp.hpp"
#include "shapepose/image.hpp"

#include <array>
#include <vector>

namespace shapepose {

using Color = std::array<unsigned char, 3>;

/// Red for rank 0 fading to blue for the last of `count` ranks.
Color rank_color(int rank, int count);

void draw_line(RgbImage& img, const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Color& color);
void draw_marker(RgbImage& img, const Eigen::Vector2d& p, int radius, const Color& color);

/// Part markers joined along the tree; poses with shape states also get
/// their silhouette boundaries.
void draw_pose(RgbImage& img, const PoseCandidate& pose, const std::vector<int>& parent, const Color& color);

/// Overlay of ranked candidates on a frame, best drawn last (on top).
RgbImage overlay(const Image& frame, const std::vector<PoseCandidate>& ranked, const std::vector<int>& parent);

}  // namespace shapepose
