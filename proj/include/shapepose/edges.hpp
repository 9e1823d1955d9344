#pragma once

#include "shapepose/image.hpp"

#include <vector>

namespace shapepose {

struct EdgePoint {
  double x = 0;
  double y = 0;
  double orientation = 0;  // tangent direction in [0, pi)
  double magnitude = 0;
};

struct EdgeMap {
  int width = 0;
  int height = 0;
  std::vector<EdgePoint> points;
};

struct EdgeParams {
  double low = 0.04;
  double high = 0.08;
  double sigma = 1.0;  // Gaussian pre-smoothing; 0 disables it
};

/// Centered-difference gradients, non-maximum suppression along the gradient
/// direction and hysteresis between `low` and `high` on gradient magnitude.
EdgeMap detect_edges(const Image& img, double low, double high, double sigma = 0.0);
inline EdgeMap detect_edges(const Image& img, const EdgeParams& p) {
  return detect_edges(img, p.low, p.high, p.sigma);
}

Image gaussian_blur(const Image& img, double sigma);

/// Renders edge points white on black, for debugging.
Image edge_image(const EdgeMap& edges);

}  // namespace shapepose
