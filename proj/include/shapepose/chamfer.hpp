#pragma once

#include "shapepose/distance_transform.hpp"
#include "shapepose/edges.hpp"

#include <vector>

namespace shapepose {

inline constexpr int kDefaultOrientationBins = 8;

/// Per-orientation-bin nearest-edge distance fields. Bin b holds edges with
/// tangent orientation in [b*pi/B, (b+1)*pi/B). Empty bins are filled with
/// `sentinel` (the image diagonal).
struct OrientedDistanceTransform {
  int width = 0;
  int height = 0;
  double sentinel = 0;
  std::vector<Grid> fields;

  int bins() const { return int(fields.size()); }
};

/// Hard orientation binning after wrapping into [0, pi).
int orientation_bin(double orientation, int bins);
double wrap_half_turn(double orientation);

OrientedDistanceTransform oriented_distance_transform(const EdgeMap& edges,
                                                      int bins = kDefaultOrientationBins);

/// Bilinear lookup in the bin containing `orientation`. Out-of-bounds
/// coordinates are clamped to the border.
double chamfer_query(const OrientedDistanceTransform& odt, double x, double y, double orientation);

}  // namespace shapepose
