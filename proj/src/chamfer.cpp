#include "shapepose/chamfer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace shapepose {

double wrap_half_turn(double orientation) {
  constexpr double pi = std::numbers::pi;
  double o = std::fmod(orientation, pi);
  if (o < 0) o += pi;
  if (o >= pi) o = 0;
  return o;
}

int orientation_bin(double orientation, int bins) {
  const int b = int(std::floor(wrap_half_turn(orientation) / (std::numbers::pi / bins)));
  return std::clamp(b, 0, bins - 1);
}

OrientedDistanceTransform oriented_distance_transform(const EdgeMap& edges, int bins) {
  OrientedDistanceTransform odt;
  odt.width = edges.width;
  odt.height = edges.height;
  odt.sentinel = std::hypot(double(edges.width), double(edges.height));

  std::vector<Mask> masks(bins, Mask::Constant(edges.height, edges.width, false));
  std::vector<bool> occupied(bins, false);
  for (const auto& p : edges.points) {
    const int x = std::clamp(int(std::lround(p.x)), 0, edges.width - 1);
    const int y = std::clamp(int(std::lround(p.y)), 0, edges.height - 1);
    const int b = orientation_bin(p.orientation, bins);
    masks[b](y, x) = true;
    occupied[b] = true;
  }
  for (int b = 0; b < bins; ++b)
    odt.fields.push_back(occupied[b] ? euclidean_distance_transform(masks[b])
                                     : Grid::Constant(edges.height, edges.width, odt.sentinel));
  return odt;
}

double chamfer_query(const OrientedDistanceTransform& odt, double x, double y, double orientation) {
  const auto& field = odt.fields[orientation_bin(orientation, odt.bins())];
  x = std::clamp(x, 0.0, double(odt.width - 1));
  y = std::clamp(y, 0.0, double(odt.height - 1));
  const int x0 = std::min(int(x), odt.width - 2 < 0 ? 0 : odt.width - 2);
  const int y0 = std::min(int(y), odt.height - 2 < 0 ? 0 : odt.height - 2);
  const int x1 = std::min(x0 + 1, odt.width - 1), y1 = std::min(y0 + 1, odt.height - 1);
  const double fx = x - x0, fy = y - y0;
  return (1 - fy) * ((1 - fx) * field(y0, x0) + fx * field(y0, x1)) +
         fy * ((1 - fx) * field(y1, x0) + fx * field(y1, x1));
}

}  // namespace shapepose
