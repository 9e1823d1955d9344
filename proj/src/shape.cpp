#include "shapepose/shape.hpp"

#include "shapepose/chamfer.hpp"

namespace shapepose {

double shape_consistency(const ShapeFragment& fragment, const OrientedDistanceTransform& odt) {
  double sum = 0;
  std::size_t n = 0;
  for (const auto* samples : {&fragment.left_samples, &fragment.right_samples})
    for (const auto& s : *samples) {
      sum += chamfer_query(odt, s.point.x(), s.point.y(), s.heading);
      ++n;
    }
  return n ? sum / double(n) : 0.0;
}

double shape_consistency(const PartState& zi, const PartState& zj, const OrientedDistanceTransform& odt,
                         double step) {
  return shape_consistency(fragment_boundary(zi, zj, step, false), odt);
}

}  // namespace shapepose
