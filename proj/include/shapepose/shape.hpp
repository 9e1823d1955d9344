#pragma once

#include "shapepose/chamfer.hpp"
#include "shapepose/error.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

namespace shapepose {

struct OrientedDistanceTransform;

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;

/// Wraps an angle into (-pi, pi].
template <typename Scalar>
Scalar wrap_angle(Scalar a) {
  const Scalar two_pi = 2 * std::numbers::pi_v<Scalar>;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi_v<Scalar>) a += two_pi;
  if (a > std::numbers::pi_v<Scalar>) a -= two_pi;
  return a;
}

template <typename Scalar>
Vec2<Scalar> unit(Scalar angle) {
  return {std::cos(angle), std::sin(angle)};
}

/// Full shape state of one part: medial-axis point, local half-width, axis
/// orientation, flaring angle and appearance type.
template <typename Scalar>
struct BasicPartState {
  Scalar x = 0;
  Scalar y = 0;
  Scalar r = 1;
  Scalar theta = 0;
  Scalar eta = 0;
  int type = 0;

  Vec2<Scalar> center() const { return {x, y}; }
};
using PartState = BasicPartState<double>;

template <typename Scalar>
struct OrientedPoint {
  Vec2<Scalar> point;
  Scalar direction = 0;
};

template <typename Scalar>
struct TangentPair {
  OrientedPoint<Scalar> left;
  OrientedPoint<Scalar> right;
};

/// Silhouette tangents of a part: offset r perpendicular to the axis, with
/// directions theta + eta (left) and theta - eta (right).
template <typename Scalar>
TangentPair<Scalar> tangent_points(const BasicPartState<Scalar>& z) {
  const Scalar half = std::numbers::pi_v<Scalar> / 2;
  const Vec2<Scalar> c = z.center();
  return {{c + z.r * unit(z.theta + half), z.theta + z.eta},
          {c + z.r * unit(z.theta - half), z.theta - z.eta}};
}

namespace detail {
template <typename Scalar>
Scalar sinc(Scalar x) {
  return std::abs(x) < Scalar(1e-4) ? 1 - x * x / 6 : std::sin(x) / x;
}
}  // namespace detail

/// Circular arc in intrinsic form. Zero curvature is a straight segment.
template <typename Scalar>
struct Arc {
  Vec2<Scalar> start = Vec2<Scalar>::Zero();
  Scalar heading = 0;
  Scalar curvature = 0;
  Scalar length = 0;

  Vec2<Scalar> point_at(Scalar s) const {
    const Scalar half_turn = curvature * s / 2;
    return start + s * detail::sinc(half_turn) * unit(heading + half_turn);
  }
  Scalar heading_at(Scalar s) const { return heading + curvature * s; }
  Vec2<Scalar> end() const { return point_at(length); }
  Scalar end_heading() const { return heading_at(length); }
  Scalar radius() const { return curvature == 0 ? std::numeric_limits<Scalar>::infinity() : 1 / std::abs(curvature); }
  Vec2<Scalar> center() const {
    const Scalar half = std::numbers::pi_v<Scalar> / 2;
    return start + unit(heading + (curvature > 0 ? half : -half)) * radius();
  }
  Scalar sweep() const { return curvature * length; }

  /// The arc leaving `from` with `heading` that passes through `to`.
  static Arc through(const Vec2<Scalar>& from, Scalar heading, const Vec2<Scalar>& to) {
    const Vec2<Scalar> chord = to - from;
    const Scalar delta = wrap_angle(std::atan2(chord.y(), chord.x()) - heading);
    Arc arc;
    arc.start = from;
    arc.heading = heading;
    arc.length = chord.norm() / detail::sinc(delta);
    arc.curvature = arc.length > 0 ? 2 * delta / arc.length : 0;
    return arc;
  }
};

/// Two G1-joined circular arcs.
template <typename Scalar>
struct Biarc {
  Arc<Scalar> first;
  Arc<Scalar> second;

  Scalar length() const { return first.length + second.length; }
  Vec2<Scalar> junction() const { return second.start; }
  Vec2<Scalar> point_at(Scalar s) const {
    return s <= first.length ? first.point_at(s) : second.point_at(s - first.length);
  }
  Scalar heading_at(Scalar s) const {
    return s <= first.length ? first.heading_at(s) : second.heading_at(s - first.length);
  }
  Biarc reversed() const {
    const Scalar pi = std::numbers::pi_v<Scalar>;
    Biarc r;
    r.first = {second.end(), second.end_heading() + pi, -second.curvature, second.length};
    r.second = {first.end(), first.end_heading() + pi, -first.curvature, first.length};
    return r;
  }
};

/// Symmetric (equal tangent-arm) bi-arc from (p0, t0) to (p1, t1). When the
/// equal-arm solution does not exist or degenerates (parallel tangents facing
/// away from the chord) the junction is taken on the joint circle at the
/// perpendicular bisector of the chord instead. Throws DegenerateInput for
/// p0 == p1.
template <typename Scalar>
Biarc<Scalar> biarc(const Vec2<Scalar>& p0, Scalar t0, const Vec2<Scalar>& p1, Scalar t1) {
  const Vec2<Scalar> v = p1 - p0;
  const Scalar vv = v.squaredNorm();
  if (!(vv > 0)) fail(ErrorKind::DegenerateInput, "bi-arc endpoints coincide");

  const Vec2<Scalar> u0 = unit(t0), u1 = unit(t1);
  const Scalar vt = v.dot(u0 + u1);
  const Scalar a = 2 * (u0.dot(u1) - 1);
  const Scalar root = std::sqrt(std::max(Scalar(0), vt * vt - a * vv));
  Scalar d = vt >= 0 ? vv / (vt + root) : (vt - root) / a;

  Vec2<Scalar> junction;
  if (std::isfinite(d) && d > 0 && d <= Scalar(1e4) * std::sqrt(vv)) {
    junction = ((p0 + d * u0) + (p1 - d * u1)) / 2;
  } else {
    const Scalar phi = wrap_angle(t1 - t0) / 2;  // in (-pi/2, pi/2]
    const Scalar half_chord = std::sqrt(vv) / 2;
    const Vec2<Scalar> normal(-v.y() / (2 * half_chord), v.x() / (2 * half_chord));
    junction = (p0 + p1) / 2 + half_chord * std::tan(-phi / 2) * normal;
  }

  Biarc<Scalar> b;
  b.first = Arc<Scalar>::through(p0, t0, junction);
  b.second = Arc<Scalar>::through(junction, b.first.end_heading(), p1);
  return b;
}

template <typename Scalar>
struct BoundarySample {
  Vec2<Scalar> point;
  Scalar heading = 0;
};

/// Uniform arc-length samples including both endpoints, spacing <= step.
template <typename Scalar>
std::vector<BoundarySample<Scalar>> sample_biarc(const Biarc<Scalar>& b, Scalar step) {
  const Scalar len = b.length();
  const int n = std::max(1, int(std::ceil(len / step - Scalar(1e-9))));
  std::vector<BoundarySample<Scalar>> out;
  out.reserve(n + 1);
  for (int i = 0; i <= n; ++i) {
    const Scalar s = len * i / n;
    out.push_back({b.point_at(s), b.heading_at(s)});
  }
  return out;
}

template <typename Scalar>
struct BasicShapeFragment {
  Biarc<Scalar> left;
  Biarc<Scalar> right;
  Biarc<Scalar> axis;
  std::vector<BoundarySample<Scalar>> left_samples;
  std::vector<BoundarySample<Scalar>> right_samples;
};
using ShapeFragment = BasicShapeFragment<double>;

/// Fragment between two adjacent parts. The bi-arcs are built in the
/// direction the part axes point (from the part "behind" to the one "ahead"),
/// so swapping the arguments yields the same curves traversed in reverse.
template <typename Scalar>
BasicShapeFragment<Scalar> fragment_boundary(const BasicPartState<Scalar>& zi, const BasicPartState<Scalar>& zj,
                                             Scalar step, bool with_axis = true) {
  const Vec2<Scalar> link = zj.center() - zi.center();
  if (!(link.squaredNorm() > 0)) fail(ErrorKind::DegenerateInput, "fragment part centers coincide");

  const bool forward = link.dot(unit(zi.theta) + unit(zj.theta)) >= 0;
  const auto& from = forward ? zi : zj;
  const auto& to = forward ? zj : zi;
  const auto a = tangent_points(from);
  const auto b = tangent_points(to);

  BasicShapeFragment<Scalar> f;
  f.left = biarc(a.left.point, a.left.direction, b.left.point, b.left.direction);
  f.right = biarc(a.right.point, a.right.direction, b.right.point, b.right.direction);
  if (with_axis) f.axis = biarc(from.center(), from.theta, to.center(), to.theta);
  if (!forward) {
    f.left = f.left.reversed();
    f.right = f.right.reversed();
    if (with_axis) f.axis = f.axis.reversed();
  }
  f.left_samples = sample_biarc(f.left, step);
  f.right_samples = sample_biarc(f.right, step);
  return f;
}

/// Relative placement [L/r_i, alpha_i, r_j/r_i, theta_i - theta_j, eta_i - eta_j]
/// with alpha_i the angle of the connecting vector relative to theta_i.
template <typename Scalar>
Eigen::Matrix<Scalar, 5, 1> geometric_descriptor(const BasicPartState<Scalar>& zi, const BasicPartState<Scalar>& zj) {
  const Vec2<Scalar> link = zj.center() - zi.center();
  Eigen::Matrix<Scalar, 5, 1> psi;
  psi << link.norm() / zi.r, wrap_angle(std::atan2(link.y(), link.x()) - zi.theta), zj.r / zi.r,
      wrap_angle(zi.theta - zj.theta), zi.eta - zj.eta;
  return psi;
}

/// Mean oriented Chamfer distance over the left and right boundary samples.
double shape_consistency(const PartState& zi, const PartState& zj, const OrientedDistanceTransform& odt,
                         double step = 1.0);
double shape_consistency(const ShapeFragment& fragment, const OrientedDistanceTransform& odt);

}  // namespace shapepose
