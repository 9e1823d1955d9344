#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <limits>
#include <span>
#include <vector>

namespace shapepose {

using Grid = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Exact squared Euclidean distance of a sampled function, 1D lower envelope
/// of parabolas: out[q] = min_r (q - r)^2 + f[r].
template <typename Scalar>
void squared_distance_1d(std::span<const Scalar> f, std::span<Scalar> out) {
  const int n = int(f.size());
  const Scalar inf = std::numeric_limits<Scalar>::infinity();
  std::vector<int> v(n);
  std::vector<Scalar> z(n + 1);
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == inf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -inf;
      z[1] = inf;
      continue;
    }
    auto meet = [&](int r) {
      return ((f[q] + Scalar(q) * q) - (f[r] + Scalar(r) * r)) / (2 * Scalar(q - r));
    };
    Scalar s = meet(v[k]);
    while (s <= z[k]) s = meet(v[--k]);
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  if (k < 0) {
    std::fill(out.begin(), out.end(), inf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const Scalar d = Scalar(q - v[j]);
    out[q] = d * d + f[v[j]];
  }
}

/// Exact Euclidean distance from every grid cell to the nearest `true` cell.
/// Cells are +inf when the mask is empty.
Grid euclidean_distance_transform(const Mask& sites);

/// 1D max-convolution with a quadratic kernel:
///   out[q] = max_r f[r] + lin * d + quad * d^2,  d = r - q - shift,
/// for q in [0, out.size()). Uses the lower-envelope algorithm when quad < 0
/// and falls back to exhaustive search otherwise. Ties keep the smallest r.
void max_quadratic_1d(std::span<const double> f, double lin, double quad, double shift,
                      std::span<double> out, std::span<int> argmax);

}  // namespace shapepose
