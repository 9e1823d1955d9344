#include "shapepose/distance_transform.hpp"

#include <cmath>
#include <limits>

namespace shapepose {

Grid euclidean_distance_transform(const Mask& sites) {
  const int h = int(sites.rows()), w = int(sites.cols());
  const double inf = std::numeric_limits<double>::infinity();
  Grid sq(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) sq(y, x) = sites(y, x) ? 0.0 : inf;

  std::vector<double> in(std::max(h, w)), out(std::max(h, w));
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) in[y] = sq(y, x);
    squared_distance_1d<double>(std::span(in.data(), h), std::span(out.data(), h));
    for (int y = 0; y < h; ++y) sq(y, x) = out[y];
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) in[x] = sq(y, x);
    squared_distance_1d<double>(std::span(in.data(), w), std::span(out.data(), w));
    for (int x = 0; x < w; ++x) sq(y, x) = out[x];
  }
  return sq.sqrt();
}

void max_quadratic_1d(std::span<const double> f, double lin, double quad, double shift, std::span<double> out,
                      std::span<int> argmax) {
  const int n = int(f.size());
  const int m = int(out.size());

  auto value = [&](int r, int q) {
    const double d = r - q - shift;
    return f[r] + lin * d + quad * d * d;
  };

  if (!(quad < 0)) {
    for (int q = 0; q < m; ++q) {
      int best = 0;
      double best_v = value(0, q);
      for (int r = 1; r < n; ++r)
        if (const double v = value(r, q); v > best_v) {
          best_v = v;
          best = r;
        }
      out[q] = best_v;
      argmax[q] = best;
    }
    return;
  }

  // max_r f[r] + lin*d + quad*d^2 = lin^2/(4a) - min_r [a (r - s)^2 - f[r]]
  // with a = -quad and s = q + shift + lin/(2a): a lower envelope of
  // parabolas centered at the sample positions, queried at real s.
  const double a = -quad;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<int> v(n);
  std::vector<double> z(n + 1);
  auto g = [&](int r) { return -f[r] + a * double(r) * r; };
  int k = 0;
  v[0] = 0;
  z[0] = -inf;
  z[1] = inf;
  for (int r = 1; r < n; ++r) {
    double s = (g(r) - g(v[k])) / (2 * a * (r - v[k]));
    while (s <= z[k]) {
      --k;
      s = (g(r) - g(v[k])) / (2 * a * (r - v[k]));
    }
    ++k;
    v[k] = r;
    z[k] = s;
    z[k + 1] = inf;
  }

  const double offset = shift + lin / (2 * a);
  int j = 0;
  for (int q = 0; q < m; ++q) {
    const double s = q + offset;
    while (z[j + 1] < s) ++j;
    // The envelope picks the optimum; the value is re-evaluated in the
    // original form so callers see the exact objective at the argmax.
    int best = v[j];
    if (j + 1 <= k && z[j + 1] == s && v[j + 1] < best) best = v[j + 1];
    out[q] = value(best, q);
    argmax[q] = best;
  }
}

}  // namespace shapepose
