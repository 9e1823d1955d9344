#include "shapepose/edges.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace shapepose {

Image gaussian_blur(const Image& img, double sigma) {
  if (sigma <= 0) return img;
  const int radius = std::max(1, int(std::ceil(3 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double total = 0;
  for (int k = -radius; k <= radius; ++k) total += kernel[k + radius] = std::exp(-0.5 * k * k / (sigma * sigma));
  for (auto& k : kernel) k /= total;

  const int h = int(img.rows()), w = int(img.cols());
  Image tmp(h, w), out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int k = -radius; k <= radius; ++k) acc += kernel[k + radius] * img(y, std::clamp(x + k, 0, w - 1));
      tmp(y, x) = acc;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int k = -radius; k <= radius; ++k) acc += kernel[k + radius] * tmp(std::clamp(y + k, 0, h - 1), x);
      out(y, x) = acc;
    }
  return out;
}

EdgeMap detect_edges(const Image& input, double low, double high, double sigma) {
  const Image img = gaussian_blur(input, sigma);
  const int h = int(img.rows()), w = int(img.cols());
  EdgeMap edges;
  edges.width = w;
  edges.height = h;

  Image gx = Image::Zero(h, w), gy = Image::Zero(h, w), mag = Image::Zero(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      gx(y, x) = (img(y, std::min(x + 1, w - 1)) - img(y, std::max(x - 1, 0))) / 2;
      gy(y, x) = (img(std::min(y + 1, h - 1), x) - img(std::max(y - 1, 0), x)) / 2;
      mag(y, x) = std::hypot(gx(y, x), gy(y, x));
    }

  // Non-maximum suppression along the gradient direction quantized to 4
  // neighbor axes. A pixel survives when strictly above the pixel behind it
  // and not below the pixel ahead of it, so plateaus of width 2 keep one pixel.
  constexpr double pi = std::numbers::pi;
  Eigen::Array<unsigned char, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> state =
      decltype(state)::Zero(h, w);  // 0 none, 1 weak, 2 strong
  for (int y = 1; y < h - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      const double m = mag(y, x);
      if (m < low || m == 0) continue;
      double a = std::atan2(gy(y, x), gx(y, x));
      if (a < 0) a += pi;
      int dx, dy;
      if (a < pi / 8 || a >= 7 * pi / 8) {
        dx = 1, dy = 0;
      } else if (a < 3 * pi / 8) {
        dx = 1, dy = 1;
      } else if (a < 5 * pi / 8) {
        dx = 0, dy = 1;
      } else {
        dx = -1, dy = 1;
      }
      if (m > mag(y - dy, x - dx) && m >= mag(y + dy, x + dx)) state(y, x) = m >= high ? 2 : 1;
    }
  }

  // Hysteresis: keep weak pixels 8-connected to a strong one.
  std::vector<std::pair<int, int>> stack;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> keep = decltype(keep)::Constant(h, w, false);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (state(y, x) == 2) {
        keep(y, x) = true;
        stack.emplace_back(x, y);
      }
  while (!stack.empty()) {
    auto [x, y] = stack.back();
    stack.pop_back();
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = x + dx, ny = y + dy;
        if (nx < 0 || ny < 0 || nx >= w || ny >= h || keep(ny, nx) || state(ny, nx) != 1) continue;
        keep(ny, nx) = true;
        stack.emplace_back(nx, ny);
      }
  }

  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!keep(y, x)) continue;
      double tangent = std::atan2(gy(y, x), gx(y, x)) + pi / 2;
      tangent = std::fmod(tangent, pi);
      if (tangent < 0) tangent += pi;
      if (tangent >= pi) tangent = 0;
      edges.points.push_back({double(x), double(y), tangent, mag(y, x)});
    }
  return edges;
}

Image edge_image(const EdgeMap& edges) {
  Image img = Image::Zero(edges.height, edges.width);
  for (const auto& p : edges.points) img(int(p.y), int(p.x)) = 1.0;
  return img;
}

}  // namespace shapepose
