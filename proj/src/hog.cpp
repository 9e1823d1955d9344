#include "shapepose/hog.hpp"

#include "shapepose/error.hpp"

#include <Eigen/SparseCore>

#include <algorithm>
#include <array>
#include <cmath>

namespace shapepose {

namespace {

// Area-averaging resampling weights from n input samples to m output samples.
Eigen::SparseMatrix<double, Eigen::RowMajor> area_weights(int n, int m) {
  std::vector<Eigen::Triplet<double>> triplets;
  const double ratio = double(n) / m;
  for (int i = 0; i < m; ++i) {
    const double lo = i * ratio, hi = (i + 1) * ratio;
    for (int j = int(std::floor(lo)); j < int(std::ceil(hi)) && j < n; ++j) {
      const double overlap = std::min(hi, j + 1.0) - std::max(lo, double(j));
      if (overlap > 0) triplets.emplace_back(i, j, overlap / ratio);
    }
  }
  Eigen::SparseMatrix<double, Eigen::RowMajor> w(m, n);
  w.setFromTriplets(triplets.begin(), triplets.end());
  return w;
}

// Unit vectors of the 9 unsigned orientation bins over [0, pi).
const std::array<std::pair<double, double>, 9>& orientation_units() {
  static const auto units = [] {
    std::array<std::pair<double, double>, 9> u{};
    for (int o = 0; o < 9; ++o) u[o] = {std::cos(o * M_PI / 9), std::sin(o * M_PI / 9)};
    return u;
  }();
  return units;
}

}  // namespace

Image resize_image(const Image& img, double scale) {
  if (scale == 1.0) return img;
  const int h = std::max(1, int(std::lround(img.rows() * scale)));
  const int w = std::max(1, int(std::lround(img.cols() * scale)));
  const auto wr = area_weights(int(img.rows()), h);
  const auto wc = area_weights(int(img.cols()), w);
  const Eigen::MatrixXd src = img.matrix();
  const Eigen::MatrixXd tmp = wr * src;
  const Eigen::MatrixXd out = (wc * tmp.transpose()).transpose();
  return out.array();
}

HogLevel hog_features(const Image& img, int cell_size) {
  const int rows = int(img.rows()) / cell_size;
  const int cols = int(img.cols()) / cell_size;
  if (rows < 1 || cols < 1) fail(ErrorKind::ImageTooSmall, "image smaller than one HoG cell");

  const int visible_h = rows * cell_size, visible_w = cols * cell_size;
  const auto& units = orientation_units();

  // 18-bin signed orientation histograms with bilinear spatial voting.
  Eigen::MatrixXd hist = Eigen::MatrixXd::Zero(Eigen::Index(rows) * cols, 18);
  for (int y = 1; y < visible_h - 1; ++y) {
    for (int x = 1; x < visible_w - 1; ++x) {
      const double dx = img(y, x + 1) - img(y, x - 1);
      const double dy = img(y + 1, x) - img(y - 1, x);
      const double mag = std::sqrt(dx * dx + dy * dy);
      if (mag == 0) continue;

      double best = 0;
      int bin = 0;
      for (int o = 0; o < 9; ++o) {
        const double dot = units[o].first * dx + units[o].second * dy;
        if (dot > best) {
          best = dot;
          bin = o;
        } else if (-dot > best) {
          best = -dot;
          bin = o + 9;
        }
      }

      const double xp = (x + 0.5) / cell_size - 0.5;
      const double yp = (y + 0.5) / cell_size - 0.5;
      const int ix = int(std::floor(xp)), iy = int(std::floor(yp));
      const double vx0 = xp - ix, vy0 = yp - iy;
      const double vx1 = 1 - vx0, vy1 = 1 - vy0;
      auto vote = [&](int cy, int cx, double w) {
        if (cy >= 0 && cy < rows && cx >= 0 && cx < cols) hist(Eigen::Index(cy) * cols + cx, bin) += w * mag;
      };
      vote(iy, ix, vy1 * vx1);
      vote(iy, ix + 1, vy1 * vx0);
      vote(iy + 1, ix, vy0 * vx1);
      vote(iy + 1, ix + 1, vy0 * vx0);
    }
  }

  // Energy of the unsigned histogram per cell, used by the block normalizers.
  Eigen::ArrayXXd energy(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const auto h = hist.row(Eigen::Index(r) * cols + c);
      double e = 0;
      for (int o = 0; o < 9; ++o) e += (h(o) + h(o + 9)) * (h(o) + h(o + 9));
      energy(r, c) = e;
    }
  auto energy_at = [&](int r, int c) {
    return energy(std::clamp(r, 0, rows - 1), std::clamp(c, 0, cols - 1));
  };

  constexpr double eps = 1e-4;
  HogLevel level;
  level.rows = rows;
  level.cols = cols;
  level.features = Eigen::MatrixXd::Zero(Eigen::Index(rows) * cols, kHogDims);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      std::array<double, 4> norm{};
      int k = 0;
      for (int dr : {-1, 1})
        for (int dc : {-1, 1}) {
          const double sum = energy_at(r, c) + energy_at(r + dr, c) + energy_at(r, c + dc) + energy_at(r + dr, c + dc);
          norm[k++] = 1.0 / std::sqrt(sum + eps);
        }

      const auto h = hist.row(Eigen::Index(r) * cols + c);
      auto f = level.features.row(Eigen::Index(r) * cols + c);
      std::array<double, 4> texture{};
      for (int o = 0; o < 18; ++o) {
        double acc = 0;
        for (int n = 0; n < 4; ++n) {
          const double v = std::min(h(o) * norm[n], 0.2);
          acc += v;
          texture[n] += v;
        }
        f(o) = 0.5 * acc;
      }
      for (int o = 0; o < 9; ++o) {
        const double s = h(o) + h(o + 9);
        double acc = 0;
        for (int n = 0; n < 4; ++n) acc += std::min(s * norm[n], 0.2);
        f(18 + o) = 0.5 * acc;
      }
      for (int n = 0; n < 4; ++n) f(27 + n) = 0.2357 * texture[n];
    }
  }
  return level;
}

HogPyramid hog_pyramid(const Image& img, const HogParams& params) {
  if (params.levels < 1 || params.cell_size < 1 || (params.scale_step <= 1.0 && params.levels > 1))
    fail(ErrorKind::ConfigError, "invalid HoG pyramid parameters");

  const double last = std::pow(params.scale_step, -(params.levels - 1));
  const auto last_h = std::lround(img.rows() * last), last_w = std::lround(img.cols() * last);
  if (last_h / params.cell_size < 3 || last_w / params.cell_size < 3)
    fail(ErrorKind::ImageTooSmall, "pyramid level " + std::to_string(params.levels - 1) + " spans fewer than 3x3 cells");

  HogPyramid pyr;
  pyr.cell_size = params.cell_size;
  pyr.scale_step = params.scale_step;
  for (int l = 0; l < params.levels; ++l) {
    const double scale = std::pow(params.scale_step, -l);
    auto level = hog_features(resize_image(img, scale), params.cell_size);
    level.scale = scale;
    pyr.levels.push_back(std::move(level));
  }
  return pyr;
}

}  // namespace shapepose
