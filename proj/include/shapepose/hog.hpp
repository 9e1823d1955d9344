#pragma once

#include "shapepose/image.hpp"

#include <Eigen/Core>

#include <cmath>
#include <vector>

namespace shapepose {

inline constexpr int kHogDims = 31;

struct HogParams {
  int cell_size = 4;
  int levels = 10;
  double scale_step = std::pow(2.0, 0.25);
};

/// One pyramid level: a rows x cols grid of 31-dim cell descriptors stored
/// one cell per matrix row (cell (r, c) is row r * cols + c).
struct HogLevel {
  double scale = 1.0;  // level image size / original image size
  int rows = 0;
  int cols = 0;
  Eigen::MatrixXd features;

  auto cell(int r, int c) const { return features.row(Eigen::Index(r) * cols + c); }
};

struct HogPyramid {
  int cell_size = 4;
  double scale_step = 1.0;
  std::vector<HogLevel> levels;

  static constexpr int dims = kHogDims;
};

/// Area-averaging resize to round(size * scale).
Image resize_image(const Image& img, double scale);

/// 31-dim contrast-normalized HoG: 18 signed + 9 unsigned orientation
/// channels and 4 gradient-energy (texture) channels, truncated at 0.2.
HogLevel hog_features(const Image& img, int cell_size);

/// Level l is the image resampled by scale_step^-l. Throws ImageTooSmall when
/// the last level spans fewer than 3x3 cells.
HogPyramid hog_pyramid(const Image& img, const HogParams& params = {});

/// Maps a pixel coordinate at a pyramid level back to the original image.
inline double level_to_image(double v, double scale) { return (v + 0.5) / scale - 0.5; }
inline double image_to_level(double v, double scale) { return (v + 0.5) * scale - 0.5; }

}  // namespace shapepose
