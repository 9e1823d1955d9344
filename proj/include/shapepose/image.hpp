#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace shapepose {

/// Luminance image, values in [0,1]. Indexed as img(y, x).
using Image = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// 8-bit RGB raster used for overlays and debug output.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<unsigned char> data;  // row-major RGB triplets

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), data(std::size_t(w) * h * 3, 0) {}
  static RgbImage from_gray(const Image& img);
  void set(int x, int y, unsigned char r, unsigned char g, unsigned char b);
};

struct FrameSequence {
  std::vector<Image> frames;
  std::vector<std::string> names;
  double frame_rate = 30.0;

  int width() const { return frames.empty() ? 0 : int(frames.front().cols()); }
  int height() const { return frames.empty() ? 0 : int(frames.front().rows()); }
  std::size_t size() const { return frames.size(); }
};

/// Fixed luma weights 0.299/0.587/0.114 applied to 8-bit channels.
double luminance(unsigned char r, unsigned char g, unsigned char b);

Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& img);
void write_png(const std::filesystem::path& path, const RgbImage& img);

/// Loads every file in `dir` matching the glob `pattern`, in natural
/// filename order ("f2" before "f10").
FrameSequence load_frames(const std::filesystem::path& dir, const std::string& pattern = "*.png");

/// Natural ("human") ordering of file names: digit runs compare numerically.
bool natural_less(const std::string& a, const std::string& b);

}  // namespace shapepose
