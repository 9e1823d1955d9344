#include "shapepose/image.hpp"

#include "shapepose/error.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fnmatch.h>

namespace shapepose {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotFound: return "NotFound";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::EmptySequence: return "EmptySequence";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ArityError: return "ArityError";
    case ErrorKind::BoundsError: return "BoundsError";
    case ErrorKind::ImageTooSmall: return "ImageTooSmall";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::EmptyStateSpace: return "EmptyStateSpace";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::EmptyFrame: return "EmptyFrame";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

double luminance(unsigned char r, unsigned char g, unsigned char b) {
  return (0.299 * r + 0.587 * g + 0.114 * b) / 255.0;
}

RgbImage RgbImage::from_gray(const Image& img) {
  RgbImage out(int(img.cols()), int(img.rows()));
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) {
      auto v = static_cast<unsigned char>(std::lround(std::clamp(img(y, x), 0.0, 1.0) * 255.0));
      out.set(x, y, v, v, v);
    }
  return out;
}

void RgbImage::set(int x, int y, unsigned char r, unsigned char g, unsigned char b) {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  auto* p = &data[(std::size_t(y) * width + x) * 3];
  p[0] = r;
  p[1] = g;
  p[2] = b;
}

Image read_png(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorKind::NotFound, path.string());

  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str()))
    fail(ErrorKind::IoError, path.string() + ": " + png.message);

  // Decode everything as 8-bit RGB so the luma weights apply uniformly; gray
  // input expands to r = g = b, which the weights map back to itself.
  png.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> buffer(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&png);
    fail(ErrorKind::IoError, path.string() + ": " + png.message);
  }

  Image img(png.height, png.width);
  for (png_uint_32 y = 0; y < png.height; ++y)
    for (png_uint_32 x = 0; x < png.width; ++x) {
      const auto* p = &buffer[(std::size_t(y) * png.width + x) * 3];
      img(y, x) = p[0] == p[1] && p[1] == p[2] ? p[0] / 255.0 : luminance(p[0], p[1], p[2]);
    }
  return img;
}

void write_png(const std::filesystem::path& path, const Image& img) {
  std::vector<unsigned char> buffer(std::size_t(img.size()));
  for (Eigen::Index y = 0; y < img.rows(); ++y)
    for (Eigen::Index x = 0; x < img.cols(); ++x)
      buffer[std::size_t(y * img.cols() + x)] =
          static_cast<unsigned char>(std::lround(std::clamp(img(y, x), 0.0, 1.0) * 255.0));

  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = png_uint_32(img.cols());
  png.height = png_uint_32(img.rows());
  png.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&png, path.c_str(), 0, buffer.data(), 0, nullptr))
    fail(ErrorKind::IoError, path.string() + ": " + png.message);
}

void write_png(const std::filesystem::path& path, const RgbImage& img) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = png_uint_32(img.width);
  png.height = png_uint_32(img.height);
  png.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&png, path.c_str(), 0, img.data.data(), 0, nullptr))
    fail(ErrorKind::IoError, path.string() + ": " + png.message);
}

bool natural_less(const std::string& a, const std::string& b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (std::isdigit(static_cast<unsigned char>(a[i])) && std::isdigit(static_cast<unsigned char>(b[j]))) {
      std::size_t ie = i, je = j;
      while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
      while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
      // Strip leading zeros, then compare by length and lexicographically.
      std::size_t is = i, js = j;
      while (is + 1 < ie && a[is] == '0') ++is;
      while (js + 1 < je && b[js] == '0') ++js;
      if (ie - is != je - js) return ie - is < je - js;
      if (auto c = a.compare(is, ie - is, b, js, je - js); c != 0) return c < 0;
      if (ie - i != je - j) return ie - i < je - j;
      i = ie;
      j = je;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  return a.size() - i < b.size() - j;
}

FrameSequence load_frames(const std::filesystem::path& dir, const std::string& pattern) {
  if (!std::filesystem::exists(dir)) fail(ErrorKind::NotFound, dir.string());

  std::vector<std::string> names;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto name = entry.path().filename().string();
    if (fnmatch(pattern.c_str(), name.c_str(), 0) == 0) names.push_back(name);
  }
  if (names.empty()) fail(ErrorKind::EmptySequence, dir.string() + " has no files matching " + pattern);
  std::sort(names.begin(), names.end(), natural_less);

  FrameSequence seq;
  for (const auto& name : names) {
    auto img = read_png(dir / name);
    if (!seq.frames.empty() && (img.rows() != seq.frames.front().rows() || img.cols() != seq.frames.front().cols()))
      fail(ErrorKind::DimensionMismatch, name + " differs in size from " + seq.names.front());
    seq.frames.push_back(std::move(img));
    seq.names.push_back(name);
  }
  return seq;
}

}  // namespace shapepose
