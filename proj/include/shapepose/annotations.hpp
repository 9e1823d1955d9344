#pragma once

#include "shapepose/image.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace shapepose {

/// Ground-truth keypoints for one frame. Keypoints are zero-based pixel
/// centers on the medial axis, x rightward and y downward.
struct Annotation {
  int frame_index = 0;
  std::vector<Eigen::Vector2d> keypoints;
  std::optional<std::vector<double>> radii;
};

struct AnnotatedSequence {
  std::string dir;
  std::vector<Annotation> annotations;
};

/// The parsed contents of one annotation file.
struct AnnotationSet {
  int part_count = 0;
  std::vector<AnnotatedSequence> sequences;

  bool operator==(const AnnotationSet&) const;
};

struct LabeledSequence {
  FrameSequence frames;
  std::vector<Annotation> annotations;
};

struct Dataset {
  int part_count = 0;
  std::vector<LabeledSequence> sequences;

  std::size_t annotation_count() const;
};

bool operator==(const Annotation& a, const Annotation& b);

AnnotationSet parse_annotations(const std::filesystem::path& path);
AnnotationSet parse_annotations_json(const std::string& text);
std::string serialize_annotations(const AnnotationSet& set);
void write_annotations(const std::filesystem::path& path, const AnnotationSet& set);

/// Checks keypoints and radii against a frame size; throws BoundsError.
void validate_bounds(const Annotation& ann, int width, int height);

/// Parses the annotation file and loads every referenced frame directory
/// (relative directories resolve against the annotation file's directory).
Dataset load_dataset(const std::filesystem::path& annotation_path,
                     const std::string& pattern = "*.png");

}  // namespace shapepose
