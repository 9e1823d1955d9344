#include "shapepose/annotations.hpp"

#include "shapepose/error.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace shapepose {

using nlohmann::json;

bool operator==(const Annotation& a, const Annotation& b) {
  return a.frame_index == b.frame_index && a.keypoints == b.keypoints && a.radii == b.radii;
}

bool AnnotationSet::operator==(const AnnotationSet& other) const {
  if (part_count != other.part_count || sequences.size() != other.sequences.size()) return false;
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    if (sequences[s].dir != other.sequences[s].dir) return false;
    if (sequences[s].annotations != other.sequences[s].annotations) return false;
  }
  return true;
}

std::size_t Dataset::annotation_count() const {
  std::size_t n = 0;
  for (const auto& s : sequences) n += s.annotations.size();
  return n;
}

namespace {

Annotation parse_one(const json& j, int part_count) {
  Annotation ann;
  ann.frame_index = j.at("frame").get<int>();
  if (ann.frame_index < 0) fail(ErrorKind::BoundsError, "negative frame index");
  for (const auto& kp : j.at("keypoints")) {
    if (!kp.is_array() || kp.size() != 2) fail(ErrorKind::ParseError, "keypoint must be [x, y]");
    Eigen::Vector2d p(kp[0].get<double>(), kp[1].get<double>());
    ann.keypoints.push_back(p);
  }
  if (int(ann.keypoints.size()) != part_count)
    fail(ErrorKind::ArityError, "frame " + std::to_string(ann.frame_index) + " has " +
                                    std::to_string(ann.keypoints.size()) + " keypoints, expected " +
                                    std::to_string(part_count));
  if (j.contains("radii") && !j["radii"].is_null()) {
    auto radii = j["radii"].get<std::vector<double>>();
    if (int(radii.size()) != part_count) fail(ErrorKind::ArityError, "radii length differs from part_count");
    ann.radii = std::move(radii);
  }
  validate_bounds(ann, -1, -1);
  return ann;
}

}  // namespace

void validate_bounds(const Annotation& ann, int width, int height) {
  for (const auto& p : ann.keypoints) {
    if (!p.allFinite() || p.x() < 0 || p.y() < 0 || (width > 0 && p.x() > width - 1) ||
        (height > 0 && p.y() > height - 1))
      fail(ErrorKind::BoundsError, "keypoint (" + std::to_string(p.x()) + ", " + std::to_string(p.y()) +
                                       ") outside frame " + std::to_string(ann.frame_index));
  }
  if (ann.radii)
    for (double r : *ann.radii)
      if (!(r > 0) || !std::isfinite(r)) fail(ErrorKind::BoundsError, "radius must be positive");
}

AnnotationSet parse_annotations_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::ParseError, e.what());
  }

  try {
    AnnotationSet set;
    set.part_count = root.at("part_count").get<int>();
    if (set.part_count < 1) fail(ErrorKind::ParseError, "part_count must be positive");
    for (const auto& js : root.at("sequences")) {
      AnnotatedSequence seq;
      seq.dir = js.at("dir").get<std::string>();
      for (const auto& ja : js.at("annotations")) seq.annotations.push_back(parse_one(ja, set.part_count));
      set.sequences.push_back(std::move(seq));
    }
    return set;
  } catch (const json::exception& e) {
    fail(ErrorKind::ParseError, e.what());
  }
}

AnnotationSet parse_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::NotFound, path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_annotations_json(buffer.str());
}

std::string serialize_annotations(const AnnotationSet& set) {
  json root;
  root["part_count"] = set.part_count;
  root["sequences"] = json::array();
  for (const auto& seq : set.sequences) {
    json js;
    js["dir"] = seq.dir;
    js["annotations"] = json::array();
    for (const auto& ann : seq.annotations) {
      json ja;
      ja["frame"] = ann.frame_index;
      ja["keypoints"] = json::array();
      for (const auto& p : ann.keypoints) ja["keypoints"].push_back({p.x(), p.y()});
      if (ann.radii) ja["radii"] = *ann.radii;
      js["annotations"].push_back(std::move(ja));
    }
    root["sequences"].push_back(std::move(js));
  }
  return root.dump(1);
}

void write_annotations(const std::filesystem::path& path, const AnnotationSet& set) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::IoError, path.string());
  out << serialize_annotations(set) << '\n';
}

Dataset load_dataset(const std::filesystem::path& annotation_path, const std::string& pattern) {
  const auto set = parse_annotations(annotation_path);
  const auto base = annotation_path.parent_path();

  Dataset data;
  data.part_count = set.part_count;
  for (const auto& seq : set.sequences) {
    std::filesystem::path dir = seq.dir;
    if (dir.is_relative()) dir = base / dir;
    LabeledSequence labeled;
    labeled.frames = load_frames(dir, pattern);
    for (const auto& ann : seq.annotations) {
      if (ann.frame_index >= int(labeled.frames.size()))
        fail(ErrorKind::BoundsError, "annotation references missing frame " + std::to_string(ann.frame_index));
      validate_bounds(ann, labeled.frames.width(), labeled.frames.height());
    }
    labeled.annotations = seq.annotations;
    data.sequences.push_back(std::move(labeled));
  }
  return data;
}

}  // namespace shapepose
