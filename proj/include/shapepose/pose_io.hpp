#pragma once

#include "shapepose/fmp.hpp"
#include "shapepose/tracking.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace shapepose {

/// Per-frame ranked candidates of both cascade stages.
struct FrameDetections {
  int frame = 0;
  std::string name;
  std::vector<PoseCandidate> stage1;
  std::vector<PoseCandidate> stage2;
  bool stage2_fallback = false;
};

struct DetectionSet {
  std::string frames_dir;
  std::vector<int> parent;
  std::vector<FrameDetections> frames;
};

std::string serialize_detections(const DetectionSet& set);
DetectionSet parse_detections(const std::string& text);

/// {frame, score, parts: [{x, y, r, theta, eta, type}]} per frame.
std::string serialize_track(const TrackPath& path, const std::vector<std::string>& names = {});
TrackPath parse_track(const std::string& text);

/// True when the JSON document holds a track rather than detections.
bool is_track_json(const std::string& text);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace shapepose
