#include "shapepose/pose_io.hpp"

#include "shapepose/error.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace shapepose {

namespace {

using nlohmann::json;

json pose_json(const PoseCandidate& c) {
  json parts = json::array();
  for (int i = 0; i < int(c.parts.size()); ++i) {
    const auto& p = c.parts[i];
    json part = {{"x", c.point(i).x()}, {"y", c.point(i).y()}, {"type", p.type},
                 {"level", p.level},    {"cell_x", p.cell_x},  {"cell_y", p.cell_y}};
    if (c.has_shape()) {
      part["r"] = c.states[i].r;
      part["theta"] = c.states[i].theta;
      part["eta"] = c.states[i].eta;
    }
    parts.push_back(std::move(part));
  }
  json j = {{"score", c.score}, {"level", c.level}, {"parts", parts}};
  j["stage1_score"] = std::isfinite(c.stage1_score) ? json(c.stage1_score) : json(nullptr);
  return j;
}

PoseCandidate json_pose(const json& j) {
  PoseCandidate c;
  c.score = j.at("score").get<double>();
  c.level = j.value("level", 0);
  if (j.contains("stage1_score") && !j["stage1_score"].is_null()) c.stage1_score = j["stage1_score"].get<double>();
  bool shape = true;
  for (const auto& p : j.at("parts")) {
    PartLocation loc;
    loc.x = p.at("x").get<double>();
    loc.y = p.at("y").get<double>();
    loc.type = p.value("type", 0);
    loc.level = p.value("level", c.level);
    loc.cell_x = p.value("cell_x", 0);
    loc.cell_y = p.value("cell_y", 0);
    c.parts.push_back(loc);
    shape = shape && p.contains("r") && p.contains("theta") && p.contains("eta");
  }
  if (shape && !c.parts.empty()) {
    const auto& parts = j["parts"];
    for (std::size_t i = 0; i < parts.size(); ++i) {
      PartState z;
      z.x = c.parts[i].x;
      z.y = c.parts[i].y;
      z.r = parts[i]["r"].get<double>();
      z.theta = parts[i]["theta"].get<double>();
      z.eta = parts[i]["eta"].get<double>();
      z.type = c.parts[i].type;
      c.states.push_back(z);
    }
  }
  return c;
}

template <typename F>
auto guarded(const std::string& what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    fail(ErrorKind::ParseError, "malformed " + what + ": " + e.what());
  }
}

}  // namespace

std::string serialize_detections(const DetectionSet& set) {
  json j;
  j["kind"] = "detections";
  j["version"] = 1;
  j["frames_dir"] = set.frames_dir;
  j["parent"] = set.parent;
  j["frames"] = json::array();
  for (const auto& f : set.frames) {
    json s1 = json::array(), s2 = json::array();
    for (const auto& c : f.stage1) s1.push_back(pose_json(c));
    for (const auto& c : f.stage2) s2.push_back(pose_json(c));
    j["frames"].push_back({{"frame", f.frame}, {"name", f.name}, {"stage1", s1}, {"stage2", s2}, {"stage2_fallback", f.stage2_fallback}});
  }
  return j.dump(1);
}

DetectionSet parse_detections(const std::string& text) {
  return guarded("detections", [&] {
    const json j = json::parse(text);
    if (j.value("kind", "") != "detections") fail(ErrorKind::ParseError, "not a detection file");
    DetectionSet set;
    set.frames_dir = j.value("frames_dir", "");
    set.parent = j.at("parent").get<std::vector<int>>();
    for (const auto& f : j.at("frames")) {
      FrameDetections d;
      d.frame = f.at("frame");
      d.name = f.value("name", "");
      for (const auto& c : f.at("stage1")) d.stage1.push_back(json_pose(c));
      for (const auto& c : f.at("stage2")) d.stage2.push_back(json_pose(c));
      d.stage2_fallback = f.value("stage2_fallback", false);
      set.frames.push_back(std::move(d));
    }
    return set;
  });
}

std::string serialize_track(const TrackPath& path, const std::vector<std::string>& names) {
  json j;
  j["kind"] = "track";
  j["version"] = 1;
  j["total_score"] = path.score;
  j["frames"] = json::array();
  for (std::size_t t = 0; t < path.poses.size(); ++t) {
    json f = pose_json(path.poses[t]);
    f["frame"] = t;
    f["candidate"] = path.choices.at(t);
    if (t < names.size()) f["name"] = names[t];
    j["frames"].push_back(std::move(f));
  }
  return j.dump(1);
}

TrackPath parse_track(const std::string& text) {
  return guarded("track", [&] {
    const json j = json::parse(text);
    if (j.value("kind", "") != "track") fail(ErrorKind::ParseError, "not a track file");
    TrackPath path;
    path.score = j.at("total_score").get<double>();
    for (const auto& f : j.at("frames")) {
      path.poses.push_back(json_pose(f));
      path.choices.push_back(f.value("candidate", 0));
    }
    return path;
  });
}

bool is_track_json(const std::string& text) {
  return guarded("JSON", [&] { return json::parse(text).value("kind", "") == "track"; });
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::NotFound, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorKind::IoError, "write failed for " + path.string());
}

}  // namespace shapepose
