#include "config.hpp"

#include "shapepose/error.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace shapepose {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::string format(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

RunConfig::RunConfig() {
  const DetectParams d;
  const TrainConfig t;
  const SynthConfig s;
  const TrackParams k;
  values_ = {
      // learning
      {"type_count", std::to_string(t.type_count)},
      {"svm_c", format(t.svm_c)},
      {"rounds", std::to_string(t.rounds)},
      {"tolerance", format(t.tolerance)},
      {"max_epochs", std::to_string(t.max_epochs)},
      {"seed", std::to_string(t.seed)},
      {"template_rows", std::to_string(t.template_rows)},
      {"template_cols", std::to_string(t.template_cols)},
      {"negatives_per_image", std::to_string(t.negatives_per_image)},
      {"mining_m", std::to_string(t.mining_m)},
      // detection
      {"stage1_m", std::to_string(d.stage1_m)},
      {"stage2_m", std::to_string(d.stage2_m)},
      {"nms_radius", format(d.nms_radius)},
      {"cell_size", std::to_string(d.hog.cell_size)},
      {"levels", std::to_string(d.hog.levels)},
      {"scale_step", format(d.hog.scale_step)},
      {"edge_low", format(d.edges.low)},
      {"edge_high", format(d.edges.high)},
      {"edge_sigma", format(d.edges.sigma)},
      {"orientation_bins", std::to_string(d.orientation_bins)},
      // tracking and evaluation
      {"gamma", format(k.gamma)},
      {"samples", std::to_string(k.samples)},
      {"flip_tolerant", "0"},
      {"pck_beta", format(0.1)},
      {"pattern", "*.png"},
      // synthetic data
      {"width", std::to_string(s.width)},
      {"height", std::to_string(s.height)},
      {"frames", std::to_string(s.frames)},
      {"parts", std::to_string(s.parts)},
      {"body_length", format(s.body_length)},
      {"base_radius", format(s.base_radius)},
      {"taper", format(s.taper)},
      {"bend_amplitude", format(s.bend_amplitude)},
      {"bend_frequency", format(s.bend_frequency)},
      {"bend_speed", format(s.bend_speed)},
      {"turn_rate", format(s.turn_rate)},
      {"wander", format(s.wander)},
      {"occluders", std::to_string(s.occluders)},
      {"occluder_radius", format(s.occluder_radius)},
      {"noise", format(s.noise)},
      {"omega", "0"},
      {"annotate_every", std::to_string(s.annotate_every)},
      {"backgrounds", "10"},
  };
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::NotFound, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  parse_text(ss.str(), path.string());
}

void RunConfig::parse_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::ConfigError, origin + ":" + std::to_string(n) + ": expected key=value");
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) fail(ErrorKind::ConfigError, "unknown config key '" + key + "'");
  it->second = value;
  explicit_.insert(key);
}

void RunConfig::set_assignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) fail(ErrorKind::ConfigError, "expected key=value, got '" + assignment + "'");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) fail(ErrorKind::ConfigError, "unknown config key '" + key + "'");
  return it->second;
}

double RunConfig::number(const std::string& key) const {
  const auto& v = get(key);
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    fail(ErrorKind::ConfigError, "config key '" + key + "' needs a number, got '" + v + "'");
  }
}

int RunConfig::integer(const std::string& key) const {
  const double d = number(key);
  if (d != std::floor(d)) fail(ErrorKind::ConfigError, "config key '" + key + "' needs an integer");
  return int(d);
}

bool RunConfig::flag(const std::string& key) const {
  const auto& v = get(key);
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  fail(ErrorKind::ConfigError, "config key '" + key + "' needs a boolean");
}

DetectParams RunConfig::detect_params() const {
  DetectParams d;
  d.hog.cell_size = integer("cell_size");
  d.hog.levels = integer("levels");
  d.hog.scale_step = number("scale_step");
  d.edges.low = number("edge_low");
  d.edges.high = number("edge_high");
  d.edges.sigma = number("edge_sigma");
  d.orientation_bins = integer("orientation_bins");
  d.stage1_m = integer("stage1_m");
  d.stage2_m = integer("stage2_m");
  d.nms_radius = number("nms_radius");
  if (d.stage1_m < 1 || d.stage2_m < 1) fail(ErrorKind::ConfigError, "stage1_m and stage2_m must be positive");
  if (d.orientation_bins < 1) fail(ErrorKind::ConfigError, "orientation_bins must be positive");
  return d;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.type_count = integer("type_count");
  t.svm_c = number("svm_c");
  t.rounds = integer("rounds");
  t.tolerance = number("tolerance");
  t.max_epochs = integer("max_epochs");
  t.seed = std::uint64_t(integer("seed"));
  t.template_rows = integer("template_rows");
  t.template_cols = integer("template_cols");
  t.negatives_per_image = integer("negatives_per_image");
  t.mining_m = integer("mining_m");
  t.detect = detect_params();
  return t;
}

SynthConfig RunConfig::synth_config() const {
  SynthConfig s;
  s.width = integer("width");
  s.height = integer("height");
  s.frames = integer("frames");
  s.parts = integer("parts");
  s.body_length = number("body_length");
  s.base_radius = number("base_radius");
  s.taper = number("taper");
  s.bend_amplitude = number("bend_amplitude");
  s.bend_frequency = number("bend_frequency");
  s.bend_speed = number("bend_speed");
  s.turn_rate = number("turn_rate");
  s.wander = number("wander");
  s.occluders = integer("occluders");
  s.occluder_radius = number("occluder_radius");
  s.noise = number("noise");
  s.omega = flag("omega");
  s.annotate_every = integer("annotate_every");
  s.seed = std::uint64_t(integer("seed"));
  return s;
}

TrackParams RunConfig::track_params() const {
  TrackParams k;
  k.gamma = number("gamma");
  k.samples = integer("samples");
  k.flip_tolerant = flag("flip_tolerant");
  if (k.gamma < 0) fail(ErrorKind::ConfigError, "gamma must be non-negative");
  return k;
}

}  // namespace shapepose
