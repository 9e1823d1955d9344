#pragma once

#include "shapepose/learning.hpp"
#include "shapepose/synth.hpp"
#include "shapepose/tracking.hpp"

#include <filesystem>
#include <map>
#include <set>
#include <string>

namespace shapepose {

/// Flat key=value run configuration. Every key has a default; unknown keys
/// are rejected with ConfigError.
class RunConfig {
 public:
  RunConfig();

  /// Lines of `key = value`; '#' starts a comment.
  void load_file(const std::filesystem::path& path);
  void parse_text(const std::string& text, const std::string& origin);
  void set(const std::string& key, const std::string& value);
  /// Accepts "key=value".
  void set_assignment(const std::string& assignment);

  const std::string& get(const std::string& key) const;
  double number(const std::string& key) const;
  int integer(const std::string& key) const;
  bool flag(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  /// Whether the key was given by a config file or flag.
  bool is_set(const std::string& key) const { return explicit_.count(key) > 0; }

  TrainConfig train_config() const;
  DetectParams detect_params() const;
  SynthConfig synth_config() const;
  TrackParams track_params() const;

 private:
  std::map<std::string, std::string> values_;
  std::set<std::string> explicit_;
};

}  // namespace shapepose
