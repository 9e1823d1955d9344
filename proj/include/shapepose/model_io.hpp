#pragma once

#include "shapepose/scfmp.hpp"

#include <string>

namespace shapepose {

inline constexpr int kModelFormatVersion = 1;

/// A trained cascade together with the detection parameters it was trained
/// with. Stored as one JSON document holding an "fmp" and a "shape" section
/// behind a dimension header.
struct ModelBundle {
  ScfmpModel model;
  DetectParams params;
};

std::string serialize_model(const ModelBundle& bundle);
ModelBundle parse_model(const std::string& text);

void save_model(const std::string& path, const ModelBundle& bundle);
ModelBundle load_model(const std::string& path);

}  // namespace shapepose
