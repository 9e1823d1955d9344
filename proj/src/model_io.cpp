#include "shapepose/model_io.hpp"

#include "shapepose/error.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace shapepose {

namespace {

using nlohmann::json;

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd json_matrix(const json& j, Eigen::Index rows, Eigen::Index cols) {
  if (!j.is_array() || Eigen::Index(j.size()) != rows) fail(ErrorKind::DimensionMismatch, "matrix row count");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[r];
    if (!row.is_array() || Eigen::Index(row.size()) != cols) fail(ErrorKind::DimensionMismatch, "matrix column count");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[c].get<double>();
  }
  return m;
}

template <int N>
json vector_json(const Eigen::Matrix<double, N, 1>& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

template <int N>
Eigen::Matrix<double, N, 1> json_vector(const json& j) {
  const auto v = j.get<std::vector<double>>();
  if (int(v.size()) != N) fail(ErrorKind::DimensionMismatch, "fixed vector length");
  return Eigen::Matrix<double, N, 1>(v.data());
}

json appearance_json(const Appearance& a) {
  json j;
  j["templates"] = json::array();
  for (const auto& t : a.templates) j["templates"].push_back(matrix_json(t));
  j["part_bias"] = matrix_json(a.part_bias);
  j["pair_bias"] = json::array();
  for (const auto& b : a.pair_bias) j["pair_bias"].push_back(matrix_json(b));
  return j;
}

Appearance json_appearance(const json& j, int parts, int types, int rows, int cols) {
  Appearance a = Appearance::zeros(parts, types, rows, cols);
  if (j.at("templates").size() != a.templates.size()) fail(ErrorKind::DimensionMismatch, "template count");
  for (std::size_t i = 0; i < a.templates.size(); ++i)
    a.templates[i] = json_matrix(j["templates"][i], rows * cols, kHogDims);
  a.part_bias = json_matrix(j.at("part_bias"), parts, types);
  if (j.at("pair_bias").size() != std::size_t(parts)) fail(ErrorKind::DimensionMismatch, "pair bias count");
  for (int i = 1; i < parts; ++i) a.pair_bias[i] = json_matrix(j["pair_bias"][i], types, types);
  return a;
}

json prior_json(const std::vector<PriorSummary>& p) {
  json j = json::array();
  for (const auto& s : p) j.push_back({{"median", s.median}, {"spread", s.spread}});
  return j;
}

std::vector<PriorSummary> json_prior(const json& j, int parts) {
  if (!j.is_array() || int(j.size()) != parts) fail(ErrorKind::DimensionMismatch, "prior count");
  std::vector<PriorSummary> p;
  for (const auto& s : j) p.push_back({s.at("median").get<double>(), s.at("spread").get<double>()});
  return p;
}

}  // namespace

std::string serialize_model(const ModelBundle& bundle) {
  const auto& m = bundle.model;
  const auto& app = m.fmp.appearance;
  json j;
  j["format"] = "shapepose-model";
  j["version"] = kModelFormatVersion;
  j["dims"] = {{"parts", m.part_count()},
               {"types", m.type_count()},
               {"template_rows", app.template_rows},
               {"template_cols", app.template_cols},
               {"hog_dims", kHogDims}};

  json fmp;
  fmp["parent"] = m.fmp.parent;
  fmp["appearance"] = appearance_json(app);
  fmp["anchor"] = json::array();
  fmp["deformation"] = json::array();
  for (int i = 0; i < m.part_count(); ++i) {
    json anchors = json::array(), defs = json::array();
    for (const auto& a : m.fmp.anchor[i]) anchors.push_back({a.x(), a.y()});
    for (const auto& d : m.fmp.deformation[i]) defs.push_back(vector_json<4>(d));
    fmp["anchor"].push_back(anchors);
    fmp["deformation"].push_back(defs);
  }
  j["fmp"] = fmp;

  json shape;
  shape["appearance"] = appearance_json(m.appearance);
  shape["shape_weights"] = json::array();
  for (const auto& w : m.shape_weights) shape["shape_weights"].push_back(vector_json<5>(w));
  shape["chamfer_weights"] = m.chamfer_weights;
  shape["priors"] = {{"radius", prior_json(m.priors.radius)},
                     {"flare", prior_json(m.priors.flare)},
                     {"alpha", prior_json(m.priors.alpha)}};
  shape["sample_step"] = m.sample_step;
  j["shape"] = shape;

  const auto& p = bundle.params;
  j["detect"] = {{"cell_size", p.hog.cell_size},
                 {"levels", p.hog.levels},
                 {"scale_step", p.hog.scale_step},
                 {"edge_low", p.edges.low},
                 {"edge_high", p.edges.high},
                 {"edge_sigma", p.edges.sigma},
                 {"orientation_bins", p.orientation_bins},
                 {"stage1_m", p.stage1_m},
                 {"stage2_m", p.stage2_m},
                 {"nms_radius", p.nms_radius}};
  return j.dump(1);
}

ModelBundle parse_model(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::ParseError, std::string("model is not valid JSON: ") + e.what());
  }
  try {
    if (j.value("format", "") != "shapepose-model") fail(ErrorKind::ParseError, "not a shapepose model");
    if (j.at("version").get<int>() != kModelFormatVersion)
      fail(ErrorKind::ParseError, "unsupported model version " + j["version"].dump());
    const auto& dims = j.at("dims");
    const int parts = dims.at("parts"), types = dims.at("types");
    const int rows = dims.at("template_rows"), cols = dims.at("template_cols");
    if (dims.at("hog_dims").get<int>() != kHogDims) fail(ErrorKind::DimensionMismatch, "feature dimension differs");
    if (parts < 1 || types < 1 || rows < 1 || cols < 1) fail(ErrorKind::DimensionMismatch, "invalid dimensions");

    ModelBundle b;
    auto& m = b.model;
    const auto& fmp = j.at("fmp");
    auto parent = fmp.at("parent").get<std::vector<int>>();
    if (int(parent.size()) != parts) fail(ErrorKind::DimensionMismatch, "parent list length");
    m = ScfmpModel::zeros(parent, types, rows, cols);
    m.fmp.appearance = json_appearance(fmp.at("appearance"), parts, types, rows, cols);
    for (int i = 0; i < parts; ++i) {
      const auto& anchors = fmp.at("anchor").at(i);
      const auto& defs = fmp.at("deformation").at(i);
      if (int(anchors.size()) != types || int(defs.size()) != types * types)
        fail(ErrorKind::DimensionMismatch, "deformation block size");
      for (int t = 0; t < types; ++t) m.fmp.anchor[i][t] = {anchors[t][0].get<int>(), anchors[t][1].get<int>()};
      for (int t = 0; t < types * types; ++t) m.fmp.deformation[i][t] = json_vector<4>(defs[t]);
    }

    const auto& shape = j.at("shape");
    m.appearance = json_appearance(shape.at("appearance"), parts, types, rows, cols);
    if (int(shape.at("shape_weights").size()) != parts) fail(ErrorKind::DimensionMismatch, "shape weight count");
    for (int i = 0; i < parts; ++i) m.shape_weights[i] = json_vector<5>(shape["shape_weights"][i]);
    m.chamfer_weights = shape.at("chamfer_weights").get<std::vector<double>>();
    if (int(m.chamfer_weights.size()) != parts) fail(ErrorKind::DimensionMismatch, "chamfer weight count");
    const auto& pr = shape.at("priors");
    m.priors.radius = json_prior(pr.at("radius"), parts);
    m.priors.flare = json_prior(pr.at("flare"), parts);
    m.priors.alpha = json_prior(pr.at("alpha"), parts);
    m.sample_step = shape.at("sample_step");

    const auto& d = j.at("detect");
    auto& p = b.params;
    p.hog.cell_size = d.at("cell_size");
    p.hog.levels = d.at("levels");
    p.hog.scale_step = d.at("scale_step");
    p.edges.low = d.at("edge_low");
    p.edges.high = d.at("edge_high");
    p.edges.sigma = d.at("edge_sigma");
    p.orientation_bins = d.at("orientation_bins");
    p.stage1_m = d.at("stage1_m");
    p.stage2_m = d.at("stage2_m");
    p.nms_radius = d.at("nms_radius");
    return b;
  } catch (const json::exception& e) {
    fail(ErrorKind::ParseError, std::string("malformed model: ") + e.what());
  }
}

void save_model(const std::string& path, const ModelBundle& bundle) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path);
  out << serialize_model(bundle);
  if (!out) fail(ErrorKind::IoError, "write failed for " + path);
}

ModelBundle load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::NotFound, "cannot open model " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

}  // namespace shapepose
