#include "shapepose/learning.hpp"

#include "shapepose/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <utility>

namespace shapepose {

namespace {

using Entries = std::vector<std::pair<int, double>>;

SparseVec to_sparse(Entries e, int dim) {
  std::sort(e.begin(), e.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  SparseVec v(dim);
  v.reserve(Eigen::Index(e.size()));
  for (std::size_t i = 0; i < e.size();) {
    const int idx = e[i].first;
    double sum = 0;
    for (; i < e.size() && e[i].first == idx; ++i) sum += e[i].second;
    if (sum != 0) v.insertBack(idx) = sum;
  }
  return v;
}

void append_window(Entries& e, int offset, const HogLevel& level, int cx, int cy, int rows, int cols) {
  if (cx < 0 || cy < 0 || cx + cols > level.cols || cy + rows > level.rows)
    fail(ErrorKind::BoundsError, "part window leaves the pyramid level");
  for (int dy = 0; dy < rows; ++dy)
    for (int dx = 0; dx < cols; ++dx) {
      const auto cell = level.cell(cy + dy, cx + dx);
      for (int d = 0; d < kHogDims; ++d)
        if (cell(d) != 0) e.emplace_back(offset + (dy * cols + dx) * kHogDims + d, cell(d));
    }
}

const HogLevel& level_of(const HogPyramid& pyr, const PartLocation& p) {
  if (p.level < 0 || p.level >= int(pyr.levels.size())) fail(ErrorKind::BoundsError, "pyramid level out of range");
  return pyr.levels[p.level];
}

// Appearance blocks shared by both stages.
void append_appearance(Entries& e, const FeatureLayout& layout, const Appearance& app, const std::vector<int>& parent,
                       const PoseCandidate& pose, const HogPyramid& pyr) {
  for (int i = 0; i < layout.parts; ++i) {
    const auto& p = pose.parts[i];
    if (p.type < 0 || p.type >= layout.types) fail(ErrorKind::BoundsError, "part type out of range");
    append_window(e, layout.template_index(i, p.type), level_of(pyr, p), p.cell_x, p.cell_y, app.template_rows,
                  app.template_cols);
    e.emplace_back(layout.part_bias_index(i, p.type), 1.0);
    if (i > 0) e.emplace_back(layout.pair_bias_index(i, p.type, pose.parts[parent[i]].type), 1.0);
  }
}

void copy_appearance_out(const FeatureLayout& layout, const Appearance& app, Eigen::VectorXd& beta) {
  for (int i = 0; i < layout.parts; ++i)
    for (int t = 0; t < layout.types; ++t) {
      const auto& w = app.weights(i, t);
      const int off = layout.template_index(i, t);
      for (int k = 0; k < layout.cells; ++k)
        for (int d = 0; d < kHogDims; ++d) beta(off + k * kHogDims + d) = w(k, d);
      beta(layout.part_bias_index(i, t)) = app.part_bias(i, t);
      if (i > 0)
        for (int tp = 0; tp < layout.types; ++tp) beta(layout.pair_bias_index(i, t, tp)) = app.pair_bias[i](t, tp);
    }
}

void copy_appearance_in(const FeatureLayout& layout, Appearance& app, const Eigen::VectorXd& beta) {
  for (int i = 0; i < layout.parts; ++i)
    for (int t = 0; t < layout.types; ++t) {
      auto& w = app.weights(i, t);
      const int off = layout.template_index(i, t);
      for (int k = 0; k < layout.cells; ++k)
        for (int d = 0; d < kHogDims; ++d) w(k, d) = beta(off + k * kHogDims + d);
      app.part_bias(i, t) = beta(layout.part_bias_index(i, t));
      if (i > 0)
        for (int tp = 0; tp < layout.types; ++tp) app.pair_bias[i](t, tp) = beta(layout.pair_bias_index(i, t, tp));
    }
}

PriorSummary summarize(std::vector<double> v) {
  auto median = [](std::vector<double> x) {
    const std::size_t n = x.size();
    std::sort(x.begin(), x.end());
    return n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
  };
  PriorSummary s;
  s.median = median(v);
  for (auto& x : v) x = std::abs(x - s.median);
  s.spread = median(v);
  return s;
}

// Median of angles taken around their circular mean, so values near +-pi
// do not split.
PriorSummary summarize_angles(std::vector<double> v) {
  double sx = 0, sy = 0;
  for (double a : v) {
    sx += std::cos(a);
    sy += std::sin(a);
  }
  const double center = (sx == 0 && sy == 0) ? 0.0 : std::atan2(sy, sx);
  for (auto& a : v) a = wrap_angle(a - center);
  PriorSummary s = summarize(std::move(v));
  s.median = wrap_angle(s.median + center);
  return s;
}

double orient(const Eigen::Vector2d& v) { return std::atan2(v.y(), v.x()); }

}  // namespace

FeatureLayout::FeatureLayout(int parts_, int types_, int cells_, bool shape_)
    : parts(parts_), types(types_), cells(cells_), shape(shape_) {}

int FeatureLayout::part_bias_index(int part, int type) const { return parts * types * cells * 31 + part * types + type; }

int FeatureLayout::pair_bias_index(int child, int tc, int tp) const {
  return parts * types * (cells * 31 + 1) + ((child - 1) * types + tc) * types + tp;
}

int FeatureLayout::deformation_index(int child, int tc, int tp) const {
  return parts * types * (cells * 31 + 1) + (parts - 1) * types * types + (((child - 1) * types + tc) * types + tp) * 4;
}

int FeatureLayout::shape_index(int child) const {
  return parts * types * (cells * 31 + 1) + (parts - 1) * types * types + (child - 1) * 5;
}

int FeatureLayout::chamfer_index(int child) const {
  return parts * types * (cells * 31 + 1) + (parts - 1) * (types * types + 5) + (child - 1);
}

int FeatureLayout::dim() const {
  const int base = parts * types * (cells * 31 + 1) + (parts - 1) * types * types;
  return shape ? base + (parts - 1) * 6 : base + (parts - 1) * types * types * 4;
}

FeatureLayout fmp_layout(const FmpModel& m) {
  return {m.part_count(), m.type_count(), m.appearance.template_rows * m.appearance.template_cols, false};
}

FeatureLayout shape_layout(const ScfmpModel& m) {
  return {m.part_count(), m.type_count(), m.appearance.template_rows * m.appearance.template_cols, true};
}

SparseVec fmp_features(const FmpModel& model, const PoseCandidate& pose, const HogPyramid& pyr) {
  const auto layout = fmp_layout(model);
  if (int(pose.parts.size()) != layout.parts) fail(ErrorKind::ArityError, "pose part count differs from the model");
  Entries e;
  append_appearance(e, layout, model.appearance, model.parent, pose, pyr);
  for (int i = 1; i < layout.parts; ++i) {
    const auto& c = pose.parts[i];
    const auto& p = pose.parts[model.parent[i]];
    const Eigen::Vector4d f = deformation_feature(model, i, c.type, {c.cell_x, c.cell_y}, {p.cell_x, p.cell_y});
    const int off = layout.deformation_index(i, c.type, p.type);
    for (int k = 0; k < 4; ++k) e.emplace_back(off + k, f(k));
  }
  return to_sparse(std::move(e), layout.dim());
}

Eigen::VectorXd fmp_parameters(const FmpModel& model) {
  const auto layout = fmp_layout(model);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(layout.dim());
  copy_appearance_out(layout, model.appearance, beta);
  for (int i = 1; i < layout.parts; ++i)
    for (int tc = 0; tc < layout.types; ++tc)
      for (int tp = 0; tp < layout.types; ++tp)
        beta.segment<4>(layout.deformation_index(i, tc, tp)) = model.deformation_weights(i, tc, tp);
  return beta;
}

void set_fmp_parameters(FmpModel& model, const Eigen::VectorXd& beta) {
  const auto layout = fmp_layout(model);
  if (beta.size() != layout.dim()) fail(ErrorKind::DimensionMismatch, "parameter vector length differs");
  copy_appearance_in(layout, model.appearance, beta);
  for (int i = 1; i < layout.parts; ++i)
    for (int tc = 0; tc < layout.types; ++tc)
      for (int tp = 0; tp < layout.types; ++tp)
        model.deformation[i][std::size_t(tc) * layout.types + tp] = beta.segment<4>(layout.deformation_index(i, tc, tp));
}

std::vector<int> fmp_quadratic_indices(const FmpModel& model) {
  const auto layout = fmp_layout(model);
  std::vector<int> out;
  for (int i = 1; i < layout.parts; ++i)
    for (int tc = 0; tc < layout.types; ++tc)
      for (int tp = 0; tp < layout.types; ++tp) {
        out.push_back(layout.deformation_index(i, tc, tp) + 2);
        out.push_back(layout.deformation_index(i, tc, tp) + 3);
      }
  return out;
}

SparseVec shape_features(const ScfmpModel& model, const PoseCandidate& pose, const HogPyramid& pyr,
                         const OrientedDistanceTransform& odt) {
  const auto layout = shape_layout(model);
  if (int(pose.parts.size()) != layout.parts) fail(ErrorKind::ArityError, "pose part count differs from the model");
  Entries e;
  append_appearance(e, layout, model.appearance, model.parent(), pose, pyr);
  std::vector<PartState> z;
  for (int i = 0; i < layout.parts; ++i)
    z.push_back(prior_state(model, i, pose.parts[i], level_of(pyr, pose.parts[i]).scale));
  for (int i = 1; i < layout.parts; ++i) {
    const auto f = pair_features(model, i, z[i], z[model.parent()[i]], odt);
    for (int k = 0; k < 5; ++k) e.emplace_back(layout.shape_index(i) + k, f.psi(k));
    e.emplace_back(layout.chamfer_index(i), f.theta);
  }
  return to_sparse(std::move(e), layout.dim());
}

Eigen::VectorXd shape_parameters(const ScfmpModel& model) {
  const auto layout = shape_layout(model);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(layout.dim());
  copy_appearance_out(layout, model.appearance, beta);
  for (int i = 1; i < layout.parts; ++i) {
    beta.segment<5>(layout.shape_index(i)) = model.shape_weights[i];
    beta(layout.chamfer_index(i)) = model.chamfer_weights[i];
  }
  return beta;
}

void set_shape_parameters(ScfmpModel& model, const Eigen::VectorXd& beta) {
  const auto layout = shape_layout(model);
  if (beta.size() != layout.dim()) fail(ErrorKind::DimensionMismatch, "parameter vector length differs");
  copy_appearance_in(layout, model.appearance, beta);
  for (int i = 1; i < layout.parts; ++i) {
    model.shape_weights[i] = beta.segment<5>(layout.shape_index(i));
    model.chamfer_weights[i] = beta(layout.chamfer_index(i));
  }
}

double keypoint_orientation(const std::vector<Eigen::Vector2d>& kp, const std::vector<int>& parent, int part) {
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  auto add = [&sum](const Eigen::Vector2d& v) {
    const double n = v.norm();
    if (n > 0) sum += v / n;
  };
  if (parent[part] >= 0) add(kp[parent[part]] - kp[part]);
  for (int c = part + 1; c < int(parent.size()); ++c)
    if (parent[c] == part) add(kp[part] - kp[c]);
  return sum.squaredNorm() > 0 ? orient(sum) : 0.0;
}

ShapePriors learn_shape_priors(const Dataset& data, const std::vector<int>& parent, const EdgeParams& edge_params) {
  const int k = int(parent.size());
  if (data.part_count != k) fail(ErrorKind::ArityError, "dataset part count differs from the tree");
  if (data.annotation_count() < 2) fail(ErrorKind::InsufficientData, "at least 2 annotated poses are required");

  std::vector<int> first_child(k, -1);
  for (int i = k - 1; i >= 1; --i) first_child[parent[i]] = i;

  std::vector<std::vector<double>> radius(k), flare(k), alpha(k);
  for (const auto& seq : data.sequences)
    for (const auto& ann : seq.annotations) {
      if (int(ann.keypoints.size()) != k) fail(ErrorKind::ArityError, "annotation part count differs");
      const auto& kp = ann.keypoints;
      std::vector<double> r;
      if (ann.radii) {
        r = *ann.radii;
      } else {
        if (ann.frame_index < 0 || ann.frame_index >= int(seq.frames.size()))
          fail(ErrorKind::BoundsError, "annotation refers to a missing frame");
        const auto odt = oriented_distance_transform(detect_edges(seq.frames.frames[ann.frame_index], edge_params));
        for (const auto& p : kp) {
          double best = std::numeric_limits<double>::infinity();
          for (int b = 0; b < odt.bins(); ++b)
            best = std::min(best, chamfer_query(odt, p.x(), p.y(), (b + 0.5) * std::numbers::pi / odt.bins()));
          r.push_back(best);
        }
      }
      for (int i = 0; i < k; ++i) {
        radius[i].push_back(r[i]);
        const int ahead = parent[i] >= 0 ? parent[i] : i;
        const int behind = first_child[i] >= 0 ? first_child[i] : i;
        const double ds = (kp[ahead] - kp[behind]).norm();
        flare[i].push_back(ahead != behind && ds > 0 ? std::atan((r[ahead] - r[behind]) / ds) : 0.0);

        const double theta = keypoint_orientation(kp, parent, i);
        double a = 0;
        if (parent[i] >= 0)
          a = wrap_angle(theta - orient(kp[parent[i]] - kp[i]));
        else if (first_child[i] >= 0)
          a = wrap_angle(theta - orient(kp[i] - kp[first_child[i]]));
        alpha[i].push_back(a);
      }
    }

  ShapePriors p;
  for (int i = 0; i < k; ++i) {
    p.radius.push_back(summarize(radius[i]));
    p.radius.back().median = std::max(p.radius.back().median, 0.5);
    p.flare.push_back(summarize(flare[i]));
    p.alpha.push_back(summarize_angles(alpha[i]));
  }
  return p;
}

Clustering kmeans(const std::vector<Eigen::Vector2d>& pts, int k, std::uint64_t seed, int iterations) {
  if (pts.empty() || k < 1) fail(ErrorKind::InsufficientData, "k-means needs points and k >= 1");
  std::mt19937_64 rng(seed);
  Clustering c;
  c.centers.push_back(pts[std::uniform_int_distribution<std::size_t>(0, pts.size() - 1)(rng)]);
  std::vector<double> d2(pts.size());
  while (int(c.centers.size()) < k) {
    double total = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      d2[i] = std::numeric_limits<double>::infinity();
      for (const auto& m : c.centers) d2[i] = std::min(d2[i], (pts[i] - m).squaredNorm());
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total > 0) {
      double u = std::uniform_real_distribution<double>(0, total)(rng);
      for (pick = 0; pick + 1 < pts.size() && u >= d2[pick]; ++pick) u -= d2[pick];
    } else {
      pick = std::uniform_int_distribution<std::size_t>(0, pts.size() - 1)(rng);
    }
    c.centers.push_back(pts[pick]);
  }

  c.assignment.assign(pts.size(), -1);
  for (int it = 0; it < iterations; ++it) {
    bool changed = false;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      int best = 0;
      for (int j = 1; j < k; ++j)
        if ((pts[i] - c.centers[j]).squaredNorm() < (pts[i] - c.centers[best]).squaredNorm()) best = j;
      if (best != c.assignment[i]) {
        c.assignment[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<Eigen::Vector2d> sum(k, Eigen::Vector2d::Zero());
    std::vector<int> count(k, 0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      sum[c.assignment[i]] += pts[i];
      ++count[c.assignment[i]];
    }
    for (int j = 0; j < k; ++j)
      if (count[j] > 0) c.centers[j] = sum[j] / count[j];
  }
  return c;
}

std::vector<MinedNegative> mine_fmp_negatives(const FmpModel& model, const std::vector<Image>& backgrounds,
                                              int per_image, const DetectParams& params, double threshold) {
  std::vector<MinedNegative> out;
  for (int b = 0; b < int(backgrounds.size()); ++b) {
    const auto pyr = hog_pyramid(backgrounds[b], params.hog);
    for (auto& c : infer_m_best(model, pyr, per_image, params.nms_radius)) {
      if (!(c.score > threshold)) continue;
      auto f = fmp_features(model, c, pyr);
      const double s = c.score;
      out.push_back({std::move(c), std::move(f), s, b});
    }
  }
  return out;
}

std::vector<MinedNegative> mine_shape_negatives(const ScfmpModel& model, const std::vector<Image>& backgrounds,
                                                int per_image, const DetectParams& params, int stage1_m,
                                                double threshold) {
  std::vector<MinedNegative> out;
  for (int b = 0; b < int(backgrounds.size()); ++b) {
    const auto pyr = hog_pyramid(backgrounds[b], params.hog);
    const auto stage1 = infer_m_best(model.fmp, pyr, stage1_m, params.nms_radius);
    const auto odt = oriented_distance_transform(detect_edges(backgrounds[b], params.edges), params.orientation_bins);
    for (auto& c : infer_m_best_shape(build_state_space(stage1, model, pyr), model, odt, per_image)) {
      if (!(c.score > threshold)) continue;
      auto f = shape_features(model, c, pyr, odt);
      const double s = c.score;
      out.push_back({std::move(c), std::move(f), s, b});
    }
  }
  return out;
}

std::vector<int> chain_parent(int parts) {
  std::vector<int> p(parts);
  for (int i = 0; i < parts; ++i) p[i] = i - 1;
  return p;
}

namespace {

struct Positive {
  HogPyramid pyr;
  OrientedDistanceTransform odt;
  PoseCandidate pose;
};

PartLocation located(const LevelResponse& geometry, int cx, int cy, int type) {
  const auto px = cell_to_pixel(cx, cy, geometry.scale, geometry.cell_size, geometry.template_rows,
                                geometry.template_cols);
  return {cx, cy, 0, type, px.x(), px.y()};
}

// Random configurations around the anchors, used before any model exists.
void random_negatives(const ScfmpModel& model, const std::vector<Image>& backgrounds, const TrainConfig& cfg,
                      std::mt19937_64& rng, std::vector<SvmExample>& fmp_out, std::vector<SvmExample>& shape_out) {
  const int k = model.part_count(), types = model.type_count();
  const int tr = model.appearance.template_rows, tc = model.appearance.template_cols;
  for (const auto& img : backgrounds) {
    const auto pyr = hog_pyramid(img, cfg.detect.hog);
    const auto odt = oriented_distance_transform(detect_edges(img, cfg.detect.edges), cfg.detect.orientation_bins);
    std::vector<int> usable;
    for (int l = 0; l < int(pyr.levels.size()); ++l)
      if (pyr.levels[l].rows >= tr && pyr.levels[l].cols >= tc) usable.push_back(l);
    if (usable.empty()) continue;
    for (int n = 0; n < cfg.negatives_per_image; ++n) {
      const int l = usable[std::uniform_int_distribution<std::size_t>(0, usable.size() - 1)(rng)];
      const auto& level = pyr.levels[l];
      const int max_x = level.cols - tc, max_y = level.rows - tr;
      PoseCandidate pose;
      pose.level = l;
      std::uniform_int_distribution<int> type(0, types - 1), jitter(-1, 1);
      for (int i = 0; i < k; ++i) {
        PartLocation p;
        p.level = l;
        p.type = type(rng);
        if (i == 0) {
          p.cell_x = std::uniform_int_distribution<int>(0, max_x)(rng);
          p.cell_y = std::uniform_int_distribution<int>(0, max_y)(rng);
        } else {
          const auto& par = pose.parts[model.parent()[i]];
          const auto& a = model.fmp.anchor[i][p.type];
          p.cell_x = std::clamp(par.cell_x + a.x() + jitter(rng), 0, max_x);
          p.cell_y = std::clamp(par.cell_y + a.y() + jitter(rng), 0, max_y);
        }
        const auto px = cell_to_pixel(p.cell_x, p.cell_y, level.scale, pyr.cell_size, tr, tc);
        p.x = px.x();
        p.y = px.y();
        pose.parts.push_back(p);
      }
      fmp_out.push_back({fmp_features(model.fmp, pose, pyr), -1});
      try {
        shape_out.push_back({shape_features(model, pose, pyr, odt), -1});
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::DegenerateInput) throw;
      }
    }
  }
}

}  // namespace

ModelBundle train(const Dataset& data, const std::vector<Image>& backgrounds, const TrainConfig& cfg,
                  TrainReport* report) {
  const int k = data.part_count, types = cfg.type_count;
  if (k < 1) fail(ErrorKind::InsufficientData, "dataset has no parts");
  if (types < 1 || cfg.template_rows < 1 || cfg.template_cols < 1 || cfg.rounds < 0)
    fail(ErrorKind::ConfigError, "invalid training configuration");
  if (cfg.rounds > 0 && backgrounds.empty()) fail(ErrorKind::InsufficientData, "negative mining needs backgrounds");

  const auto parent = chain_parent(k);
  ModelBundle bundle;
  bundle.params = cfg.detect;
  auto& model = bundle.model;
  model = ScfmpModel::zeros(parent, types, cfg.template_rows, cfg.template_cols);
  model.priors = learn_shape_priors(data, parent, cfg.detect.edges);

  // Positives at pyramid level 0.
  const int cell = cfg.detect.hog.cell_size;
  std::vector<Positive> positives;
  std::vector<std::vector<Eigen::Vector2i>> cells;
  for (const auto& seq : data.sequences)
    for (const auto& ann : seq.annotations) {
      if (ann.frame_index < 0 || ann.frame_index >= int(seq.frames.size()))
        fail(ErrorKind::BoundsError, "annotation refers to a missing frame");
      const Image& img = seq.frames.frames[ann.frame_index];
      Positive pos;
      pos.pyr.cell_size = cell;
      pos.pyr.scale_step = cfg.detect.hog.scale_step;
      pos.pyr.levels.push_back(hog_features(img, cell));
      const auto& level = pos.pyr.levels[0];
      if (level.rows < cfg.template_rows || level.cols < cfg.template_cols)
        fail(ErrorKind::ImageTooSmall, "training frame smaller than the part template");
      pos.odt = oriented_distance_transform(detect_edges(img, cfg.detect.edges), cfg.detect.orientation_bins);
      std::vector<Eigen::Vector2i> c;
      for (const auto& kp : ann.keypoints) {
        Eigen::Vector2i v = pixel_to_cell(kp, 1.0, cell, cfg.template_rows, cfg.template_cols);
        v.x() = std::clamp(v.x(), 0, level.cols - cfg.template_cols);
        v.y() = std::clamp(v.y(), 0, level.rows - cfg.template_rows);
        c.push_back(v);
      }
      cells.push_back(std::move(c));
      positives.push_back(std::move(pos));
    }

  // Part types from the offset to the parent (the root uses its first child).
  std::vector<std::vector<int>> type_of(positives.size(), std::vector<int>(k, 0));
  for (int i = 0; i < k; ++i) {
    if (k == 1) break;
    std::vector<Eigen::Vector2d> offsets;
    for (const auto& c : cells) offsets.push_back((i > 0 ? c[i] - c[parent[i]] : c[0] - c[1]).cast<double>());
    const auto clusters = kmeans(offsets, types, cfg.seed + std::uint64_t(i));
    for (std::size_t n = 0; n < positives.size(); ++n) type_of[n][i] = clusters.assignment[n];
    if (i == 0) continue;
    for (int t = 0; t < types; ++t) {
      Eigen::Vector2d sum = Eigen::Vector2d::Zero();
      int count = 0;
      for (std::size_t n = 0; n < offsets.size(); ++n)
        if (clusters.assignment[n] == t) {
          sum += offsets[n];
          ++count;
        }
      const Eigen::Vector2d mean = count ? Eigen::Vector2d(sum / count) : clusters.centers[t];
      model.fmp.anchor[i][t] = {int(std::lround(mean.x())), int(std::lround(mean.y()))};
    }
  }

  LevelResponse geometry;
  geometry.scale = 1.0;
  geometry.cell_size = cell;
  geometry.template_rows = cfg.template_rows;
  geometry.template_cols = cfg.template_cols;
  for (std::size_t n = 0; n < positives.size(); ++n)
    for (int i = 0; i < k; ++i)
      positives[n].pose.parts.push_back(located(geometry, cells[n][i].x(), cells[n][i].y(), type_of[n][i]));

  if (report) report->positives = int(positives.size());
  if (cfg.rounds == 0) return bundle;

  std::vector<SvmExample> fmp_pos, shape_pos;
  for (const auto& p : positives) {
    fmp_pos.push_back({fmp_features(model.fmp, p.pose, p.pyr), 1});
    try {
      shape_pos.push_back({shape_features(model, p.pose, p.pyr, p.odt), 1});
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateInput) throw;
    }
  }

  std::mt19937_64 rng(cfg.seed);
  std::vector<SvmExample> fmp_neg, shape_neg;
  for (int round = 0; round < cfg.rounds; ++round) {
    RoundReport rr;
    std::vector<SvmExample> new_fmp, new_shape;
    if (round == 0) {
      random_negatives(model, backgrounds, cfg, rng, new_fmp, new_shape);
    } else {
      for (auto& n : mine_fmp_negatives(model.fmp, backgrounds, cfg.negatives_per_image, cfg.detect))
        new_fmp.push_back({std::move(n.features), -1});
      for (auto& n : mine_shape_negatives(model, backgrounds, cfg.negatives_per_image, cfg.detect, cfg.mining_m))
        new_shape.push_back({std::move(n.features), -1});
    }
    rr.fmp_negatives = int(new_fmp.size());
    rr.shape_negatives = int(new_shape.size());
    fmp_neg.insert(fmp_neg.end(), new_fmp.begin(), new_fmp.end());
    shape_neg.insert(shape_neg.end(), new_shape.begin(), new_shape.end());

    SvmProblem p1;
    p1.dim = fmp_layout(model.fmp).dim();
    p1.c = cfg.svm_c;
    p1.examples = fmp_pos;
    p1.examples.insert(p1.examples.end(), fmp_neg.begin(), fmp_neg.end());
    p1.bounded = fmp_quadratic_indices(model.fmp);
    if (!fmp_neg.empty()) {
      rr.fmp = train_structural_svm(p1, cfg.max_epochs, cfg.tolerance, cfg.seed);
      set_fmp_parameters(model.fmp, rr.fmp.beta);
    }

    SvmProblem p2;
    p2.dim = shape_layout(model).dim();
    p2.c = cfg.svm_c;
    p2.examples = shape_pos;
    p2.examples.insert(p2.examples.end(), shape_neg.begin(), shape_neg.end());
    if (!shape_neg.empty() && !shape_pos.empty()) {
      rr.shape = train_structural_svm(p2, cfg.max_epochs, cfg.tolerance, cfg.seed);
      set_shape_parameters(model, rr.shape.beta);
    }
    if (report) report->rounds.push_back(std::move(rr));
  }
  return bundle;
}

}  // namespace shapepose
