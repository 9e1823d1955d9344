#include "shapepose/fmp.hpp"

#include "shapepose/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>
#include <unordered_map>

namespace shapepose {

Appearance Appearance::zeros(int parts, int types, int template_rows, int template_cols) {
  Appearance a;
  a.part_count = parts;
  a.type_count = types;
  a.template_rows = template_rows;
  a.template_cols = template_cols;
  a.templates.assign(std::size_t(parts) * types, Eigen::MatrixXd::Zero(template_rows * template_cols, kHogDims));
  a.part_bias = Eigen::MatrixXd::Zero(parts, types);
  a.pair_bias.assign(parts, Eigen::MatrixXd::Zero(types, types));
  if (parts > 0) a.pair_bias[0].resize(0, 0);
  return a;
}

FmpModel FmpModel::zeros(std::vector<int> parent, int types, int template_rows, int template_cols) {
  FmpModel m;
  const int k = int(parent.size());
  m.parent = std::move(parent);
  m.appearance = Appearance::zeros(k, types, template_rows, template_cols);
  m.anchor.assign(k, std::vector<Eigen::Vector2i>(types, Eigen::Vector2i::Zero()));
  m.deformation.assign(k, std::vector<Eigen::Vector4d>(std::size_t(types) * types, Eigen::Vector4d::Zero()));
  return m;
}

Eigen::Vector2d cell_to_pixel(int cell_x, int cell_y, double scale, int cell_size, int template_rows,
                              int template_cols) {
  const double lx = (cell_x + template_cols / 2.0) * cell_size - 0.5;
  const double ly = (cell_y + template_rows / 2.0) * cell_size - 0.5;
  return {level_to_image(lx, scale), level_to_image(ly, scale)};
}

Eigen::Vector2i pixel_to_cell(const Eigen::Vector2d& p, double scale, int cell_size, int template_rows,
                              int template_cols) {
  const double lx = image_to_level(p.x(), scale), ly = image_to_level(p.y(), scale);
  return {int(std::lround((lx + 0.5) / cell_size - template_cols / 2.0)),
          int(std::lround((ly + 0.5) / cell_size - template_rows / 2.0))};
}

double template_response(const Eigen::MatrixXd& weights, const HogLevel& level, int cx, int cy, int template_rows,
                         int template_cols) {
  double s = 0;
  for (int dy = 0; dy < template_rows; ++dy)
    for (int dx = 0; dx < template_cols; ++dx) s += level.cell(cy + dy, cx + dx).dot(weights.row(dy * template_cols + dx));
  return s;
}

double appearance_score(const Appearance& app, const HogLevel& level, int part, int type, int cx, int cy) {
  if (cx < 0 || cy < 0 || cx + app.template_cols > level.cols || cy + app.template_rows > level.rows)
    fail(ErrorKind::BoundsError, "part " + std::to_string(part) + " window leaves the pyramid level");
  return template_response(app.weights(part, type), level, cx, cy, app.template_rows, app.template_cols) +
         app.part_bias(part, type);
}

Eigen::Vector4d deformation_feature(const FmpModel& model, int child, int child_type, const Eigen::Vector2i& child_cell,
                                    const Eigen::Vector2i& parent_cell) {
  const Eigen::Vector2i d = child_cell - parent_cell - model.anchor[child][child_type];
  const double dx = d.x(), dy = d.y();
  return {dx, dy, dx * dx, dy * dy};
}

double pair_score(const FmpModel& model, int child, int child_type, int parent_type, const Eigen::Vector2i& child_cell,
                  const Eigen::Vector2i& parent_cell) {
  return model.appearance.pair_bias[child](child_type, parent_type) +
         model.deformation_weights(child, child_type, parent_type)
             .dot(deformation_feature(model, child, child_type, child_cell, parent_cell));
}

namespace {

void check_pose_shape(const FmpModel& model, const PoseCandidate& pose) {
  if (int(pose.parts.size()) != model.part_count())
    fail(ErrorKind::ArityError, "pose part count differs from the model");
  for (const auto& p : pose.parts)
    if (p.type < 0 || p.type >= model.type_count()) fail(ErrorKind::BoundsError, "part type out of range");
}

double pair_terms(const FmpModel& model, const PoseCandidate& pose) {
  double s = 0;
  for (int i = 1; i < model.part_count(); ++i) {
    const auto& c = pose.parts[i];
    const auto& p = pose.parts[model.parent[i]];
    s += pair_score(model, i, c.type, p.type, {c.cell_x, c.cell_y}, {p.cell_x, p.cell_y});
  }
  return s;
}

}  // namespace

double score_pose(const FmpModel& model, const PoseCandidate& pose, const HogPyramid& pyr) {
  check_pose_shape(model, pose);
  double s = 0;
  for (int i = 0; i < model.part_count(); ++i) {
    const auto& p = pose.parts[i];
    if (p.level < 0 || p.level >= int(pyr.levels.size())) fail(ErrorKind::BoundsError, "pyramid level out of range");
    s += appearance_score(model.appearance, pyr.levels[p.level], i, p.type, p.cell_x, p.cell_y);
  }
  return s + pair_terms(model, pose);
}

double score_pose(const FmpModel& model, const PoseCandidate& pose, const FmpResponses& responses) {
  check_pose_shape(model, pose);
  double s = 0;
  for (int i = 0; i < model.part_count(); ++i) {
    const auto& p = pose.parts[i];
    if (p.level < 0 || p.level >= int(responses.levels.size())) fail(ErrorKind::BoundsError, "level out of range");
    const auto& map = responses.levels[p.level].unary[i][p.type];
    if (p.cell_x < 0 || p.cell_y < 0 || p.cell_x >= map.cols() || p.cell_y >= map.rows())
      fail(ErrorKind::BoundsError, "part outside the response map");
    s += map(p.cell_y, p.cell_x);
  }
  return s + pair_terms(model, pose);
}

FmpResponses compute_responses(const FmpModel& model, const HogPyramid& pyr) {
  const auto& app = model.appearance;
  FmpResponses out;
  for (const auto& level : pyr.levels) {
    const int rows = level.rows - app.template_rows + 1;
    const int cols = level.cols - app.template_cols + 1;
    if (rows < 1 || cols < 1) break;  // later levels are smaller still

    LevelResponse lr;
    lr.scale = level.scale;
    lr.cell_size = pyr.cell_size;
    lr.template_rows = app.template_rows;
    lr.template_cols = app.template_cols;
    lr.unary.assign(model.part_count(), std::vector<Grid>(model.type_count()));
    for (int i = 0; i < model.part_count(); ++i) {
      for (int t = 0; t < model.type_count(); ++t) {
        const auto& w = app.weights(i, t);
        Grid map = Grid::Constant(rows, cols, app.part_bias(i, t));
        for (int dy = 0; dy < app.template_rows; ++dy)
          for (int dx = 0; dx < app.template_cols; ++dx) {
            const Eigen::VectorXd proj = level.features * w.row(dy * app.template_cols + dx).transpose();
            for (int y = 0; y < rows; ++y)
              for (int x = 0; x < cols; ++x) map(y, x) += proj(Eigen::Index(y + dy) * level.cols + x + dx);
          }
        lr.unary[i][t] = std::move(map);
      }
    }
    out.levels.push_back(std::move(lr));
  }
  if (out.levels.empty()) fail(ErrorKind::ImageTooSmall, "no pyramid level fits the part templates");
  return out;
}

namespace {

struct Transform2D {
  Grid value;
  Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> arg_x, arg_y;
};

// out(qy, qx) = max_{ry, rx} f(ry, rx) + lin . [dx, dy] + quad . [dx^2, dy^2],
// d = r - q - shift. Separable: rows first, then columns.
Transform2D quadratic_transform(const Grid& f, const Eigen::Vector2d& lin, const Eigen::Vector2d& quad,
                                const Eigen::Vector2d& shift) {
  const int rows = int(f.rows()), cols = int(f.cols());
  Transform2D t;
  Grid pass(rows, cols);
  Eigen::Array<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> arg_row(rows, cols);
  std::vector<double> in(std::max(rows, cols)), out(std::max(rows, cols));
  std::vector<int> arg(std::max(rows, cols));
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) in[x] = f(y, x);
    max_quadratic_1d(std::span<const double>(in.data(), cols), lin.x(), quad.x(), shift.x(),
                     std::span(out.data(), cols), std::span(arg.data(), cols));
    for (int x = 0; x < cols; ++x) {
      pass(y, x) = out[x];
      arg_row(y, x) = arg[x];
    }
  }
  t.value.resize(rows, cols);
  t.arg_x.resize(rows, cols);
  t.arg_y.resize(rows, cols);
  for (int x = 0; x < cols; ++x) {
    for (int y = 0; y < rows; ++y) in[y] = pass(y, x);
    max_quadratic_1d(std::span<const double>(in.data(), rows), lin.y(), quad.y(), shift.y(),
                     std::span(out.data(), rows), std::span(arg.data(), rows));
    for (int y = 0; y < rows; ++y) {
      t.value(y, x) = out[y];
      t.arg_y(y, x) = arg[y];
      t.arg_x(y, x) = arg_row(arg[y], x);
    }
  }
  return t;
}

Grid type_slice(const Eigen::VectorXd& v, int type, int types, int rows, int cols) {
  Grid g(rows, cols);
  for (int y = 0; y < rows; ++y)
    for (int x = 0; x < cols; ++x) g(y, x) = v((Eigen::Index(y) * cols + x) * types + type);
  return g;
}

}  // namespace

PairScore fmp_pair_score(const FmpModel& model, const LevelResponse& level) {
  const int cols = level.cols(), types = model.type_count();
  return [&model, cols, types](int child, int cs, int ps) {
    const int ct = cs % types, pt = ps % types;
    const int cc = cs / types, pc = ps / types;
    return pair_score(model, child, ct, pt, {cc % cols, cc / cols}, {pc % cols, pc / cols});
  };
}

TreeTables fmp_tables(const FmpModel& model, const LevelResponse& level) {
  const int k = model.part_count(), types = model.type_count();
  const int rows = level.rows(), cols = level.cols();
  const int n = rows * cols * types;

  std::vector<Eigen::VectorXd> unary(k, Eigen::VectorXd(n));
  for (int i = 0; i < k; ++i)
    for (int y = 0; y < rows; ++y)
      for (int x = 0; x < cols; ++x)
        for (int t = 0; t < types; ++t) unary[i]((Eigen::Index(y) * cols + x) * types + t) = level.unary[i][t](y, x);
  TreeTables tab = make_tree_tables(model.parent, std::move(unary));

  auto state_of = [&](int x, int y, int t) { return (y * cols + x) * types + t; };
  const double neg_inf = -std::numeric_limits<double>::infinity();

  // Leaf-to-root.
  for (int c = k - 1; c >= 0; --c) {
    tab.subtree[c] = tab.unary[c];
    for (int kid : tab.children[c]) tab.subtree[c] += tab.up[kid];
    if (c == 0) break;

    tab.up[c] = Eigen::VectorXd::Constant(n, neg_inf);
    tab.up_arg[c] = Eigen::VectorXi::Zero(n);
    for (int tc = 0; tc < types; ++tc) {
      const Grid score = type_slice(tab.subtree[c], tc, types, rows, cols);
      const Eigen::Vector2d shift = model.anchor[c][tc].cast<double>();
      for (int tp = 0; tp < types; ++tp) {
        const auto& w = model.deformation_weights(c, tc, tp);
        const double bias = model.appearance.pair_bias[c](tc, tp);
        const auto dt = quadratic_transform(score, {w(0), w(1)}, {w(2), w(3)}, shift);
        for (int y = 0; y < rows; ++y)
          for (int x = 0; x < cols; ++x) {
            const int s = state_of(x, y, tp);
            const double v = bias + dt.value(y, x);
            if (v > tab.up[c](s)) {
              tab.up[c](s) = v;
              tab.up_arg[c](s) = state_of(dt.arg_x(y, x), dt.arg_y(y, x), tc);
            }
          }
      }
    }
  }

  // Root-to-leaf.
  tab.down[0] = Eigen::VectorXd::Zero(n);
  tab.down_arg[0] = Eigen::VectorXi::Constant(n, -1);
  for (int c = 1; c < k; ++c) {
    const int p = model.parent[c];
    Eigen::VectorXd outside = tab.unary[p] + tab.down[p];
    for (int kid : tab.children[p])
      if (kid != c) outside += tab.up[kid];

    tab.down[c] = Eigen::VectorXd::Constant(n, neg_inf);
    tab.down_arg[c] = Eigen::VectorXi::Zero(n);
    for (int tp = 0; tp < types; ++tp) {
      const Grid score = type_slice(outside, tp, types, rows, cols);
      for (int tc = 0; tc < types; ++tc) {
        const auto& w = model.deformation_weights(c, tc, tp);
        const double bias = model.appearance.pair_bias[c](tc, tp);
        const Eigen::Vector2d shift = -model.anchor[c][tc].cast<double>();
        const auto dt = quadratic_transform(score, {-w(0), -w(1)}, {w(2), w(3)}, shift);
        for (int y = 0; y < rows; ++y)
          for (int x = 0; x < cols; ++x) {
            const int s = state_of(x, y, tc);
            const double v = bias + dt.value(y, x);
            if (v > tab.down[c](s)) {
              tab.down[c](s) = v;
              tab.down_arg[c](s) = state_of(dt.arg_x(y, x), dt.arg_y(y, x), tp);
            }
          }
      }
    }
  }
  return tab;
}

PoseCandidate make_candidate(const FmpModel& model, const LevelResponse& level, int level_index,
                             const std::vector<int>& states, double score) {
  const int types = model.type_count(), cols = level.cols();
  PoseCandidate pose;
  pose.level = level_index;
  pose.score = score;
  pose.stage1_score = score;
  for (int s : states) {
    PartLocation loc;
    loc.type = s % types;
    loc.cell_x = (s / types) % cols;
    loc.cell_y = (s / types) / cols;
    loc.level = level_index;
    const auto px = cell_to_pixel(loc.cell_x, loc.cell_y, level.scale, level.cell_size, level.template_rows,
                                  level.template_cols);
    loc.x = px.x();
    loc.y = px.y();
    pose.parts.push_back(loc);
  }
  return pose;
}

PoseCandidate infer_best(const FmpModel& model, const FmpResponses& responses) {
  if (responses.levels.empty()) fail(ErrorKind::ImageTooSmall, "empty response pyramid");
  PoseCandidate best;
  bool found = false;
  for (int l = 0; l < int(responses.levels.size()); ++l) {
    const auto& level = responses.levels[l];
    const auto tables = fmp_tables(model, level);
    const auto config = best_configuration(tables, fmp_pair_score(model, level));
    if (!found || config.score > best.score) {
      best = make_candidate(model, level, l, config.states, config.score);
      found = true;
    }
  }
  return best;
}

PoseCandidate infer_best(const FmpModel& model, const HogPyramid& pyr) {
  return infer_best(model, compute_responses(model, pyr));
}

namespace {

struct Ranked {
  double score;
  int level;
  std::vector<int> states;
};

bool ranked_before(const Ranked& a, const Ranked& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.level != b.level) return a.level < b.level;
  return a.states < b.states;
}

}  // namespace

std::vector<PoseCandidate> infer_m_best(const FmpModel& model, const FmpResponses& responses, int m,
                                        double nms_radius) {
  if (m < 1) fail(ErrorKind::ConfigError, "M must be at least 1");
  if (responses.levels.empty()) fail(ErrorKind::ImageTooSmall, "empty response pyramid");
  std::vector<PoseCandidate> out;

  if (nms_radius <= 0) {
    std::vector<Ranked> pool;
    for (int l = 0; l < int(responses.levels.size()); ++l) {
      const auto& level = responses.levels[l];
      const auto tables = fmp_tables(model, level);
      for (auto& c : m_best_configurations(tables, fmp_pair_score(model, level), m))
        pool.push_back({c.score, l, std::move(c.states)});
    }
    std::sort(pool.begin(), pool.end(), ranked_before);
    if (int(pool.size()) > m) pool.resize(m);
    for (const auto& r : pool) out.push_back(make_candidate(model, responses.levels[r.level], r.level, r.states, r.score));
    return out;
  }

  // Seeds: every (level, part, state) with its max-marginal value; the best
  // configuration through a seed scores exactly that value.
  struct Seed {
    double value;
    int level, node, state;
  };
  std::vector<TreeTables> tables;
  std::vector<Seed> seeds;
  for (int l = 0; l < int(responses.levels.size()); ++l) {
    tables.push_back(fmp_tables(model, responses.levels[l]));
    const auto& t = tables.back();
    for (int i = 0; i < t.nodes(); ++i) {
      const Eigen::VectorXd mm = t.max_marginal(i);
      for (int s = 0; s < mm.size(); ++s) seeds.push_back({mm(s), l, i, s});
    }
  }
  std::stable_sort(seeds.begin(), seeds.end(), [](const Seed& a, const Seed& b) { return a.value > b.value; });

  std::set<std::pair<int, std::vector<int>>> seen;
  std::vector<Ranked> kept;
  std::vector<Eigen::Vector2d> kept_roots;
  for (const auto& seed : seeds) {
    if (int(kept.size()) >= m) break;
    auto states = backtrack_from(tables[seed.level], seed.node, seed.state);
    if (!seen.emplace(seed.level, states).second) continue;

    const auto& level = responses.levels[seed.level];
    const int cell = states[0] / model.type_count();
    const Eigen::Vector2d root = cell_to_pixel(cell % level.cols(), cell / level.cols(), level.scale, level.cell_size,
                                               level.template_rows, level.template_cols);
    bool suppressed = false;
    for (const auto& r : kept_roots)
      if ((r - root).norm() < nms_radius) {
        suppressed = true;
        break;
      }
    if (suppressed) continue;
    const double score = score_configuration(tables[seed.level], fmp_pair_score(model, level), states);
    kept.push_back({score, seed.level, std::move(states)});
    kept_roots.push_back(root);
  }
  std::stable_sort(kept.begin(), kept.end(), ranked_before);
  for (const auto& r : kept) out.push_back(make_candidate(model, responses.levels[r.level], r.level, r.states, r.score));
  return out;
}

std::vector<PoseCandidate> infer_m_best(const FmpModel& model, const HogPyramid& pyr, int m, double nms_radius) {
  return infer_m_best(model, compute_responses(model, pyr), m, nms_radius);
}

}  // namespace shapepose
