#include "shapepose/scfmp.hpp"

#include "shapepose/error.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <tuple>

namespace shapepose {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double orient(const Eigen::Vector2d& v) { return std::atan2(v.y(), v.x()); }
}  // namespace

ShapePriors ShapePriors::constant(int parts, double radius, double flare, double alpha) {
  ShapePriors p;
  p.radius.assign(parts, {radius, 0});
  p.flare.assign(parts, {flare, 0});
  p.alpha.assign(parts, {alpha, 0});
  return p;
}

ScfmpModel ScfmpModel::zeros(std::vector<int> parent, int types, int template_rows, int template_cols) {
  ScfmpModel m;
  const int k = int(parent.size());
  m.fmp = FmpModel::zeros(std::move(parent), types, template_rows, template_cols);
  m.appearance = Appearance::zeros(k, types, template_rows, template_cols);
  m.shape_weights.assign(k, Vector5d::Zero());
  m.chamfer_weights.assign(k, 0.0);
  m.priors = ShapePriors::constant(k, 1.0);
  return m;
}

int StateSpace::proposed(int part) const {
  int n = 0;
  for (double u : unary[part])
    if (std::isfinite(u)) ++n;
  return n;
}

PartState StateSpace::state(int part, int s) const {
  const auto& site = sites[part][s / type_count];
  PartState z;
  z.x = site.x;
  z.y = site.y;
  z.r = site.r;
  z.eta = site.eta;
  z.type = s % type_count;
  return z;
}

PartState prior_state(const ScfmpModel& model, int part, const PartLocation& loc, double level_scale) {
  PartState z;
  z.x = loc.x;
  z.y = loc.y;
  z.r = model.priors.radius[part].median / level_scale;
  z.eta = model.priors.flare[part].median;
  z.type = loc.type;
  return z;
}

void bind_orientations(PartState& child, PartState& parent, double alpha_child, double alpha_parent) {
  const double line = orient(parent.center() - child.center());
  child.theta = wrap_angle(line + alpha_child);
  parent.theta = wrap_angle(line + alpha_parent);
}

PairFeatures pair_features(const ScfmpModel& model, int child, PartState zi, PartState zj,
                           const OrientedDistanceTransform& odt, bool with_chamfer) {
  if (!((zj.center() - zi.center()).squaredNorm() > 0))
    fail(ErrorKind::DegenerateInput, "adjacent part centers coincide");
  const int parent = model.parent()[child];
  bind_orientations(zi, zj, model.priors.alpha[child].median, model.priors.alpha[parent].median);
  PairFeatures f;
  f.psi = geometric_descriptor(zi, zj);
  if (with_chamfer) f.theta = shape_consistency(zi, zj, odt, model.sample_step);
  return f;
}

double score_pair(const ScfmpModel& model, int child, const PartState& zi, const PartState& zj,
                  const OrientedDistanceTransform& odt) {
  const auto f = pair_features(model, child, zi, zj, odt);
  return model.appearance.pair_bias[child](zi.type, zj.type) + model.shape_weights[child].dot(f.psi) +
         model.chamfer_weights[child] * f.theta;
}

StateSpace build_state_space(const std::vector<PoseCandidate>& stage1, const ScfmpModel& model,
                             const HogPyramid& pyr) {
  if (stage1.empty()) fail(ErrorKind::EmptyStateSpace, "no stage-1 candidates");
  const int k = model.part_count(), types = model.type_count();

  StateSpace space;
  space.type_count = types;
  space.sites.resize(k);
  space.unary.resize(k);
  for (int i = 0; i < k; ++i) {
    // (level, y, x) -> proposed types, in deterministic order.
    std::map<std::tuple<int, int, int>, std::set<int>> found;
    std::map<std::tuple<int, int, int>, PartLocation> where;
    for (const auto& c : stage1) {
      if (int(c.parts.size()) != k) fail(ErrorKind::ArityError, "stage-1 candidate part count differs");
      const auto& p = c.parts[i];
      const auto key = std::make_tuple(p.level, p.cell_y, p.cell_x);
      found[key].insert(p.type);
      where.emplace(key, p);
    }
    auto& sites = space.sites[i];
    space.unary[i] = Eigen::VectorXd::Constant(Eigen::Index(found.size()) * types, kNegInf);
    for (const auto& [key, tset] : found) {
      const auto& loc = where.at(key);
      if (loc.level < 0 || loc.level >= int(pyr.levels.size())) fail(ErrorKind::BoundsError, "level out of range");
      const auto& level = pyr.levels[loc.level];
      const PartState z = prior_state(model, i, loc, level.scale);
      const int s = int(sites.size());
      sites.push_back({loc.level, loc.cell_x, loc.cell_y, loc.x, loc.y, z.r, z.eta});
      for (int t : tset)
        space.unary[i](s * types + t) = appearance_score(model.appearance, level, i, t, loc.cell_x, loc.cell_y);
    }
  }
  return space;
}

double score_shape_pose(const ScfmpModel& model, const PoseCandidate& pose, const HogPyramid& pyr,
                        const OrientedDistanceTransform& odt) {
  const int k = model.part_count();
  if (int(pose.parts.size()) != k) fail(ErrorKind::ArityError, "pose part count differs from the model");
  std::vector<PartState> z(k);
  double s = 0;
  for (int i = 0; i < k; ++i) {
    const auto& p = pose.parts[i];
    if (p.level < 0 || p.level >= int(pyr.levels.size())) fail(ErrorKind::BoundsError, "level out of range");
    const auto& level = pyr.levels[p.level];
    s += appearance_score(model.appearance, level, i, p.type, p.cell_x, p.cell_y);
    z[i] = prior_state(model, i, p, level.scale);
  }
  for (int i = 1; i < k; ++i) s += score_pair(model, i, z[i], z[model.parent()[i]], odt);
  return s;
}

namespace {

// w_ij . Psi + wbar_ij . Theta over all (child site, parent site) pairs;
// -inf across levels or for coincident centers.
Grid site_table(const StateSpace& space, const ScfmpModel& model, int child, const OrientedDistanceTransform& odt) {
  const int parent = model.parent()[child];
  const auto& cs = space.sites[child];
  const auto& ps = space.sites[parent];
  const auto& w = model.shape_weights[child];
  const double wbar = model.chamfer_weights[child];
  const bool chamfer = wbar != 0.0;
  Grid g(cs.size(), ps.size());
  for (int a = 0; a < int(cs.size()); ++a)
    for (int b = 0; b < int(ps.size()); ++b) {
      if (cs[a].level != ps[b].level || (cs[a].x == ps[b].x && cs[a].y == ps[b].y)) {
        g(a, b) = kNegInf;
        continue;
      }
      const auto f = pair_features(model, child, space.state(child, a * space.type_count),
                                   space.state(parent, b * space.type_count), odt, chamfer);
      g(a, b) = w.dot(f.psi) + (chamfer ? wbar * f.theta : 0.0);
    }
  return g;
}

}  // namespace

TreeTables shape_tables(const StateSpace& space, const ScfmpModel& model, const OrientedDistanceTransform& odt,
                        PairScore* pair_out) {
  const int k = model.part_count(), types = model.type_count();
  if (space.part_count() != k || space.type_count != types)
    fail(ErrorKind::DimensionMismatch, "state space does not match the model");
  for (int i = 0; i < k; ++i)
    if (space.sites[i].empty()) fail(ErrorKind::EmptyStateSpace, "part " + std::to_string(i) + " has no states");

  auto tables_ptr = std::make_shared<std::vector<Grid>>(k);
  auto& sites = *tables_ptr;
  for (int c = 1; c < k; ++c) sites[c] = site_table(space, model, c, odt);

  TreeTables tab = make_tree_tables(model.parent(), space.unary);
  const auto& bias = model.appearance.pair_bias;

  for (int c = k - 1; c >= 0; --c) {
    tab.subtree[c] = tab.unary[c];
    for (int kid : tab.children[c]) tab.subtree[c] += tab.up[kid];
    if (c == 0) break;

    const int p = model.parent()[c];
    const int nc = int(space.sites[c].size()), np = int(space.sites[p].size());
    // Best child type per (child site, parent type), then best child site.
    Eigen::MatrixXd inner = Eigen::MatrixXd::Constant(nc, types, kNegInf);
    Eigen::MatrixXi inner_arg = Eigen::MatrixXi::Zero(nc, types);
    for (int a = 0; a < nc; ++a)
      for (int tp = 0; tp < types; ++tp)
        for (int tc = 0; tc < types; ++tc) {
          const double v = tab.subtree[c](a * types + tc) + bias[c](tc, tp);
          if (v > inner(a, tp)) {
            inner(a, tp) = v;
            inner_arg(a, tp) = tc;
          }
        }
    tab.up[c] = Eigen::VectorXd::Constant(Eigen::Index(np) * types, kNegInf);
    tab.up_arg[c] = Eigen::VectorXi::Zero(Eigen::Index(np) * types);
    for (int b = 0; b < np; ++b)
      for (int tp = 0; tp < types; ++tp) {
        double best = kNegInf;
        int arg = 0;
        for (int a = 0; a < nc; ++a) {
          const double v = sites[c](a, b) + inner(a, tp);
          if (v > best) {
            best = v;
            arg = a * types + inner_arg(a, tp);
          }
        }
        tab.up[c](b * types + tp) = best;
        tab.up_arg[c](b * types + tp) = arg;
      }
  }

  tab.down[0] = Eigen::VectorXd::Zero(tab.states(0));
  tab.down_arg[0] = Eigen::VectorXi::Constant(tab.states(0), -1);
  for (int c = 1; c < k; ++c) {
    const int p = model.parent()[c];
    Eigen::VectorXd outside = tab.unary[p] + tab.down[p];
    for (int kid : tab.children[p])
      if (kid != c) outside += tab.up[kid];

    const int nc = int(space.sites[c].size()), np = int(space.sites[p].size());
    Eigen::MatrixXd inner = Eigen::MatrixXd::Constant(np, types, kNegInf);
    Eigen::MatrixXi inner_arg = Eigen::MatrixXi::Zero(np, types);
    for (int b = 0; b < np; ++b)
      for (int tc = 0; tc < types; ++tc)
        for (int tp = 0; tp < types; ++tp) {
          const double v = outside(b * types + tp) + bias[c](tc, tp);
          if (v > inner(b, tc)) {
            inner(b, tc) = v;
            inner_arg(b, tc) = tp;
          }
        }
    tab.down[c] = Eigen::VectorXd::Constant(Eigen::Index(nc) * types, kNegInf);
    tab.down_arg[c] = Eigen::VectorXi::Zero(Eigen::Index(nc) * types);
    for (int a = 0; a < nc; ++a)
      for (int tc = 0; tc < types; ++tc) {
        double best = kNegInf;
        int arg = 0;
        for (int b = 0; b < np; ++b) {
          const double v = sites[c](a, b) + inner(b, tc);
          if (v > best) {
            best = v;
            arg = b * types + inner_arg(b, tc);
          }
        }
        tab.down[c](a * types + tc) = best;
        tab.down_arg[c](a * types + tc) = arg;
      }
  }

  if (pair_out) {
    *pair_out = [tables_ptr, &model, types](int child, int cs, int ps) {
      return (*tables_ptr)[child](cs / types, ps / types) +
             model.appearance.pair_bias[child](cs % types, ps % types);
    };
  }
  return tab;
}

std::vector<PoseCandidate> infer_m_best_shape(const StateSpace& space, const ScfmpModel& model,
                                              const OrientedDistanceTransform& odt, int m) {
  if (m < 1) fail(ErrorKind::ConfigError, "M must be at least 1");
  if (space.part_count() == 0) fail(ErrorKind::EmptyStateSpace, "empty state space");
  PairScore pair;
  const TreeTables tables = shape_tables(space, model, odt, &pair);
  const int k = model.part_count(), types = model.type_count();

  std::vector<PoseCandidate> out;
  std::set<std::vector<int>> seen;
  for (const auto& c : m_best_configurations(tables, pair, m)) {
    if (!std::isfinite(c.score)) break;
    if (!seen.insert(c.states).second) continue;

    PoseCandidate pose;
    pose.score = c.score;
    std::vector<PartState> z(k);
    for (int i = 0; i < k; ++i) {
      const auto& site = space.sites[i][c.states[i] / types];
      z[i] = space.state(i, c.states[i]);
      pose.parts.push_back({site.cell_x, site.cell_y, site.level, z[i].type, site.x, site.y});
    }
    pose.level = pose.parts[0].level;
    for (int i = 1; i < k; ++i) {
      const int p = model.parent()[i];
      PartState child = z[i], parent = z[p];
      bind_orientations(child, parent, model.priors.alpha[i].median, model.priors.alpha[p].median);
      z[i].theta = child.theta;
    }
    if (k > 1) {
      const int first = tables.children[0].front();
      PartState child = space.state(first, c.states[first]), root = z[0];
      bind_orientations(child, root, model.priors.alpha[first].median, model.priors.alpha[0].median);
      z[0].theta = root.theta;
    } else {
      z[0].theta = wrap_angle(model.priors.alpha[0].median);
    }
    pose.states = std::move(z);
    out.push_back(std::move(pose));
  }
  return out;
}

Detection detect(const ScfmpModel& model, const Image& img, const DetectParams& params) {
  const HogPyramid pyr = hog_pyramid(img, params.hog);
  const FmpResponses responses = compute_responses(model.fmp, pyr);
  Detection d;
  d.stage1 = infer_m_best(model.fmp, responses, params.stage1_m, params.nms_radius);
  const auto odt = oriented_distance_transform(detect_edges(img, params.edges), params.orientation_bins);
  d.stage2 = infer_m_best_shape(build_state_space(d.stage1, model, pyr), model, odt, params.stage2_m);
  for (auto& c : d.stage2) c.stage1_score = score_pose(model.fmp, c, responses);
  if (d.stage2.empty()) {
    // Every proposed configuration has coincident adjacent centers.
    d.stage2_fallback = true;
    d.stage2.assign(d.stage1.begin(), d.stage1.begin() + std::min<std::size_t>(d.stage1.size(), params.stage2_m));
  }
  return d;
}

}  // namespace shapepose
