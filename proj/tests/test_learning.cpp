#include "helpers.hpp"

#include "shapepose/edges.hpp"
#include "shapepose/error.hpp"
#include "shapepose/learning.hpp"
#include "shapepose/model_io.hpp"
#include "shapepose/svm.hpp"
#include "shapepose/synth.hpp"

#include <algorithm>
#include <random>

using namespace shapepose;

namespace {

SparseVec sparse(std::initializer_list<double> v) {
  SparseVec s(int(v.size()));
  int i = 0;
  for (double x : v) {
    if (x != 0) s.insert(i) = x;
    ++i;
  }
  return s;
}

// Negatives are stored with their feature vector; the label carries the sign.
SvmProblem toy_1d() {
  SvmProblem p;
  p.dim = 1;
  p.c = 1;
  for (int i = 0; i < 3; ++i) {
    p.examples.push_back({sparse({2.0}), 1});
    p.examples.push_back({sparse({-2.0}), -1});
  }
  return p;
}

SvmProblem overlapping(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> n01(0, 1);
  SvmProblem p;
  p.dim = 3;
  p.c = 0.5;
  for (int i = 0; i < n; ++i) {
    const int y = i % 2 ? 1 : -1;
    p.examples.push_back({sparse({y * 0.5 + n01(rng), n01(rng), 1.0}), y});
  }
  return p;
}

Image noise_image(std::mt19937_64& rng, int h, int w) {
  std::uniform_real_distribution<double> u(0, 1);
  Image img(h, w);
  for (auto& v : img.reshaped()) v = u(rng);
  return gaussian_blur(img, 1.0);
}

void randomize(std::mt19937_64& rng, Appearance& a) {
  std::normal_distribution<double> n01(0, 1);
  for (auto& t : a.templates)
    for (auto& v : t.reshaped()) v = n01(rng);
  for (auto& v : a.part_bias.reshaped()) v = n01(rng);
  for (std::size_t c = 1; c < a.pair_bias.size(); ++c)
    for (auto& v : a.pair_bias[c].reshaped()) v = n01(rng);
}

ScfmpModel random_model(std::mt19937_64& rng, int k, int types) {
  std::normal_distribution<double> n01(0, 1);
  ScfmpModel m = ScfmpModel::zeros(chain_parent(k), types, 2, 2);
  randomize(rng, m.fmp.appearance);
  randomize(rng, m.appearance);
  for (int c = 1; c < k; ++c) {
    for (auto& a : m.fmp.anchor[c]) a = {int(std::lround(2 * n01(rng))), int(std::lround(2 * n01(rng)))};
    for (auto& w : m.fmp.deformation[c]) w << n01(rng), n01(rng), -std::abs(n01(rng)), -std::abs(n01(rng));
    for (auto& v : m.shape_weights[c]) v = n01(rng);
    m.chamfer_weights[c] = n01(rng);
  }
  for (int i = 0; i < k; ++i) {
    m.priors.radius[i].median = 1 + std::abs(n01(rng));
    m.priors.flare[i].median = 0.2 * n01(rng);
    m.priors.alpha[i].median = 0.2 * n01(rng);
  }
  return m;
}

PoseCandidate random_pose(std::mt19937_64& rng, const ScfmpModel& m, const HogPyramid& pyr) {
  PoseCandidate c;
  c.level = std::uniform_int_distribution<int>(0, int(pyr.levels.size()) - 1)(rng);
  const auto& level = pyr.levels[c.level];
  std::uniform_int_distribution<int> ux(0, level.cols - 2), uy(0, level.rows - 2), ut(0, m.type_count() - 1);
  for (int i = 0; i < m.part_count(); ++i) {
    PartLocation p;
    p.level = c.level;
    do {
      p.cell_x = ux(rng);
      p.cell_y = uy(rng);
    } while (i > 0 && p.cell_x == c.parts.back().cell_x && p.cell_y == c.parts.back().cell_y);
    p.type = ut(rng);
    const auto px = cell_to_pixel(p.cell_x, p.cell_y, level.scale, 4, 2, 2);
    p.x = px.x();
    p.y = px.y();
    c.parts.push_back(p);
  }
  return c;
}

Dataset dataset_from(const SynthSequence& seq, bool radii = true) {
  Dataset d;
  d.part_count = int(seq.parent.size());
  LabeledSequence ls;
  ls.frames = seq.frames;
  ls.annotations = seq.annotations;
  if (!radii)
    for (auto& a : ls.annotations) a.radii.reset();
  d.sequences.push_back(std::move(ls));
  return d;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_SUITE("learning") {

TEST_CASE("1d separable toy has the analytic solution") {
  const SvmResult r = train_structural_svm(toy_1d(), 1000, 1e-9);
  REQUIRE(r.beta.size() == 1);
  CHECK(r.beta(0) == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(r.converged);
  for (const auto& e : toy_1d().examples) CHECK(e.label * r.beta.dot(Eigen::VectorXd(e.features)) >= 1 - 1e-3);
  for (double a : r.alpha) {
    CHECK(a >= 0);
    CHECK(a <= 1.0);
  }
}

TEST_CASE("duplicating the set with C/2 gives the same solution") {
  std::mt19937_64 rng(1);
  SvmProblem p = overlapping(rng, 40);
  SvmProblem d = p;
  d.examples.insert(d.examples.end(), p.examples.begin(), p.examples.end());
  d.c = p.c / 2;
  const SvmResult a = train_structural_svm(p, 100000, 1e-12);
  const SvmResult b = train_structural_svm(d, 100000, 1e-12);
  CHECK((a.beta - b.beta).norm() < 1e-6);
  CHECK(a.primal == doctest::Approx(b.primal).epsilon(1e-9));
}

TEST_CASE("dual descent is monotone and respects the box and bounds") {
  std::mt19937_64 rng(2);
  SvmProblem p = overlapping(rng, 60);
  p.bounded = {1};
  const SvmResult r = train_structural_svm(p, 5000, 1e-10);
  for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i] <= r.history[i - 1] + 1e-12);
  for (double a : r.alpha) {
    CHECK(a >= 0);
    CHECK(a <= p.c + 1e-15);
  }
  CHECK(r.beta(1) <= p.upper_bound + 1e-12);
  CHECK(r.primal - r.dual >= -1e-9);
  CHECK(r.primal - r.dual <= 1e-10 * std::max(1.0, r.primal) + 1e-12);
  CHECK(svm_primal(p, r.beta) == doctest::Approx(r.primal));
}

TEST_CASE("svm needs both labels") {
  SvmProblem p = toy_1d();
  p.examples.erase(std::remove_if(p.examples.begin(), p.examples.end(), [](const SvmExample& e) { return e.label < 0; }),
                   p.examples.end());
  CHECK_THROWS_KIND(train_structural_svm(p, 10, 1e-3), ErrorKind::InsufficientData);
}

TEST_CASE("beta . Gamma reproduces both scores") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Image img = noise_image(rng, 40, 40);
    const HogPyramid pyr = hog_pyramid(img, {4, 2, 1.25});
    const auto odt = oriented_distance_transform(detect_edges(img, 0.02, 0.04, 0), 8);
    const ScfmpModel m = random_model(rng, 2 + trial % 3, 1 + trial % 3);
    const Eigen::VectorXd b1 = fmp_parameters(m.fmp), b2 = shape_parameters(m);
    CHECK(b1.size() == fmp_layout(m.fmp).dim());
    CHECK(b2.size() == shape_layout(m).dim());
    for (int n = 0; n < 10; ++n) {
      const auto pose = random_pose(rng, m, pyr);
      const Eigen::VectorXd g1 = fmp_features(m.fmp, pose, pyr), g2 = shape_features(m, pose, pyr, odt);
      CHECK(b1.dot(g1) == doctest::Approx(score_pose(m.fmp, pose, pyr)).epsilon(1e-12));
      CHECK(b2.dot(g2) == doctest::Approx(score_shape_pose(m, pose, pyr, odt)).epsilon(1e-12));
    }
  }
}

TEST_CASE("parameter vectors round trip") {
  std::mt19937_64 rng(4);
  ScfmpModel m = random_model(rng, 3, 2);
  ScfmpModel z = ScfmpModel::zeros(chain_parent(3), 2, 2, 2);
  z.fmp.anchor = m.fmp.anchor;
  set_fmp_parameters(z.fmp, fmp_parameters(m.fmp));
  set_shape_parameters(z, shape_parameters(m));
  CHECK(fmp_parameters(z.fmp) == fmp_parameters(m.fmp));
  CHECK(shape_parameters(z) == shape_parameters(m));
  CHECK_THROWS_KIND(set_fmp_parameters(z.fmp, Eigen::VectorXd::Zero(3)), ErrorKind::DimensionMismatch);
  for (int j : fmp_quadratic_indices(m.fmp)) CHECK(fmp_parameters(m.fmp)(j) <= 0);
}

TEST_CASE("constant radii give exact priors") {
  SynthConfig cfg;
  cfg.frames = 3;
  const auto seq = synth_sequence(cfg);
  Dataset d = dataset_from(seq);
  for (auto& a : d.sequences[0].annotations) a.radii = std::vector<double>(cfg.parts, 3.0);
  const ShapePriors p = learn_shape_priors(d, seq.parent);
  for (int i = 0; i < cfg.parts; ++i) {
    CHECK(p.radius[i].median == 3.0);
    CHECK(p.radius[i].spread == 0.0);
    CHECK(p.flare[i].median == 0.0);
  }
}

TEST_CASE("straight cylinder gives zero flare and zero relative angle") {
  SynthConfig cfg;
  cfg.frames = 4;
  cfg.bend_amplitude = 0;
  cfg.taper = 0;
  cfg.noise = 0;
  const auto seq = synth_sequence(cfg);
  for (bool radii : {true, false}) {
    const ShapePriors p = learn_shape_priors(dataset_from(seq, radii), seq.parent);
    for (int i = 0; i < cfg.parts; ++i) {
      CHECK(std::abs(p.flare[i].median) < 0.05);
      CHECK(std::abs(p.alpha[i].median) < 0.05);
    }
  }
}

TEST_CASE("priors recover the generator fields") {
  SynthConfig cfg;
  cfg.frames = 12;
  cfg.noise = 0;
  const auto seq = synth_sequence(cfg);
  for (bool radii : {true, false}) {
    const ShapePriors p = learn_shape_priors(dataset_from(seq, radii), seq.parent);
    for (int i = 0; i < cfg.parts; ++i) {
      std::vector<double> r, eta, alpha;
      for (const auto& z : seq.truth) {
        r.push_back(z[i].r);
        eta.push_back(z[i].eta);
        if (i > 0) alpha.push_back(wrap_angle(z[i].theta - std::atan2(z[i - 1].y - z[i].y, z[i - 1].x - z[i].x)));
        else alpha.push_back(wrap_angle(z[0].theta - std::atan2(z[0].y - z[1].y, z[0].x - z[1].x)));
      }
      CAPTURE(radii);
      CAPTURE(i);
      // Edge-derived radii are limited by the pixel raster.
      CHECK(std::abs(p.radius[i].median - median(r)) <= (radii ? 0.15 * median(r) : 1.0));
      CHECK(std::abs(p.flare[i].median - median(eta)) <= 0.1);
      CHECK(std::abs(wrap_angle(p.alpha[i].median - median(alpha))) <= 0.1);
    }
  }
}

TEST_CASE("keypoint orientation") {
  const std::vector<Eigen::Vector2d> kp = {{0, 0}, {0, 10}, {0, 20}};
  const auto parent = chain_parent(3);
  CHECK(keypoint_orientation(kp, parent, 1) == doctest::Approx(-std::numbers::pi / 2));
  CHECK(keypoint_orientation(kp, parent, 0) == doctest::Approx(-std::numbers::pi / 2));
  CHECK(keypoint_orientation(kp, parent, 2) == doctest::Approx(-std::numbers::pi / 2));
}

TEST_CASE("k-means separates clusters and is deterministic") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01(0, 0.3);
  std::vector<Eigen::Vector2d> pts;
  for (int i = 0; i < 30; ++i) pts.push_back(Eigen::Vector2d(i % 3 * 10 + n01(rng), n01(rng)));
  const auto a = kmeans(pts, 3, 7), b = kmeans(pts, 3, 7);
  CHECK(a.assignment == b.assignment);
  for (int i = 0; i < 30; ++i)
    for (int j = 0; j < 30; ++j) CHECK((a.assignment[i] == a.assignment[j]) == (i % 3 == j % 3));
  CHECK_THROWS_KIND(kmeans({}, 2, 1), ErrorKind::InsufficientData);
}

TEST_CASE("mined negatives") {
  DetectParams params;
  params.hog.levels = 2;
  params.nms_radius = 4;
  SUBCASE("blank background and zero model give zero appearance features") {
    const ScfmpModel m = ScfmpModel::zeros(chain_parent(3), 2, 2, 2);
    const auto neg = mine_fmp_negatives(m.fmp, {Image::Constant(40, 40, 0.5)}, 5, params, -1.0);
    REQUIRE(neg.size() == 5);
    const FeatureLayout layout = fmp_layout(m.fmp);
    for (const auto& n : neg)
      for (SparseVec::InnerIterator it(n.features); it; ++it)
        if (it.index() < layout.part_bias_index(0, 0)) CHECK(it.value() == 0.0);
  }
  SUBCASE("textured background") {
    std::mt19937_64 rng(6);
    ScfmpModel m = random_model(rng, 3, 2);
    m.fmp.appearance.part_bias.array() += 5;
    m.appearance.part_bias.array() += 5;
    const std::vector<Image> bg = {noise_image(rng, 40, 40), noise_image(rng, 40, 40)};
    const auto neg = mine_fmp_negatives(m.fmp, bg, 4, params, -1.0);
    CHECK(neg.size() == 8);
    const Eigen::VectorXd beta = fmp_parameters(m.fmp);
    for (std::size_t i = 0; i < neg.size(); ++i) {
      if (i > 0 && neg[i].image == neg[i - 1].image) CHECK(neg[i].score <= neg[i - 1].score);
      CHECK(beta.dot(Eigen::VectorXd(neg[i].features)) == doctest::Approx(neg[i].score).epsilon(1e-6));
    }
    const auto shape = mine_shape_negatives(m, bg, 3, params, 30, -1.0);
    const Eigen::VectorXd beta2 = shape_parameters(m);
    for (const auto& n : shape)
      CHECK(beta2.dot(Eigen::VectorXd(n.features)) == doctest::Approx(n.score).epsilon(1e-6));
  }
}

TEST_CASE("training") {
  SynthConfig cfg;
  cfg.frames = 8;
  cfg.width = cfg.height = 96;
  cfg.body_length = 48;
  cfg.base_radius = 4;
  cfg.parts = 5;
  cfg.wander = 4;
  cfg.seed = 11;
  const auto seq = synth_sequence(cfg);
  const auto bg = synth_backgrounds(cfg, 3);
  const Dataset data = dataset_from(seq);

  TrainConfig tc;
  tc.type_count = 2;
  tc.template_rows = tc.template_cols = 3;
  tc.rounds = 2;
  tc.negatives_per_image = 4;
  tc.mining_m = 20;
  tc.svm_c = 0.1;
  tc.detect.hog.levels = 2;
  tc.detect.stage1_m = 40;
  tc.detect.stage2_m = 10;

  SUBCASE("zero rounds leaves a zero model with priors") {
    TrainConfig zero = tc;
    zero.rounds = 0;
    const ModelBundle b = train(data, {}, zero);
    CHECK(fmp_parameters(b.model.fmp).isZero(0));
    CHECK(shape_parameters(b.model).isZero(0));
    CHECK(b.model.priors.radius[2].median > 0);
    const auto d = detect(b.model, seq.frames.frames[0], tc.detect);
    for (const auto& c : d.stage1) CHECK(c.score == 0.0);
  }
  SUBCASE("deterministic and separating") {
    TrainReport report;
    const ModelBundle a = train(data, bg, tc, &report);
    const ModelBundle b = train(data, bg, tc);
    CHECK(serialize_model(a) == serialize_model(b));
    CHECK(report.positives == 8);
    REQUIRE(report.rounds.size() == 2);
    CHECK(report.rounds.back().fmp.converged);

    // Every training positive scores above zero under stage 1 for some
    // type assignment (its clustered types are internal to training),
    // and above every pose mined from the backgrounds.
    double worst_positive = 1e300;
    const int cell = tc.detect.hog.cell_size;
    for (const auto& ann : seq.annotations) {
      HogPyramid pyr;
      pyr.cell_size = cell;
      pyr.levels.push_back(hog_features(seq.frames.frames[ann.frame_index], cell));
      PoseCandidate pose;
      for (int i = 0; i < cfg.parts; ++i) {
        const auto c = pixel_to_cell(ann.keypoints[i], 1.0, cell, 3, 3);
        PartLocation p;
        p.cell_x = std::clamp(c.x(), 0, pyr.levels[0].cols - 3);
        p.cell_y = std::clamp(c.y(), 0, pyr.levels[0].rows - 3);
        pose.parts.push_back(p);
      }
      double best = -1e300;
      for (int mask = 0; mask < (1 << cfg.parts); ++mask) {
        for (int i = 0; i < cfg.parts; ++i) pose.parts[i].type = (mask >> i) & 1;
        best = std::max(best, score_pose(a.model.fmp, pose, pyr));
      }
      CHECK(best > 0);
      worst_positive = std::min(worst_positive, best);
    }
    const auto neg = mine_fmp_negatives(a.model.fmp, bg, 3, tc.detect, -1e300);
    REQUIRE(!neg.empty());
    for (const auto& n : neg) CHECK(n.score < worst_positive);
  }
}

}  // TEST_SUITE
