#include "helpers.hpp"
#include "oracles.hpp"

#include "shapepose/error.hpp"
#include "shapepose/fmp.hpp"
#include "shapepose/hog.hpp"

#include <random>

using namespace shapepose;

namespace {

Image noise_image(std::mt19937_64& rng, int h, int w) {
  std::uniform_real_distribution<double> u(0, 1);
  Image img(h, w);
  for (auto& v : img.reshaped()) v = u(rng);
  return img;
}

FmpModel random_model(std::mt19937_64& rng, std::vector<int> parent, int types, int rows, int cols) {
  std::normal_distribution<double> n01(0, 1);
  std::uniform_int_distribution<int> off(-2, 2);
  FmpModel m = FmpModel::zeros(std::move(parent), types, rows, cols);
  for (auto& t : m.appearance.templates)
    for (auto& v : t.reshaped()) v = n01(rng);
  for (auto& v : m.appearance.part_bias.reshaped()) v = n01(rng);
  for (int c = 1; c < m.part_count(); ++c) {
    for (auto& v : m.appearance.pair_bias[c].reshaped()) v = n01(rng);
    for (auto& a : m.anchor[c]) a = {off(rng), off(rng)};
    for (auto& w : m.deformation[c]) w << n01(rng), n01(rng), -0.1 - std::abs(n01(rng)), -0.1 - std::abs(n01(rng));
  }
  return m;
}

PoseCandidate random_pose(std::mt19937_64& rng, const FmpModel& m, const HogPyramid& pyr) {
  PoseCandidate c;
  c.level = std::uniform_int_distribution<int>(0, int(pyr.levels.size()) - 1)(rng);
  const auto& level = pyr.levels[c.level];
  std::uniform_int_distribution<int> ux(0, level.cols - m.appearance.template_cols);
  std::uniform_int_distribution<int> uy(0, level.rows - m.appearance.template_rows);
  std::uniform_int_distribution<int> ut(0, m.type_count() - 1);
  for (int i = 0; i < m.part_count(); ++i) {
    PartLocation p;
    p.level = c.level;
    p.cell_x = ux(rng);
    p.cell_y = uy(rng);
    p.type = ut(rng);
    c.parts.push_back(p);
  }
  return c;
}

void scale_model(FmpModel& m, double s) {
  for (auto& t : m.appearance.templates) t *= s;
  m.appearance.part_bias *= s;
  for (auto& b : m.appearance.pair_bias) b *= s;
  for (auto& d : m.deformation)
    for (auto& w : d) w *= s;
}

}  // namespace

TEST_SUITE("fmp") {

TEST_CASE("zero model scores zero") {
  std::mt19937_64 rng(1);
  const HogPyramid pyr = hog_pyramid(noise_image(rng, 40, 40), {4, 2, 1.25});
  const FmpModel m = FmpModel::zeros({-1, 0, 1}, 2, 2, 2);
  for (int i = 0; i < 10; ++i) CHECK(score_pose(m, random_pose(rng, m, pyr), pyr) == 0.0);
}

TEST_CASE("two-part hand calculation") {
  std::mt19937_64 rng(2);
  const HogPyramid pyr = hog_pyramid(noise_image(rng, 32, 32), {4, 1, 1.25});
  const auto& level = pyr.levels[0];
  FmpModel m = FmpModel::zeros({-1, 0}, 2, 1, 1);
  m.appearance.weights(0, 1)(0, 3) = 2.0;
  m.appearance.weights(1, 0)(0, 30) = -1.5;
  m.appearance.part_bias(0, 1) = 0.25;
  m.appearance.part_bias(1, 0) = -0.5;
  m.appearance.pair_bias[1](0, 1) = 0.75;
  m.anchor[1][0] = {1, -1};
  m.deformation[1][0 * 2 + 1] << 0.5, -0.25, -0.1, -0.2;

  PoseCandidate pose;
  pose.parts = {{2, 3, 0, 1}, {5, 1, 0, 0}};
  // child - parent - anchor = (5-2-1, 1-3+1) = (2, -1)
  const double expected = 2.0 * level.cell(3, 2)(3) + 0.25 - 1.5 * level.cell(1, 5)(30) - 0.5 + 0.75 +
                          (0.5 * 2 - 0.25 * -1 - 0.1 * 4 - 0.2 * 1);
  CHECK(score_pose(m, pose, pyr) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(score_pose(m, pose, compute_responses(m, pyr)) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("score is linear in the parameters") {
  std::mt19937_64 rng(3);
  const HogPyramid pyr = hog_pyramid(noise_image(rng, 40, 40), {4, 2, 1.25});
  FmpModel m = random_model(rng, {-1, 0, 0, 2}, 2, 2, 2);
  FmpModel m2 = m;
  scale_model(m2, 2.0);
  for (int i = 0; i < 10; ++i) {
    const auto pose = random_pose(rng, m, pyr);
    CHECK(score_pose(m2, pose, pyr) == doctest::Approx(2 * score_pose(m, pose, pyr)).epsilon(1e-12));
  }
}

TEST_CASE("bounds errors") {
  std::mt19937_64 rng(4);
  const HogPyramid pyr = hog_pyramid(noise_image(rng, 24, 24), {4, 1, 1.25});
  const FmpModel m = FmpModel::zeros({-1, 0}, 1, 2, 2);
  PoseCandidate pose;
  pose.parts = {{0, 0, 0, 0}, {5, 0, 0, 0}};
  CHECK_THROWS_KIND(score_pose(m, pose, pyr), ErrorKind::BoundsError);
  pose.parts[1].level = 3;
  CHECK_THROWS_KIND(score_pose(m, pose, pyr), ErrorKind::BoundsError);
  pose.parts.pop_back();
  CHECK_THROWS_KIND(score_pose(m, pose, pyr), ErrorKind::ArityError);
  const FmpModel big = FmpModel::zeros({-1}, 1, 8, 8);
  CHECK_THROWS_KIND(infer_best(big, pyr), ErrorKind::ImageTooSmall);
}

TEST_CASE("cell and pixel mappings are inverse") {
  for (double scale : {1.0, 0.8, 0.5})
    for (int cx = 0; cx < 6; ++cx)
      for (int cy = 0; cy < 6; ++cy) {
        const auto p = cell_to_pixel(cx, cy, scale, 4, 3, 2);
        CHECK(pixel_to_cell(p, scale, 4, 3, 2) == Eigen::Vector2i(cx, cy));
      }
}

TEST_CASE("single part returns the unary argmax") {
  std::mt19937_64 rng(5);
  const HogPyramid pyr = hog_pyramid(noise_image(rng, 40, 40), {4, 2, 1.25});
  const FmpModel m = random_model(rng, {-1}, 3, 2, 2);
  const FmpResponses r = compute_responses(m, pyr);
  double best = -1e300;
  for (const auto& level : r.levels)
    for (const auto& g : level.unary[0]) best = std::max(best, g.maxCoeff());
  const auto pose = infer_best(m, pyr);
  CHECK(pose.score == doctest::Approx(best).epsilon(1e-12));
  CHECK(score_pose(m, pose, pyr) == doctest::Approx(best).epsilon(1e-12));
}

TEST_CASE("three-part chain on a 5x5 grid matches exhaustive search") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 5; ++trial) {
    auto p = oracle::random_fmp(rng, 3, 1, 5, 5);
    p.model.parent = {-1, 0, 1};
    const auto all = oracle::enumerate_fmp(p);
    const auto best = infer_best(p.model, p.responses);
    CHECK(best.score == doctest::Approx(all.front().score).epsilon(1e-12));
    CHECK(oracle::fmp_key(best).key == all.front().key);
  }
}

TEST_CASE("ties resolve to the smallest root y, x, type") {
  std::mt19937_64 rng(7);
  auto p = oracle::random_fmp(rng, 2, 2, 4, 4);
  for (auto& part : p.responses.levels[0].unary)
    for (auto& g : part) g.setZero();
  p.model.appearance.part_bias.setZero();
  for (auto& b : p.model.appearance.pair_bias) b.setZero();
  for (auto& d : p.model.deformation)
    for (auto& w : d) w << 0, 0, -1, -1;
  for (auto& a : p.model.anchor[1]) a.setZero();
  const auto best = infer_best(p.model, p.responses);
  CHECK(best.score == 0.0);
  CHECK(best.parts[0].cell_y == 0);
  CHECK(best.parts[0].cell_x == 0);
  CHECK(best.parts[0].type == 0);
}

TEST_CASE("exact M-best matches enumeration") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 2 + trial % 3, types = 1 + trial % 2;
    auto p = oracle::random_fmp(rng, k, types, 2, 2, 1 + trial % 2);
    const auto all = oracle::enumerate_fmp(p);
    const auto got = infer_m_best(p.model, p.responses, 10, 0);
    REQUIRE(got.size() == std::min<std::size_t>(10, all.size()));
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].score == doctest::Approx(all[i].score).epsilon(1e-12));
      CHECK(oracle::fmp_key(got[i]).key == all[i].key);
    }
  }
}

TEST_CASE("M=1 equals infer_best and scores are non-increasing") {
  std::mt19937_64 rng(9);
  const HogPyramid pyr = hog_pyramid(noise_image(rng, 48, 48), {4, 3, 1.25});
  const FmpModel m = random_model(rng, {-1, 0, 1, 1}, 2, 2, 2);
  const auto best = infer_best(m, pyr);
  const auto one = infer_m_best(m, pyr, 1, 0);
  REQUIRE(one.size() == 1);
  CHECK(one[0].score == best.score);
  CHECK(oracle::fmp_key(one[0]).key == oracle::fmp_key(best).key);
  for (double nms : {0.0, 4.0}) {
    const auto list = infer_m_best(m, pyr, 50, nms);
    for (std::size_t i = 1; i < list.size(); ++i) CHECK(list[i].score <= list[i - 1].score);
    for (const auto& c : list) CHECK(score_pose(m, c, pyr) == doctest::Approx(c.score).epsilon(1e-9));
  }
}

TEST_CASE("nms keeps roots apart and removes duplicates") {
  std::mt19937_64 rng(10);
  const HogPyramid pyr = hog_pyramid(noise_image(rng, 48, 48), {4, 1, 1.25});
  const FmpModel m = random_model(rng, {-1, 0, 1}, 2, 2, 2);
  const double radius = 9;
  const auto list = infer_m_best(m, pyr, 100, radius);
  REQUIRE(!list.empty());
  for (std::size_t i = 0; i < list.size(); ++i)
    for (std::size_t j = 0; j < i; ++j) {
      CHECK((list[i].point(0) - list[j].point(0)).norm() >= radius);
      CHECK(oracle::fmp_key(list[i]).key != oracle::fmp_key(list[j]).key);
    }
}

TEST_CASE("max-marginals peak at the optimum for every node") {
  std::mt19937_64 rng(11);
  auto p = oracle::random_fmp(rng, 4, 2, 4, 3);
  const auto tables = fmp_tables(p.model, p.responses.levels[0]);
  const double best = oracle::enumerate_fmp(p).front().score;
  for (int i = 0; i < 4; ++i) CHECK(tables.max_marginal(i).maxCoeff() == doctest::Approx(best).epsilon(1e-12));
}

}  // TEST_SUITE
