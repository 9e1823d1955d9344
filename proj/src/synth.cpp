#include "shapepose/synth.hpp"

#include "shapepose/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace shapepose {

namespace {

constexpr int kSuper = 4;  // supersampling factor per axis
constexpr double kPi = std::numbers::pi;

struct Ellipse {
  Eigen::Vector2d center, velocity;
  double a = 1, b = 1, angle = 0, intensity = 0.5;

  bool contains(const Eigen::Vector2d& p) const {
    const Eigen::Vector2d d = p - center;
    const double c = std::cos(angle), s = std::sin(angle);
    const double u = (c * d.x() + s * d.y()) / a, v = (-s * d.x() + c * d.y()) / b;
    return u * u + v * v <= 1.0;
  }
};

Ellipse random_ellipse(std::mt19937_64& rng, const SynthConfig& cfg, double radius) {
  std::uniform_real_distribution<double> ux(0, cfg.width - 1), uy(0, cfg.height - 1), size(0.7, 1.3),
      ang(0, kPi), gray(0.4, 0.65), vel(-1, 1);
  Ellipse e;
  e.center = {ux(rng), uy(rng)};
  e.a = radius * size(rng);
  e.b = radius * size(rng);
  e.angle = ang(rng);
  e.intensity = gray(rng);
  e.velocity = {vel(rng), vel(rng)};
  return e;
}

void move(Ellipse& e, const SynthConfig& cfg) {
  e.center += e.velocity;
  for (int d = 0; d < 2; ++d) {
    const double hi = d == 0 ? cfg.width - 1 : cfg.height - 1;
    if (e.center[d] < 0 || e.center[d] > hi) {
      e.velocity[d] = -e.velocity[d];
      e.center[d] = std::clamp(e.center[d], 0.0, hi);
    }
  }
}

// Blends an ellipse over the image with supersampled coverage.
void draw_ellipse(Image& img, const Ellipse& e) {
  const double r = std::max(e.a, e.b);
  const int x0 = std::max(0, int(std::floor(e.center.x() - r))), x1 = std::min(int(img.cols()) - 1, int(std::ceil(e.center.x() + r)));
  const int y0 = std::max(0, int(std::floor(e.center.y() - r))), y1 = std::min(int(img.rows()) - 1, int(std::ceil(e.center.y() + r)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      int hits = 0;
      for (int sy = 0; sy < kSuper; ++sy)
        for (int sx = 0; sx < kSuper; ++sx)
          hits += e.contains({x - 0.5 + (sx + 0.5) / kSuper, y - 0.5 + (sy + 0.5) / kSuper});
      const double cov = double(hits) / (kSuper * kSuper);
      img(y, x) = img(y, x) * (1 - cov) + e.intensity * cov;
    }
}

void add_noise(Image& img, std::mt19937_64& rng, double sigma) {
  if (sigma > 0) {
    std::normal_distribution<double> n(0, sigma);
    for (Eigen::Index i = 0; i < img.size(); ++i) img.data()[i] += n(rng);
  }
  img = img.max(0.0).min(1.0);
}

void validate(const SynthConfig& cfg) {
  if (cfg.width < 8 || cfg.height < 8) fail(ErrorKind::ConfigError, "frame must be at least 8x8");
  if (cfg.frames < 1) fail(ErrorKind::ConfigError, "frame count must be positive");
  if (cfg.parts < 2) fail(ErrorKind::ConfigError, "at least 2 parts required");
  if (!(cfg.body_length > 0) || !(cfg.base_radius > 0)) fail(ErrorKind::ConfigError, "body size must be positive");
  if (cfg.taper < 0 || cfg.taper >= 1) fail(ErrorKind::ConfigError, "taper must lie in [0, 1)");
  if (cfg.noise < 0 || cfg.occluders < 0 || cfg.occluder_radius <= 0)
    fail(ErrorKind::ConfigError, "noise and occluders must be non-negative");
  if (cfg.annotate_every < 1) fail(ErrorKind::ConfigError, "annotate_every must be positive");
}

bool inside(const SynthConfig& cfg, const Eigen::Vector2d& p) {
  return p.x() >= 0 && p.y() >= 0 && p.x() <= cfg.width - 1 && p.y() <= cfg.height - 1;
}

}  // namespace

double synth_radius(const SynthConfig& cfg, double u) {
  const double v = 2 * u - 1;
  return cfg.base_radius * (1 - cfg.taper * v * v);
}

void fill_polygon(std::vector<unsigned char>& mask, int width, int height, int factor,
                  const std::vector<Eigen::Vector2d>& poly) {
  if (poly.size() < 3) return;
  Eigen::Vector2d lo = poly[0], hi = poly[0];
  for (const auto& p : poly) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const int w = width * factor, h = height * factor;
  // Subsample (sx, sy) sits at pixel coordinate (sx + 0.5) / factor - 0.5.
  const int sx0 = std::max(0, int(std::floor((lo.x() + 0.5) * factor))), sx1 = std::min(w - 1, int(std::ceil((hi.x() + 0.5) * factor)));
  const int sy0 = std::max(0, int(std::floor((lo.y() + 0.5) * factor))), sy1 = std::min(h - 1, int(std::ceil((hi.y() + 0.5) * factor)));
  const std::size_t n = poly.size();
  for (int sy = sy0; sy <= sy1; ++sy) {
    const double py = (sy + 0.5) / factor - 0.5;
    for (int sx = sx0; sx <= sx1; ++sx) {
      const double px = (sx + 0.5) / factor - 0.5;
      int winding = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto& a = poly[i];
        const auto& b = poly[(i + 1) % n];
        const double cross = (b.x() - a.x()) * (py - a.y()) - (px - a.x()) * (b.y() - a.y());
        if (a.y() <= py) {
          if (b.y() > py && cross > 0) ++winding;
        } else if (b.y() <= py && cross < 0) {
          --winding;
        }
      }
      if (winding != 0) mask[std::size_t(sy) * w + sx] = 1;
    }
  }
}

SynthSequence synth_sequence(const SynthConfig& cfg) {
  validate(cfg);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit01(0, 1);
  const double heading0 = 2 * kPi * unit01(rng);
  const double phase_x = 2 * kPi * unit01(rng), phase_y = 2 * kPi * unit01(rng);
  std::vector<Ellipse> occluders;
  for (int i = 0; i < cfg.occluders; ++i) occluders.push_back(random_ellipse(rng, cfg, cfg.occluder_radius));

  SynthSequence seq;
  const int k = cfg.parts;
  for (int i = 0; i < k; ++i) seq.parent.push_back(i - 1);
  const int steps = 100 * (k - 1);
  const Eigen::Vector2d frame_center((cfg.width - 1) / 2.0, (cfg.height - 1) / 2.0);

  for (int t = 0; t < cfg.frames; ++t) {
    const double heading = heading0 + cfg.turn_rate * t;
    const double phase = cfg.bend_speed * t;
    auto tangent = [&](double u) {
      if (cfg.omega) {
        const double period = std::max(cfg.frames, 2);
        const double curl = 2.1 * kPi * 0.5 * (1 - std::cos(2 * kPi * t / period));
        return heading + curl * (u - 0.5) + 0.25 * cfg.bend_amplitude * std::sin(2 * kPi * u - phase);
      }
      return heading + cfg.bend_amplitude * std::sin(2 * kPi * cfg.bend_frequency * u - phase);
    };

    // Axis by midpoint integration from the head, then centered.
    std::vector<Eigen::Vector2d> axis(steps + 1, Eigen::Vector2d::Zero());
    const double du = 1.0 / steps;
    for (int s = 0; s < steps; ++s) axis[s + 1] = axis[s] + cfg.body_length * du * unit(tangent((s + 0.5) * du));
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (const auto& p : axis) mean += p;
    mean /= double(axis.size());
    const Eigen::Vector2d center =
        frame_center + cfg.wander * Eigen::Vector2d(std::sin(0.11 * t + phase_x), std::sin(0.07 * t + phase_y));
    for (auto& p : axis) p += center - mean;

    std::vector<PartState> states(k);
    for (int i = 0; i < k; ++i) {
      const double u = double(i) / (k - 1);
      const auto& p = axis[std::size_t(i) * 100];
      auto& z = states[i];
      z.x = p.x();
      z.y = p.y();
      z.r = synth_radius(cfg, u);
      // theta points toward the head; eta = atan(dr/ds) with s along theta.
      z.theta = wrap_angle(tangent(u) + kPi);
      z.eta = std::atan(4 * cfg.base_radius * cfg.taper * (2 * u - 1) / cfg.body_length);
      z.type = 0;
    }

    const int w = cfg.width * kSuper, h = cfg.height * kSuper;
    std::vector<unsigned char> mask(std::size_t(w) * h, 0);
    for (int i = 0; i + 1 < k; ++i) {
      const auto f = fragment_boundary(states[i], states[i + 1], 0.5, false);
      std::vector<Eigen::Vector2d> poly;
      for (const auto& s : f.left_samples) poly.push_back(s.point);
      for (auto it = f.right_samples.rbegin(); it != f.right_samples.rend(); ++it) poly.push_back(it->point);
      for (const auto& p : poly)
        if (!inside(cfg, p)) fail(ErrorKind::ConfigError, "body leaves the frame at frame " + std::to_string(t));
      fill_polygon(mask, cfg.width, cfg.height, kSuper, poly);
    }
    for (int end : {0, k - 1}) {
      const auto& z = states[end];
      std::vector<Eigen::Vector2d> cap;
      for (int a = 0; a < 48; ++a) cap.push_back(z.center() + z.r * unit(2 * kPi * a / 48));
      for (const auto& p : cap)
        if (!inside(cfg, p)) fail(ErrorKind::ConfigError, "body leaves the frame at frame " + std::to_string(t));
      fill_polygon(mask, cfg.width, cfg.height, kSuper, cap);
    }

    Image img(cfg.height, cfg.width);
    for (int y = 0; y < cfg.height; ++y)
      for (int x = 0; x < cfg.width; ++x) {
        int hits = 0;
        for (int sy = 0; sy < kSuper; ++sy)
          for (int sx = 0; sx < kSuper; ++sx) hits += mask[std::size_t(y * kSuper + sy) * w + x * kSuper + sx];
        const double cov = double(hits) / (kSuper * kSuper);
        img(y, x) = cfg.background * (1 - cov) + cfg.body_intensity * cov;
      }
    for (auto& e : occluders) {
      draw_ellipse(img, e);
      move(e, cfg);
    }
    add_noise(img, rng, cfg.noise);

    seq.frames.frames.push_back(std::move(img));
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04d.png", t);
    seq.frames.names.push_back(name);
    if (t % cfg.annotate_every == 0) {
      Annotation a;
      a.frame_index = t;
      std::vector<double> radii;
      for (const auto& z : states) {
        a.keypoints.push_back(z.center());
        radii.push_back(z.r);
      }
      a.radii = radii;
      seq.annotations.push_back(std::move(a));
    }
    seq.truth.push_back(std::move(states));
  }
  return seq;
}

std::vector<Image> synth_backgrounds(const SynthConfig& cfg, int count) {
  validate(cfg);
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_int_distribution<int> blobs(3, 6);
  std::uniform_real_distribution<double> gray(0.15, 0.7), size(0.5, 2.0);
  std::vector<Image> out;
  for (int n = 0; n < count; ++n) {
    Image img = Image::Constant(cfg.height, cfg.width, cfg.background);
    const int b = std::max(cfg.occluders, blobs(rng));
    for (int i = 0; i < b; ++i) {
      Ellipse e = random_ellipse(rng, cfg, cfg.occluder_radius * size(rng));
      e.intensity = gray(rng);
      draw_ellipse(img, e);
    }
    add_noise(img, rng, cfg.noise);
    out.push_back(std::move(img));
  }
  return out;
}

}  // namespace shapepose
