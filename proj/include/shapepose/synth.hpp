#pragma once

#include "shapepose/annotations.hpp"
#include "shapepose/image.hpp"
#include "shapepose/shape.hpp"

#include <cstdint>
#include <vector>

namespace shapepose {

/// Synthetic worm-like body: a tapered ribbon around a bending medial axis,
/// dark on a light background, with noise and moving occluders.
struct SynthConfig {
  int width = 128;
  int height = 128;
  int frames = 20;
  int parts = 9;               // stations along the body
  double body_length = 80;     // px along the axis
  double base_radius = 6;      // half-width at mid-body
  double taper = 0.5;          // r(u) = base * (1 - taper * (2u - 1)^2)
  double bend_amplitude = 0.6; // rad of tangent swing
  double bend_frequency = 1.0; // waves along the body
  double bend_speed = 0.3;     // rad of phase per frame
  double turn_rate = 0.03;     // rad of heading change per frame
  double wander = 8;           // px amplitude of center drift
  int occluders = 0;
  double occluder_radius = 8;
  double noise = 0.02;         // Gaussian sigma
  bool omega = false;          // body curls into an omega turn and back
  int annotate_every = 1;
  double body_intensity = 0.2;
  double background = 0.8;
  std::uint64_t seed = 1;
};

struct SynthSequence {
  FrameSequence frames;
  std::vector<Annotation> annotations;
  std::vector<std::vector<PartState>> truth;  // [frame][part]
  std::vector<int> parent;                    // chain rooted at the head
};

/// Radius profile at normalized arc length u in [0, 1] (0 = head).
double synth_radius(const SynthConfig& cfg, double u);

/// Throws ConfigError on invalid settings or when the body leaves the frame.
SynthSequence synth_sequence(const SynthConfig& cfg);

/// Body-free frames: the same background and noise with at least 3 (or
/// `occluders`) darker elliptical blobs.
std::vector<Image> synth_backgrounds(const SynthConfig& cfg, int count);

/// Fills a closed polygon (nonzero winding) into a supersampled coverage
/// mask of `factor` x `factor` samples per pixel.
void fill_polygon(std::vector<unsigned char>& mask, int width, int height, int factor,
                  const std::vector<Eigen::Vector2d>& polygon);

}  // namespace shapepose
