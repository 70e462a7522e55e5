#pragma once

// Edge-quality measurements over a grid of light and object distances.

#include <cmath>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "linescan/dsp.hpp"
#include "linescan/error.hpp"
#include "linescan/io.hpp"
#include "linescan/model.hpp"
#include "linescan/optics.hpp"
#include "linescan/rng.hpp"

namespace linescan::sweep {

/// Half-plane occluder covering x < edge_mm.
inline SceneSetup knife_edge_scene(double object_distance_mm, double edge_mm = 0.0) {
  SceneSetup s;
  s.object_distance = object_distance_mm;
  s.object = SceneObject{ObjectKind::occluder, edge_mm - 500.0, 1000.0};
  return s;
}

/// Returns `light` moved to `distance_mm` from the sensor. IdealTelecentric
/// has no distance and is returned unchanged.
inline LightModel at_distance(LightModel light, double distance_mm) {
  if (auto* led = std::get_if<ExtendedLed>(&light)) led->distance_to_sensor = distance_mm;
  if (auto* laser = std::get_if<CollimatedLaser>(&light)) laser->distance_to_sensor = distance_mm;
  return light;
}

struct EdgeQuality {
  double width_px = 0.0;
  double sharpness_rate = 0.0;
  std::size_t edges = 0;
};

/// Mean 10-90 width and sharpness rate over all edges in the frame.
inline EdgeQuality edge_quality(const LineImage& frame, const dsp::EdgeDetectConfig& cfg) {
  const auto v = dsp::as_double(frame);
  const auto edges = dsp::detect_edges(std::span<const double>(v), cfg);
  if (edges.empty()) throw MeasurementError("edge_quality: no edge in frame");
  EdgeQuality q;
  for (const auto& e : edges) {
    q.width_px += e.width;
    q.sharpness_rate += dsp::sharpness_rate(std::span<const double>(v), e, cfg);
  }
  q.edges = edges.size();
  q.width_px /= static_cast<double>(edges.size());
  q.sharpness_rate /= static_cast<double>(edges.size());
  return q;
}

/// Renders a knife edge for every (light distance, object distance) pair and
/// reports its edge quality. Rows are ordered light-major.
inline std::vector<io::SweepRow> edge_sweep(const LightModel& light, std::span<const double> light_distances,
                                            std::span<const double> object_distances,
                                            const SensorSpec& sensor, const optics::RenderConfig& render) {
  dsp::EdgeDetectConfig cfg;
  cfg.noise_sigma = sensor.noise_sigma;
  std::vector<io::SweepRow> rows;
  rows.reserve(light_distances.size() * object_distances.size());
  std::uint64_t cell = 0;
  for (double L : light_distances) {
    const LightModel l = at_distance(light, L);
    for (double d : object_distances) {
      const SceneSetup scene = knife_edge_scene(d);
      scene.validate(l);
      optics::RenderConfig r = render;
      r.rng_seed = rng::derive(render.rng_seed, rng::Stream::frame, cell++);
      const auto q = edge_quality(optics::render_lensless(scene, l, sensor, r), cfg);
      rows.push_back({L, d, q.width_px, q.sharpness_rate});
    }
  }
  return rows;
}

}  // namespace linescan::sweep
