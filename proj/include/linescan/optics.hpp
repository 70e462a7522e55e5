#pragma once

// Line-image simulation for lensless (shadow) and lens-based set-ups.
//
// Geometry is 1D along the sensor line: the sensor plane is z = 0, the light
// plane is z = L, the object plane is z = d. Pixel i covers
// [x_i - pitch/2, x_i + pitch/2] with x_i = sensor.pixel_center_mm(i).
//
// Each pixel is estimated by `rays_per_pixel` rays whose landing points are
// stratified across the pixel aperture. The source side is sampled per light:
//   ExtendedLed       emitter point uniform over the emitter, kept when the
//                     ray lies inside the divergence cone
//   CollimatedLaser   angular deviation uniform in [-alpha, +alpha], kept when
//                     the ray leaves the beam expander aperture
//   IdealTelecentric  rays parallel to the axis
// A pixel's irradiance fraction is unblocked / kept rays. The exposure chain
// is fixed: radiometry -> speckle (laser) -> Gaussian noise -> quantize -> clamp.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <thread>
#include <variant>
#include <vector>

#include "linescan/error.hpp"
#include "linescan/model.hpp"
#include "linescan/rng.hpp"

namespace linescan::optics {

struct RenderConfig {
  int rays_per_pixel = 10000;
  std::uint64_t rng_seed = 1;
  bool add_sensor_noise = true;
  int worker_threads = 1;  // pixels split across threads; output is identical

  void validate() const {
    if (rays_per_pixel < 1) throw ValidationError("RenderConfig: rays_per_pixel >= 1");
    if (worker_threads < 1) throw ValidationError("RenderConfig: worker_threads >= 1");
  }
  bool operator==(const RenderConfig&) const = default;
};

struct LensConfig {
  double projection_distance = 20.0;  // mm, lens to sensor
  bool operator==(const LensConfig&) const = default;
};

struct Point {
  double x = 0.0;  // mm
  double z = 0.0;  // mm
};

struct RaySegment {
  Point start;
  Point end;
  bool blocked = false;
};

// ---------------------------------------------------------------------------
// Analytic oracle

/// Full penumbra width (mm) at the sensor from similar triangles:
/// ExtendedLed S*d/(L-d), CollimatedLaser 2*alpha*d, IdealTelecentric 0.
inline double analytic_penumbra(const LightModel& light, double object_distance_mm) {
  if (!(std::isfinite(object_distance_mm) && object_distance_mm > 0))
    throw GeometryError("object_distance must be > 0");
  validate(light);
  return std::visit(
      [&](const auto& l) -> double {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, ExtendedLed>) {
          if (!(l.distance_to_sensor > object_distance_mm))
            throw GeometryError("ExtendedLed: object plane must lie between light and sensor");
          return l.emitter_diameter * object_distance_mm /
                 (l.distance_to_sensor - object_distance_mm);
        } else if constexpr (std::is_same_v<T, CollimatedLaser>) {
          return 2.0 * l.alpha_rad() * object_distance_mm;
        } else {
          return 0.0;
        }
      },
      light);
}

/// 10%-90% extent (mm) of the penumbra. Both non-ideal sources spread the
/// shadow edge into a linear irradiance ramp, so this is 0.8 x the full width.
inline double analytic_edge_width(const LightModel& light, double object_distance_mm) {
  return 0.8 * analytic_penumbra(light, object_distance_mm);
}

// ---------------------------------------------------------------------------
// Speckle

/// Strictly positive multiplicative speckle profile with unit mean.
///
/// White Gaussian noise is smoothed with a Gaussian kernel of sigma =
/// correlation_length / 2 (autocorrelation falls to 1/e at correlation_length),
/// standardised, then mapped through a log-normal with the requested contrast.
inline std::vector<double> generate_speckle(const SpeckleParams& params, int pixel_count) {
  params.validate();
  if (pixel_count < 1) throw ValidationError("generate_speckle: pixel_count >= 1");
  std::vector<double> out(static_cast<std::size_t>(pixel_count), 1.0);
  if (params.contrast == 0.0) return out;

  const double sigma_k = 0.5 * params.correlation_length;
  const int radius = static_cast<int>(std::ceil(4.0 * sigma_k));
  std::vector<double> kernel(2 * radius + 1);
  for (int k = -radius; k <= radius; ++k)
    kernel[k + radius] = std::exp(-0.5 * (k * k) / (sigma_k * sigma_k));

  std::mt19937_64 gen(rng::derive(params.seed, rng::Stream::speckle, 0));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> white(out.size() + 2 * radius);
  for (double& w : white) w = normal(gen);

  std::vector<double> field(out.size());
  for (std::size_t i = 0; i < field.size(); ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < kernel.size(); ++k) acc += kernel[k] * white[i + k];
    field[i] = acc;
  }

  const double n = static_cast<double>(field.size());
  const double mean = std::accumulate(field.begin(), field.end(), 0.0) / n;
  double var = 0.0;
  for (double f : field) var += (f - mean) * (f - mean);
  const double sd = field.size() > 1 ? std::sqrt(var / (n - 1)) : 0.0;

  const double s2 = std::log1p(params.contrast * params.contrast);
  const double s = std::sqrt(s2);
  double total = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double z = sd > 0 ? (field[i] - mean) / sd : 0.0;
    out[i] = std::exp(s * z - 0.5 * s2);
    total += out[i];
  }
  const double norm = n / total;
  for (double& v : out) v *= norm;
  return out;
}

// ---------------------------------------------------------------------------
// Exposure

namespace detail {

template <typename PixelFn>
void for_each_pixel(int pixel_count, int workers, PixelFn&& fn) {
  workers = std::clamp(workers, 1, pixel_count);
  if (workers == 1) {
    for (int i = 0; i < pixel_count; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int i = w; i < pixel_count; i += workers) fn(i);
    });
  }
}

inline const SpeckleParams* speckle_of(const LightModel& light) {
  if (const auto* laser = std::get_if<CollimatedLaser>(&light))
    return laser->speckle ? &*laser->speckle : nullptr;
  return nullptr;
}

}  // namespace detail

/// Turns per-pixel irradiance fractions (0 = dark, 1 = unoccluded) into ADC
/// counts: dark + fraction * speckle * (saturation - dark), optional noise,
/// round to nearest, clamp to [0, 2^bit_depth - 1].
inline LineImage expose(std::span<const double> fraction, const SensorSpec& sensor,
                        const LightModel& light, const RenderConfig& cfg) {
  if (fraction.size() != static_cast<std::size_t>(sensor.pixel_count))
    throw DataError("expose: fraction length != pixel_count");
  const double fs = sensor.full_scale();
  const double bright = sensor.saturation_fraction * fs;
  std::vector<double> speckle;
  if (const auto* sp = detail::speckle_of(light)) speckle = generate_speckle(*sp, sensor.pixel_count);

  LineImage img;
  img.values.resize(fraction.size());
  for (std::size_t i = 0; i < fraction.size(); ++i) {
    double f = fraction[i];
    if (!speckle.empty()) f *= speckle[i];
    double signal = sensor.dark_level + f * (bright - sensor.dark_level);
    if (cfg.add_sensor_noise && sensor.noise_sigma > 0) {
      std::mt19937_64 gen(rng::derive(cfg.rng_seed, rng::Stream::sensor_noise, i));
      std::normal_distribution<double> normal(0.0, sensor.noise_sigma);
      signal += normal(gen);
    }
    img.values[i] = static_cast<AdcCount>(std::clamp(std::floor(signal + 0.5), 0.0, fs));
  }
  return img;
}

// ---------------------------------------------------------------------------
// Lensless rendering

namespace detail {

inline bool blocks(const SceneSetup& scene, double x_at_object) {
  return scene.object && scene.object->kind == ObjectKind::occluder &&
         x_at_object >= scene.object->left() && x_at_object <= scene.object->right();
}

/// Irradiance fraction of one pixel under back-lighting.
inline double lensless_pixel(const SceneSetup& scene, const LightModel& light,
                             const SensorSpec& sensor, const RenderConfig& cfg, int pixel) {
  const double pitch = sensor.pitch_mm();
  const double left = sensor.pixel_center_mm(pixel) - 0.5 * pitch;
  const double d = scene.object_distance;
  const int n = cfg.rays_per_pixel;
  std::mt19937_64 gen(rng::derive(cfg.rng_seed, rng::Stream::rays, static_cast<std::uint64_t>(pixel)));

  long kept = 0;
  long lit = 0;
  for (int k = 0; k < n; ++k) {
    const double x_s = left + (k + rng::uniform01(gen)) / n * pitch;
    const double u = rng::uniform01(gen);
    double x_obj = x_s;
    bool emitted = true;
    std::visit(
        [&](const auto& l) {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, ExtendedLed>) {
            const double L = l.distance_to_sensor;
            const double x_e = (u - 0.5) * l.emitter_diameter;
            emitted = std::abs(std::atan2(x_s - x_e, L)) <= l.divergence_half_angle;
            x_obj = x_s + (x_e - x_s) * d / L;
          } else if constexpr (std::is_same_v<T, CollimatedLaser>) {
            const double slope = std::tan((2.0 * u - 1.0) * l.alpha_rad());
            emitted = std::abs(x_s + l.distance_to_sensor * slope) <= l.beam_half_width;
            x_obj = x_s + d * slope;
          }
        },
        light);
    if (!emitted) continue;
    ++kept;
    if (!blocks(scene, x_obj)) ++lit;
  }
  return kept == 0 ? 0.0 : static_cast<double>(lit) / static_cast<double>(kept);
}

}  // namespace detail

/// Per-pixel irradiance fractions of a back-lit shadow, before exposure.
inline std::vector<double> lensless_irradiance(const SceneSetup& scene, const LightModel& light,
                                               const SensorSpec& sensor, const RenderConfig& cfg) {
  sensor.validate();
  cfg.validate();
  validate(light);
  scene.validate(light);
  if (scene.object && scene.object->kind != ObjectKind::occluder)
    throw ValidationError("render_lensless: lensless imaging is back-lit, object must be an occluder");
  std::vector<double> frac(static_cast<std::size_t>(sensor.pixel_count));
  detail::for_each_pixel(sensor.pixel_count, cfg.worker_threads, [&](int i) {
    frac[i] = detail::lensless_pixel(scene, light, sensor, cfg, i);
  });
  return frac;
}

inline LineImage render_lensless(const SceneSetup& scene, const LightModel& light,
                                 const SensorSpec& sensor, const RenderConfig& cfg) {
  const auto frac = lensless_irradiance(scene, light, sensor, cfg);
  return expose(frac, sensor, light, cfg);
}

// ---------------------------------------------------------------------------
// Lens (pinhole) rendering

/// Pinhole projection of object-plane x at distance z onto the sensor.
inline double project(double x_mm, double z_mm, const LensConfig& lens) {
  if (z_mm == 0.0) throw GeometryError("project: object distance z = 0");
  return -x_mm * lens.projection_distance / z_mm;
}

inline std::vector<double> lens_irradiance(const SceneSetup& scene, const LightModel& light,
                                           const LensConfig& lens, const SensorSpec& sensor,
                                           const RenderConfig& cfg) {
  sensor.validate();
  cfg.validate();
  validate(light);
  scene.validate();
  if (!(std::isfinite(lens.projection_distance) && lens.projection_distance > 0))
    throw GeometryError("render_lens: projection_distance > 0");

  const double z = scene.object_distance;
  const double f = lens.projection_distance;
  const double pitch = sensor.pitch_mm();
  const bool laser = std::holds_alternative<CollimatedLaser>(light);
  const int n = cfg.rays_per_pixel;

  std::vector<double> frac(static_cast<std::size_t>(sensor.pixel_count));
  detail::for_each_pixel(sensor.pixel_count, cfg.worker_threads, [&](int i) {
    const double left = sensor.pixel_center_mm(i) - 0.5 * pitch;
    std::mt19937_64 gen(rng::derive(cfg.rng_seed, rng::Stream::rays, static_cast<std::uint64_t>(i)));
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
      const double x_s = left + (k + rng::uniform01(gen)) / n * pitch;
      const double x_obj = -x_s * z / f;
      if (!scene.object) {
        acc += 1.0;
        continue;
      }
      const SceneObject& obj = *scene.object;
      const bool inside = x_obj >= obj.left() && x_obj <= obj.right();
      if (obj.kind == ObjectKind::occluder) {
        acc += inside ? 0.0 : 1.0;
      } else if (laser) {
        // Gaussian laser spot, 1/e^2 radius = diameter / 2.
        const double r = (x_obj - obj.center_x) / (0.5 * obj.diameter);
        acc += std::exp(-2.0 * r * r);
      } else {
        acc += inside ? 1.0 : 0.0;
      }
    }
    frac[i] = acc / n;
  });
  return frac;
}

/// Lens imaging: back-lit occluders appear as shadows, reflectors as bright
/// targets on a dark background.
inline LineImage render_lens(const SceneSetup& scene, const LightModel& light,
                             const LensConfig& lens, const SensorSpec& sensor,
                             const RenderConfig& cfg) {
  const auto frac = lens_irradiance(scene, light, lens, sensor, cfg);
  return expose(frac, sensor, light, cfg);
}

// ---------------------------------------------------------------------------
// Ray diagram

/// Light-plane height used for ray diagrams.
inline double light_plane_z(const LightModel& light, const SceneSetup& scene) {
  if (const auto* led = std::get_if<ExtendedLed>(&light)) return led->distance_to_sensor;
  if (const auto* laser = std::get_if<CollimatedLaser>(&light)) return laser->distance_to_sensor;
  return 2.0 * scene.object_distance;
}

/// Samples `n_rays` rays forward from the light plane to the sensor plane.
/// A blocked ray ends at the occluder. `half_extent_mm` bounds the launch
/// positions of IdealTelecentric rays.
inline std::vector<RaySegment> trace_rays(const LightModel& light, const SceneSetup& scene,
                                          int n_rays, std::uint64_t seed,
                                          double half_extent_mm = 5.0) {
  if (n_rays < 1) throw ValidationError("trace_rays: n_rays >= 1");
  validate(light);
  scene.validate(light);
  if (scene.object && scene.object->kind != ObjectKind::occluder)
    throw ValidationError("trace_rays: object must be an occluder");

  const double L = light_plane_z(light, scene);
  const double d = scene.object_distance;
  std::mt19937_64 gen(rng::derive(seed, rng::Stream::trace, 0));

  std::vector<RaySegment> rays;
  rays.reserve(static_cast<std::size_t>(n_rays));
  for (int r = 0; r < n_rays; ++r) {
    const double u0 = rng::uniform01(gen);
    const double u1 = rng::uniform01(gen);
    double x0 = 0.0;
    double slope = 0.0;  // dx / d(L - z)
    std::visit(
        [&](const auto& l) {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, ExtendedLed>) {
            x0 = (u0 - 0.5) * l.emitter_diameter;
            slope = std::tan((2.0 * u1 - 1.0) * l.divergence_half_angle);
          } else if constexpr (std::is_same_v<T, CollimatedLaser>) {
            x0 = (2.0 * u0 - 1.0) * l.beam_half_width;
            slope = std::tan((2.0 * u1 - 1.0) * l.alpha_rad());
          } else {
            x0 = (2.0 * u0 - 1.0) * half_extent_mm;
          }
        },
        light);
    const auto x_at = [&](double z) { return x0 + (L - z) * slope; };
    RaySegment seg;
    seg.start = {x0, L};
    if (detail::blocks(scene, x_at(d))) {
      seg.end = {x_at(d), d};
      seg.blocked = true;
    } else {
      seg.end = {x_at(0.0), 0.0};
    }
    rays.push_back(seg);
  }
  return rays;
}

}  // namespace linescan::optics
