#pragma once

// Shared domain types for the line-scan workbench.
//
// Units: mm for geometry, um for pixel pitch, seconds for time, Hz for rates.
// Every type is a plain value; `validate()` throws ValidationError naming the
// violated constraint. Operations validate their inputs on entry.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "linescan/error.hpp"

namespace linescan {

using AdcCount = std::uint16_t;

namespace detail {

inline void require(bool ok, const char* what) {
  if (!ok) throw ValidationError(what);
}

inline bool finite(double v) { return std::isfinite(v); }

}  // namespace detail

// ---------------------------------------------------------------------------
// SensorSpec

struct SensorSpec {
  int pixel_count = 142;
  double pixel_pitch = 7000.0 / 142.0;  // um
  int bit_depth = 8;
  double dark_level = 2.0;              // ADC counts
  double noise_sigma = 1.0;             // ADC counts, pre-quantization
  double saturation_fraction = 0.8;     // of full scale, unoccluded pixel
  double max_line_rate = 9480.0;        // Hz

  double full_scale() const { return std::ldexp(1.0, bit_depth) - 1.0; }
  double active_length_mm() const { return pixel_count * pixel_pitch * 1e-3; }
  double pitch_mm() const { return pixel_pitch * 1e-3; }

  /// Sensor-plane x (mm) of the centre of pixel `i`; the array is centred on x = 0.
  double pixel_center_mm(double i) const {
    return (i - 0.5 * (pixel_count - 1)) * pitch_mm();
  }
  /// Inverse of pixel_center_mm.
  double pixel_index_of(double x_mm) const {
    return x_mm / pitch_mm() + 0.5 * (pixel_count - 1);
  }

  void validate() const {
    using detail::require;
    require(pixel_count >= 2, "SensorSpec: pixel_count >= 2");
    require(detail::finite(pixel_pitch) && pixel_pitch > 0, "SensorSpec: pixel_pitch > 0");
    require(bit_depth >= 8 && bit_depth <= 16, "SensorSpec: bit_depth in [8, 16]");
    require(detail::finite(dark_level) && dark_level >= 0 && dark_level < full_scale(),
            "SensorSpec: 0 <= dark_level < 2^bit_depth - 1");
    require(detail::finite(noise_sigma) && noise_sigma >= 0 && noise_sigma < full_scale() + 1,
            "SensorSpec: 0 <= noise_sigma < 2^bit_depth");
    require(detail::finite(saturation_fraction) && saturation_fraction > 0 &&
                saturation_fraction <= 1,
            "SensorSpec: saturation_fraction in (0, 1]");
    require(saturation_fraction * full_scale() > dark_level,
            "SensorSpec: saturated level above dark_level");
    require(detail::finite(max_line_rate) && max_line_rate > 0, "SensorSpec: max_line_rate > 0");
  }

  bool operator==(const SensorSpec&) const = default;
};

/// Melexis MLX75306: 142 px over 7 mm, 9.48 kHz. ADC depth and noise are
/// placeholders, the vendor numbers are not public.
inline SensorSpec mlx75306_preset() {
  SensorSpec s;
  s.pixel_count = 142;
  s.pixel_pitch = 7000.0 / 142.0;
  s.bit_depth = 8;
  s.dark_level = 2.0;
  s.noise_sigma = 1.0;
  s.saturation_fraction = 0.8;
  s.max_line_rate = 9480.0;
  return s;
}

// ---------------------------------------------------------------------------
// Illumination

struct SpeckleParams {
  double contrast = 0.2;            // std / mean
  double correlation_length = 4.0;  // px
  std::uint64_t seed = 0x5eed;

  void validate() const {
    using detail::require;
    require(detail::finite(contrast) && contrast >= 0 && contrast <= 1,
            "SpeckleParams: contrast in [0, 1]");
    require(detail::finite(correlation_length) && correlation_length >= 1,
            "SpeckleParams: correlation_length >= 1");
  }
  bool operator==(const SpeckleParams&) const = default;
};

struct ExtendedLed {
  double distance_to_sensor = 500.0;    // mm
  double emitter_diameter = 10.0;       // mm
  double divergence_half_angle = 2.0 * std::numbers::pi / 180.0;  // rad

  void validate() const {
    using detail::require;
    require(detail::finite(distance_to_sensor) && distance_to_sensor > 0,
            "ExtendedLed: distance_to_sensor > 0");
    require(detail::finite(emitter_diameter) && emitter_diameter > 0,
            "ExtendedLed: emitter_diameter > 0");
    require(detail::finite(divergence_half_angle) && divergence_half_angle > 0 &&
                divergence_half_angle < 0.5 * std::numbers::pi,
            "ExtendedLed: divergence_half_angle in (0, pi/2)");
  }
  bool operator==(const ExtendedLed&) const = default;
};

struct CollimatedLaser {
  double telecentric_slope_alpha = 0.1;  // mrad
  double beam_half_width = 5.0;          // mm
  std::optional<SpeckleParams> speckle;
  double distance_to_sensor = 500.0;     // mm, beam expander exit plane

  double alpha_rad() const { return telecentric_slope_alpha * 1e-3; }

  void validate() const {
    using detail::require;
    require(detail::finite(telecentric_slope_alpha) && telecentric_slope_alpha >= 0,
            "CollimatedLaser: telecentric_slope_alpha >= 0");
    require(detail::finite(beam_half_width) && beam_half_width > 0,
            "CollimatedLaser: beam_half_width > 0");
    require(detail::finite(distance_to_sensor) && distance_to_sensor > 0,
            "CollimatedLaser: distance_to_sensor > 0");
    if (speckle) speckle->validate();
  }
  bool operator==(const CollimatedLaser&) const = default;
};

struct IdealTelecentric {
  bool operator==(const IdealTelecentric&) const = default;
};

using LightModel = std::variant<ExtendedLed, CollimatedLaser, IdealTelecentric>;

inline void validate(const LightModel& light) {
  std::visit(
      [](const auto& l) {
        if constexpr (!std::is_same_v<std::decay_t<decltype(l)>, IdealTelecentric>) l.validate();
      },
      light);
}

/// LED + 4 degree reflector preset (2 degree half angle).
inline ExtendedLed led_preset(double distance_mm = 500.0) {
  ExtendedLed led;
  led.distance_to_sensor = distance_mm;
  return led;
}

// ---------------------------------------------------------------------------
// Scene

enum class ObjectKind { occluder, reflector };

struct SceneObject {
  ObjectKind kind = ObjectKind::occluder;
  double center_x = 0.0;  // mm
  double diameter = 3.0;  // mm

  double left() const { return center_x - 0.5 * diameter; }
  double right() const { return center_x + 0.5 * diameter; }
  bool operator==(const SceneObject&) const = default;
};

struct Motion {
  double vibration_amplitude = 0.0;  // mm
  double vibration_frequency = 0.0;  // Hz
  double transport_speed = 0.0;      // m/s
  bool operator==(const Motion&) const = default;
};

struct SceneSetup {
  double object_distance = 20.0;  // mm, object plane to sensor plane
  std::optional<SceneObject> object;
  std::optional<Motion> motion;

  void validate() const {
    using detail::require;
    require(detail::finite(object_distance) && object_distance > 0,
            "SceneSetup: object_distance > 0");
    if (object) {
      require(detail::finite(object->center_x), "SceneSetup: center_x finite");
      require(detail::finite(object->diameter) && object->diameter > 0,
              "SceneSetup: diameter > 0");
    }
    if (motion) {
      require(detail::finite(motion->vibration_amplitude) && motion->vibration_amplitude >= 0,
              "SceneSetup: vibration_amplitude >= 0");
      require(detail::finite(motion->vibration_frequency) && motion->vibration_frequency >= 0,
              "SceneSetup: vibration_frequency >= 0");
      require(detail::finite(motion->transport_speed) && motion->transport_speed >= 0,
              "SceneSetup: transport_speed >= 0");
    }
  }

  /// Joint check with an illuminator (object must sit between LED and sensor).
  void validate(const LightModel& light) const {
    validate();
    if (const auto* led = std::get_if<ExtendedLed>(&light)) {
      if (!(object_distance < led->distance_to_sensor))
        throw GeometryError("SceneSetup: object_distance < distance_to_sensor of ExtendedLed");
    }
    if (const auto* laser = std::get_if<CollimatedLaser>(&light)) {
      if (!(object_distance < laser->distance_to_sensor))
        throw GeometryError("SceneSetup: object_distance < distance_to_sensor of CollimatedLaser");
    }
  }

  bool operator==(const SceneSetup&) const = default;
};

inline SceneSetup wire_scene(double diameter_mm, double center_mm = 0.0,
                             double object_distance_mm = 20.0) {
  SceneSetup s;
  s.object_distance = object_distance_mm;
  s.object = SceneObject{ObjectKind::occluder, center_mm, diameter_mm};
  return s;
}

// ---------------------------------------------------------------------------
// Frames and measurement outputs

struct LineImage {
  std::int64_t frame_index = 0;
  double timestamp = 0.0;  // s
  std::vector<AdcCount> values;

  std::size_t size() const { return values.size(); }

  void validate(const SensorSpec& sensor) const {
    detail::require(values.size() == static_cast<std::size_t>(sensor.pixel_count),
                    "LineImage: length == pixel_count");
    const double fs = sensor.full_scale();
    for (AdcCount v : values) detail::require(v <= fs, "LineImage: value <= 2^bit_depth - 1");
  }
  bool operator==(const LineImage&) const = default;
};

enum class Polarity { falling, rising };

struct EdgeEstimate {
  double position = 0.0;  // subpixel index
  double width = 0.0;     // px, 10% -> 90%
  Polarity polarity = Polarity::falling;
  bool operator==(const EdgeEstimate&) const = default;
};

struct DiameterResult {
  double diameter = 0.0;  // mm
  EdgeEstimate left_edge;
  EdgeEstimate right_edge;
  bool alarm = false;
  bool ambiguous = false;  // more than one shadow in the frame
};

struct HeightEstimate {
  double apex = 0.0;    // subpixel index
  double height = 0.0;  // mm
  bool degenerate = false;
  bool out_of_range = false;
};

class HeightCalibration {
 public:
  struct Sample {
    double pixel_index;
    double height;  // mm
    bool operator==(const Sample&) const = default;
  };

  HeightCalibration() = default;

  /// Sorts by pixel index; rejects < 2 samples, duplicate indices,
  /// non-finite values and non-monotonic heights.
  explicit HeightCalibration(std::vector<Sample> samples) : samples_(std::move(samples)) {
    if (samples_.size() < 2) throw CalibrationError("HeightCalibration: at least 2 samples");
    for (const auto& s : samples_) {
      if (!std::isfinite(s.pixel_index) || !std::isfinite(s.height))
        throw CalibrationError("HeightCalibration: samples must be finite");
    }
    std::sort(samples_.begin(), samples_.end(),
              [](const Sample& a, const Sample& b) { return a.pixel_index < b.pixel_index; });
    int direction = 0;
    for (std::size_t i = 1; i < samples_.size(); ++i) {
      if (!(samples_[i].pixel_index > samples_[i - 1].pixel_index))
        throw CalibrationError("HeightCalibration: pixel indices strictly monotonic");
      const double dh = samples_[i].height - samples_[i - 1].height;
      const int d = dh > 0 ? 1 : (dh < 0 ? -1 : 0);
      if (d == 0 || (direction != 0 && d != direction))
        throw CalibrationError("HeightCalibration: heights strictly monotonic in pixel index");
      direction = d;
    }
  }

  const std::vector<Sample>& samples() const { return samples_; }
  double min_index() const { return samples_.front().pixel_index; }
  double max_index() const { return samples_.back().pixel_index; }

  bool operator==(const HeightCalibration&) const = default;

 private:
  std::vector<Sample> samples_;
};

struct TimingModel {
  double integration_time = 0.0;  // s
  double readout_time = 0.0;      // s
  double compute_time = 0.0;      // s
  bool overlapped_readout = false;

  void validate() const {
    using detail::require;
    require(detail::finite(integration_time) && integration_time >= 0,
            "TimingModel: integration_time >= 0");
    require(detail::finite(readout_time) && readout_time >= 0, "TimingModel: readout_time >= 0");
    require(detail::finite(compute_time) && compute_time >= 0, "TimingModel: compute_time >= 0");
  }
  bool operator==(const TimingModel&) const = default;
};

/// MLX75306 over SPI, fitted to the 9.48 kHz maximum line rate.
inline TimingModel mlx75306_timing() { return {50e-6, 55.5e-6, 0.0, false}; }

/// Sheet-of-light prototype, fitted to the 3.5 kHz system rate.
inline TimingModel sheet_of_light_timing() { return {100e-6, 185.7e-6, 50e-6, false}; }

}  // namespace linescan
