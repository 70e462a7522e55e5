#pragma once

// Requirement calculators for sizing a line-scan set-up: pixel count from the
// field of view, line rate from transport speed, LED electrical energy, and
// the line rate a given read-out timing can sustain.

#include <algorithm>
#include <cmath>
#include <string>

#include "linescan/error.hpp"
#include "linescan/model.hpp"

namespace linescan::sizing {

struct SizingRequirement {
  double field_of_view = 0.0;    // mm
  double accuracy = 0.0;         // mm
  double subpixel_factor = 1.0;  // >= 1
  double object_speed = 0.0;     // m/s
  double sample_interval = 0.0;  // mm

  void validate() const {
    if (!(field_of_view > 0 && accuracy > 0 && object_speed > 0 && sample_interval > 0))
      throw ValidationError("SizingRequirement: all fields > 0");
    if (!(subpixel_factor >= 1)) throw ValidationError("SizingRequirement: subpixel_factor >= 1");
  }
};

namespace detail {
inline void positive(double v, const char* name) {
  if (!(std::isfinite(v) && v > 0)) throw DomainError(std::string(name) + " must be > 0");
}
}  // namespace detail

/// Minimum pixel count: ceil(fov / (accuracy * subpixel_factor)).
inline long required_pixel_count(double fov_mm, double accuracy_mm, double subpixel_factor = 1.0) {
  detail::positive(fov_mm, "fov");
  detail::positive(accuracy_mm, "accuracy");
  if (!(std::isfinite(subpixel_factor) && subpixel_factor >= 1))
    throw DomainError("subpixel_factor must be >= 1");
  const double ratio = fov_mm / (accuracy_mm * subpixel_factor);
  // Ratios like 6 / 0.05 land a few ulp away from an integer.
  const double nearest = std::round(ratio);
  if (std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, nearest))
    return std::max(1L, static_cast<long>(nearest));
  return std::max(1L, static_cast<long>(std::ceil(ratio)));
}

/// Lines per second so consecutive lines are `sample_interval_mm` apart.
inline double required_line_rate(double speed_m_s, double sample_interval_mm) {
  detail::positive(speed_m_s, "speed");
  detail::positive(sample_interval_mm, "sample_interval");
  return speed_m_s * 1e3 / sample_interval_mm;
}

/// Fastest transport that still samples every `sample_interval_mm`.
inline double max_transport_speed(double line_rate_hz, double sample_interval_mm) {
  detail::positive(line_rate_hz, "line_rate");
  detail::positive(sample_interval_mm, "sample_interval");
  return line_rate_hz * sample_interval_mm * 1e-3;
}

/// Electrical energy to saturate the sensor: E_s * A / (eta_led * eta_optics).
inline double led_electrical_energy(double saturation_energy_density_j_m2, double area_m2,
                                    double eta_led, double eta_optics) {
  detail::positive(saturation_energy_density_j_m2, "saturation_energy_density");
  detail::positive(area_m2, "area");
  if (!(eta_led > 0 && eta_led <= 1)) throw DomainError("eta_led must be in (0, 1]");
  if (!(eta_optics > 0 && eta_optics <= 1)) throw DomainError("eta_optics must be in (0, 1]");
  return saturation_energy_density_j_m2 * area_m2 / (eta_led * eta_optics);
}

/// Line period under the read-out composition rules:
///  - digital (not overlapped): read-out waits for integration to end, compute
///    hides under integration: max(t_int, t_comp) + t_read
///  - analog (overlapped): read-out and compute run during the next
///    integration: max(t_int, t_read + t_comp)
inline double line_period(const TimingModel& t) {
  t.validate();
  if (!(t.integration_time + t.readout_time > 0))
    throw DomainError("integration_time + readout_time must be > 0");
  const double period = t.overlapped_readout
                            ? std::max(t.integration_time, t.readout_time + t.compute_time)
                            : std::max(t.integration_time, t.compute_time) + t.readout_time;
  if (!(period > 0)) throw DomainError("line period must be > 0");
  return period;
}

inline double achievable_line_rate(const TimingModel& t) { return 1.0 / line_period(t); }

}  // namespace linescan::sizing
