#pragma once

// 1D measurement algorithms on line images: background / flat-field
// correction, subpixel edge detection, sharpness, diameter with alarms,
// three-point parabolic peak localisation and height lookup.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "linescan/error.hpp"
#include "linescan/model.hpp"

namespace linescan::dsp {

enum class CorrectionMode { subtract, normalize };

/// How the 50% crossing of an edge is located.
///  linear: interpolation between the two samples bracketing the threshold.
///  area:   balance of the normalised transition area; exact for
///          pixel-integrated steps as well as symmetric ramps.
enum class SubpixelMethod { area, linear };

struct EdgeDetectConfig {
  double threshold_fraction = 0.5;
  double plateau_low = 0.1;   // quantile for the dark plateau
  double plateau_high = 0.9;  // quantile for the bright plateau
  double noise_sigma = 1.0;   // counts; contrast below 10 sigma yields no edges
  SubpixelMethod method = SubpixelMethod::area;

  void validate() const {
    if (!(threshold_fraction > 0 && threshold_fraction < 1))
      throw ValidationError("EdgeDetectConfig: 0 < threshold_fraction < 1");
    if (!(plateau_low >= 0 && plateau_low < plateau_high && plateau_high <= 1))
      throw ValidationError("EdgeDetectConfig: 0 <= plateau_low < plateau_high <= 1");
    if (!(noise_sigma >= 0)) throw ValidationError("EdgeDetectConfig: noise_sigma >= 0");
  }
};

struct DiameterConfig {
  double nominal_min = 2.5;  // mm
  double nominal_max = 4.0;  // mm
  double pixel_pitch = 7000.0 / 142.0;  // um
  EdgeDetectConfig edge_config;

  void validate() const {
    if (!(nominal_min > 0 && nominal_max > 0 && nominal_min < nominal_max))
      throw ValidationError("DiameterConfig: 0 < nominal_min < nominal_max");
    if (!(pixel_pitch > 0)) throw ValidationError("DiameterConfig: pixel_pitch > 0");
    edge_config.validate();
  }
};

// ---------------------------------------------------------------------------
// Helpers

/// Quantile with linear interpolation between order statistics.
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw DataError("quantile of empty sequence");
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
  const double a = v[lo];
  if (hi == lo) return a;
  const double b = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(lo) + 1, v.end());
  return a + (pos - static_cast<double>(lo)) * (b - a);
}

inline std::vector<double> as_double(const LineImage& frame) {
  return {frame.values.begin(), frame.values.end()};
}

struct Plateaus {
  double low = 0.0;
  double high = 0.0;
  double span() const { return high - low; }
};

inline Plateaus estimate_plateaus(std::span<const double> v, const EdgeDetectConfig& cfg) {
  std::vector<double> copy(v.begin(), v.end());
  return {quantile(copy, cfg.plateau_low), quantile(copy, cfg.plateau_high)};
}

// ---------------------------------------------------------------------------
// Background correction

/// Removes a fixed illumination pattern captured without an object.
///   subtract:  out = frame - reference + dark
///   normalize: out = dark + (frame - dark) * (R - dark) / (reference - dark),
///              R the reference median
/// Results are rounded and clamped to the ADC range.
inline LineImage background_correct(const LineImage& frame, const LineImage& reference,
                                    CorrectionMode mode, const SensorSpec& sensor) {
  if (frame.size() != reference.size())
    throw DataError("background_correct: frame and reference lengths differ");
  const double dark = sensor.dark_level;
  const double fs = sensor.full_scale();
  LineImage out;
  out.frame_index = frame.frame_index;
  out.timestamp = frame.timestamp;
  out.values.resize(frame.size());

  double median = 0.0;
  if (mode == CorrectionMode::normalize) median = quantile(as_double(reference), 0.5);

  for (std::size_t i = 0; i < frame.size(); ++i) {
    const double f = frame.values[i];
    const double r = reference.values[i];
    double v = 0.0;
    if (mode == CorrectionMode::subtract) {
      v = f - r + dark;
    } else {
      if (!(r > dark))
        throw CalibrationError("background_correct: flat-field reference at or below dark level at pixel " +
                               std::to_string(i));
      v = dark + (f - dark) * (median - dark) / (r - dark);
    }
    out.values[i] = static_cast<AdcCount>(std::clamp(std::floor(v + 0.5), 0.0, fs));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Edge detection

namespace detail {

// One transition: a is the last sample in the origin band, b the first
// sample in the destination band.
struct Transition {
  std::size_t a;
  std::size_t b;
  Polarity polarity;
};

inline double lerp_crossing(std::span<const double> v, std::size_t k, double level) {
  return static_cast<double>(k) + (v[k] - level) / (v[k] - v[k + 1]);
}

inline double linear_position(std::span<const double> v, const Transition& t, double level) {
  for (std::size_t k = t.a; k < t.b; ++k) {
    const bool cross = t.polarity == Polarity::falling ? (v[k] >= level && v[k + 1] < level)
                                                       : (v[k] < level && v[k + 1] >= level);
    if (cross) return lerp_crossing(v, k, level);
  }
  return 0.5 * static_cast<double>(t.a + t.b);
}

// Area balance over a window extended by `margin` samples on each side,
// clipped to [lo_bound, hi_bound]. With s the transition normalised to run
// from 1 to 0, the 50% point is window_start - 1/2 + sum(s).
inline double area_position(std::span<const double> v, const Transition& t, const Plateaus& p,
                            std::size_t lo_bound, std::size_t hi_bound) {
  constexpr std::size_t margin = 2;
  const std::size_t first = t.a >= lo_bound + margin ? t.a - margin : lo_bound;
  const std::size_t last = std::min(t.b + margin, hi_bound);
  double sum = 0.0;
  for (std::size_t j = first; j <= last; ++j) {
    const double s = t.polarity == Polarity::falling ? (v[j] - p.low) / p.span()
                                                     : (p.high - v[j]) / p.span();
    sum += s;
  }
  return static_cast<double>(first) - 0.5 + sum;
}

inline double transition_width(std::span<const double> v, const Transition& t, double l10,
                               double l90) {
  double w = 0.0;
  if (t.polarity == Polarity::falling) {
    const double p90 = lerp_crossing(v, t.a, l90);
    const double p10 = lerp_crossing(v, t.b - 1, l10);
    w = p10 - p90;
  } else {
    const double p10 = lerp_crossing(v, t.a, l10);
    const double p90 = lerp_crossing(v, t.b - 1, l90);
    w = p90 - p10;
  }
  w = std::max(w, 0.0);
  // At most one sample strictly inside the band: the edge is not resolved
  // by the sampling and counts as (at most) a one-pixel edge.
  if (t.b - t.a <= 2) w = std::min(w, 1.0);
  return w;
}

inline std::vector<Transition> find_transitions(std::span<const double> v, double l10, double l90,
                                                double threshold) {
  std::vector<Transition> out;
  bool high = v[0] >= threshold;
  std::ptrdiff_t last_high = (high && v[0] >= l90) ? 0 : -1;
  std::ptrdiff_t last_low = (!high && v[0] <= l10) ? 0 : -1;
  for (std::size_t j = 1; j < v.size(); ++j) {
    const auto jj = static_cast<std::ptrdiff_t>(j);
    if (high) {
      if (v[j] >= l90) {
        last_high = jj;
      } else if (v[j] <= l10) {
        if (last_high >= 0) out.push_back({static_cast<std::size_t>(last_high), j, Polarity::falling});
        high = false;
        last_low = jj;
      }
    } else {
      if (v[j] <= l10) {
        last_low = jj;
      } else if (v[j] >= l90) {
        if (last_low >= 0) out.push_back({static_cast<std::size_t>(last_low), j, Polarity::rising});
        high = true;
        last_high = jj;
      }
    }
  }
  return out;
}

}  // namespace detail

/// Edges of a 1D profile, ordered by position.
///
/// Plateaus come from the configured quantiles. Transitions are complete
/// moves between the 10% and 90% bands (hysteresis, so noise near the
/// threshold cannot split an edge). Width is the 10%-90% distance by linear
/// interpolation. Returns no edges when the plateau contrast is below
/// 10 x noise_sigma.
inline std::vector<EdgeEstimate> detect_edges(std::span<const double> v, const EdgeDetectConfig& cfg) {
  cfg.validate();
  if (v.size() < 3) throw DataError("detect_edges: frame needs at least 3 samples");
  const Plateaus p = estimate_plateaus(v, cfg);
  if (!(p.span() > 0) || p.span() < 10.0 * cfg.noise_sigma) return {};

  const double l10 = p.low + 0.1 * p.span();
  const double l90 = p.low + 0.9 * p.span();
  const double threshold = p.low + cfg.threshold_fraction * p.span();
  const auto transitions = detail::find_transitions(v, l10, l90, threshold);

  std::vector<EdgeEstimate> edges;
  edges.reserve(transitions.size());
  for (std::size_t k = 0; k < transitions.size(); ++k) {
    const auto& t = transitions[k];
    EdgeEstimate e;
    e.polarity = t.polarity;
    e.width = detail::transition_width(v, t, l10, l90);
    // The area balance is the 50% point; other thresholds need the crossing.
    if (cfg.method == SubpixelMethod::linear || cfg.threshold_fraction != 0.5) {
      e.position = detail::linear_position(v, t, threshold);
    } else {
      const std::size_t lo_bound = k > 0 ? transitions[k - 1].b : 0;
      const std::size_t hi_bound = k + 1 < transitions.size() ? transitions[k + 1].a : v.size() - 1;
      e.position = detail::area_position(v, t, p, lo_bound, hi_bound);
    }
    e.position = std::clamp(e.position, 0.0, static_cast<double>(v.size() - 1));
    edges.push_back(e);
  }
  return edges;
}

inline std::vector<EdgeEstimate> detect_edges(const LineImage& frame, const EdgeDetectConfig& cfg = {}) {
  const auto v = as_double(frame);
  return detect_edges(std::span<const double>(v), cfg);
}

/// Plateau span divided by edge width (counts per pixel); larger is sharper.
inline double sharpness_rate(std::span<const double> v, const EdgeEstimate& edge,
                             const EdgeDetectConfig& cfg = {}) {
  const Plateaus p = estimate_plateaus(v, cfg);
  constexpr double eps = 1e-9;
  return p.span() / std::max(edge.width, eps);
}

inline double sharpness_rate(const LineImage& frame, const EdgeEstimate& edge,
                             const EdgeDetectConfig& cfg = {}) {
  const auto v = as_double(frame);
  return sharpness_rate(std::span<const double>(v), edge, cfg);
}

// ---------------------------------------------------------------------------
// Diameter

/// Diameter of the shadow in a back-lit frame.
///
/// Shadows are falling edges followed by a rising edge. With several shadows
/// the deepest one (lowest sample between its edges) is measured and the
/// result is marked ambiguous. Throws MeasurementError when no complete
/// shadow exists.
inline DiameterResult measure_diameter(std::span<const double> v, const DiameterConfig& cfg) {
  cfg.validate();
  const auto edges = detect_edges(v, cfg.edge_config);

  struct Shadow {
    std::size_t left;
    std::size_t right;
    double depth;
  };
  std::vector<Shadow> shadows;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    if (edges[k].polarity != Polarity::falling || edges[k + 1].polarity != Polarity::rising)
      continue;
    const auto lo = static_cast<std::size_t>(std::floor(edges[k].position));
    const auto hi = static_cast<std::size_t>(std::ceil(edges[k + 1].position));
    double depth = std::numeric_limits<double>::infinity();
    for (std::size_t j = lo; j <= std::min(hi, v.size() - 1); ++j) depth = std::min(depth, v[j]);
    shadows.push_back({k, k + 1, depth});
  }
  if (shadows.empty()) throw MeasurementError("measure_diameter: no object in frame");

  const auto deepest = std::min_element(shadows.begin(), shadows.end(),
                                        [](const Shadow& a, const Shadow& b) { return a.depth < b.depth; });
  DiameterResult r;
  r.left_edge = edges[deepest->left];
  r.right_edge = edges[deepest->right];
  r.diameter = (r.right_edge.position - r.left_edge.position) * cfg.pixel_pitch * 1e-3;
  r.alarm = r.diameter < cfg.nominal_min || r.diameter > cfg.nominal_max;
  r.ambiguous = shadows.size() > 1;
  return r;
}

inline DiameterResult measure_diameter(const LineImage& frame, const DiameterConfig& cfg) {
  const auto v = as_double(frame);
  return measure_diameter(std::span<const double>(v), cfg);
}

// ---------------------------------------------------------------------------
// Peak and height

struct PeakApex {
  double index = 0.0;
  bool degenerate = false;
};

/// Apex of the parabola through the global maximum (lowest index on ties)
/// and its two neighbours: i + (y- - y+) / (2 (y- - 2 y0 + y+)).
/// Throws MeasurementError when the maximum sits on the frame boundary. A
/// flat top of three or more equal maxima (saturation; no sampled parabola
/// has one) returns the integer index flagged degenerate. Two equal maxima
/// are a parabola with its apex halfway between them.
template <typename T>
PeakApex find_peak_apex(std::span<const T> y) {
  if (y.size() < 3) throw DataError("find_peak_apex: frame needs at least 3 samples");
  const auto it = std::max_element(y.begin(), y.end());
  const auto i = static_cast<std::size_t>(it - y.begin());
  if (i == 0 || i + 1 == y.size())
    throw MeasurementError("find_peak_apex: maximum at frame boundary");
  const double ym = static_cast<double>(y[i - 1]);
  const double y0 = static_cast<double>(y[i]);
  const double yp = static_cast<double>(y[i + 1]);
  const double denom = ym - 2.0 * y0 + yp;
  const bool flat_top = yp == y0 && i + 2 < y.size() && static_cast<double>(y[i + 2]) == y0;
  if (denom == 0.0 || flat_top) return {static_cast<double>(i), true};
  return {static_cast<double>(i) + 0.5 * (ym - yp) / denom, false};
}

inline PeakApex find_peak_apex(const LineImage& frame) {
  return find_peak_apex(std::span<const AdcCount>(frame.values));
}

inline HeightCalibration calibrate_height(const std::vector<HeightCalibration::Sample>& samples) {
  return HeightCalibration(samples);
}

/// Piecewise-linear lookup; outside the calibrated range the end knot's
/// height is returned with out_of_range set.
inline HeightEstimate height_from_peak(double apex, const HeightCalibration& cal) {
  const auto& s = cal.samples();
  if (s.size() < 2) throw CalibrationError("height_from_peak: empty calibration");
  HeightEstimate h;
  h.apex = apex;
  if (!(apex >= s.front().pixel_index)) {
    h.height = s.front().height;
    h.out_of_range = true;
    return h;
  }
  if (apex > s.back().pixel_index) {
    h.height = s.back().height;
    h.out_of_range = true;
    return h;
  }
  auto hi = std::upper_bound(s.begin(), s.end(), apex,
                             [](double a, const HeightCalibration::Sample& k) { return a < k.pixel_index; });
  if (hi == s.end()) {
    h.height = s.back().height;
    return h;
  }
  const auto lo = hi - 1;
  if (apex == lo->pixel_index) {
    h.height = lo->height;
    return h;
  }
  const double t = (apex - lo->pixel_index) / (hi->pixel_index - lo->pixel_index);
  h.height = lo->height + t * (hi->height - lo->height);
  return h;
}

inline HeightEstimate height_from_peak(const PeakApex& apex, const HeightCalibration& cal) {
  HeightEstimate h = height_from_peak(apex.index, cal);
  h.degenerate = apex.degenerate;
  return h;
}

}  // namespace linescan::dsp
