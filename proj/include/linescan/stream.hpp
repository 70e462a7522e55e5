#pragma once

// Push-broom scan generation and measurement pipelines.
//
// Frames are produced by a pull-based generator. Pipelines map each frame to
// one MeasurementRecord independently of every other frame, so they can run
// on any number of workers; `process_ordered` delivers records in frame order
// with a bounded number of frames in flight.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "linescan/dsp.hpp"
#include "linescan/error.hpp"
#include "linescan/model.hpp"
#include "linescan/optics.hpp"
#include "linescan/rng.hpp"

namespace linescan::stream {

// ---------------------------------------------------------------------------
// Records

enum Flag : unsigned {
  flag_none = 0,
  flag_alarm = 1u << 0,
  flag_no_object = 1u << 1,
  flag_degenerate_peak = 1u << 2,
  flag_out_of_range = 1u << 3,
  flag_multi_object = 1u << 4,
};

inline constexpr std::pair<Flag, const char*> kFlagNames[] = {
    {flag_alarm, "alarm"},
    {flag_no_object, "no_object"},
    {flag_degenerate_peak, "degenerate_peak"},
    {flag_out_of_range, "out_of_range"},
    {flag_multi_object, "multi_object"},
};

inline std::string flag_list(unsigned flags) {
  std::string out;
  for (const auto& [f, name] : kFlagNames) {
    if (flags & f) {
      if (!out.empty()) out += ';';
      out += name;
    }
  }
  return out;
}

inline unsigned parse_flag_list(const std::string& text) {
  unsigned flags = flag_none;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto end = std::min(text.find(';', start), text.size());
    const std::string token = text.substr(start, end - start);
    bool known = false;
    for (const auto& [f, name] : kFlagNames) {
      if (token == name) {
        flags |= f;
        known = true;
      }
    }
    if (!known && !token.empty()) throw DataError("unknown record flag '" + token + "'");
    start = end + 1;
  }
  return flags;
}

struct MeasurementRecord {
  std::int64_t frame_index = 0;
  double timestamp = 0.0;
  std::variant<DiameterResult, HeightEstimate> payload;
  unsigned flags = flag_none;

  bool has(Flag f) const { return (flags & f) != 0; }

  /// Diameter or height in mm; NaN when the frame had no measurable object.
  double value_mm() const {
    if (has(flag_no_object)) return std::numeric_limits<double>::quiet_NaN();
    if (const auto* d = std::get_if<DiameterResult>(&payload)) return d->diameter;
    return std::get<HeightEstimate>(payload).height;
  }
};

// ---------------------------------------------------------------------------
// Scan generation

/// Along-wire segment whose diameter differs from nominal.
struct Flaw {
  double start = 0.0;     // mm along the wire
  double length = 7.0;    // mm
  double diameter = 4.5;  // mm
};

struct ScanProfile {
  double duration = 1.0;   // s
  double line_rate = 1000; // Hz
  SceneSetup scene;
  LightModel light = IdealTelecentric{};
  SensorSpec sensor = mlx75306_preset();
  optics::RenderConfig render;
  std::vector<Flaw> flaws;

  void validate() const {
    if (!(duration > 0)) throw ValidationError("ScanProfile: duration > 0");
    if (!(line_rate > 0)) throw ValidationError("ScanProfile: line_rate > 0");
    sensor.validate();
    if (!(line_rate <= sensor.max_line_rate))
      throw ValidationError("ScanProfile: line_rate <= sensor.max_line_rate");
    linescan::validate(light);
    scene.validate(light);
    render.validate();
    for (const auto& f : flaws) {
      if (!(f.length > 0 && f.diameter > 0))
        throw ValidationError("ScanProfile: flaw length and diameter > 0");
    }
  }

  std::size_t frame_count() const {
    return static_cast<std::size_t>(std::floor(duration * line_rate + 1e-9));
  }
};

/// Pull-based frame source: frame k is a pure function of (profile, seed, k).
class ScanGenerator {
 public:
  ScanGenerator(ScanProfile profile, std::uint64_t seed)
      : profile_(std::move(profile)), seed_(seed) {
    profile_.validate();
    count_ = profile_.frame_count();
  }

  std::size_t size() const { return count_; }
  const ScanProfile& profile() const { return profile_; }

  double timestamp(std::size_t k) const { return static_cast<double>(k) / profile_.line_rate; }

  /// Scene at frame k: vibrated centre and flaw-dependent diameter.
  SceneSetup scene_at(std::size_t k) const {
    SceneSetup s = profile_.scene;
    const double t = timestamp(k);
    if (s.object && s.motion) {
      const auto& m = *s.motion;
      s.object->center_x += m.vibration_amplitude *
                            std::sin(2.0 * std::numbers::pi * m.vibration_frequency * t);
      const double along = m.transport_speed * 1e3 * t;
      for (const auto& f : profile_.flaws) {
        if (along >= f.start && along < f.start + f.length) s.object->diameter = f.diameter;
      }
    }
    return s;
  }

  LineImage frame(std::size_t k) const {
    optics::RenderConfig cfg = profile_.render;
    cfg.rng_seed = rng::derive(seed_, rng::Stream::frame, k);
    LineImage img = optics::render_lensless(scene_at(k), profile_.light, profile_.sensor, cfg);
    img.frame_index = static_cast<std::int64_t>(k);
    img.timestamp = timestamp(k);
    return img;
  }

  std::optional<LineImage> next() {
    if (cursor_ >= count_) return std::nullopt;
    return frame(cursor_++);
  }

 private:
  ScanProfile profile_;
  std::uint64_t seed_;
  std::size_t count_ = 0;
  std::size_t cursor_ = 0;
};

inline ScanGenerator generate_scan(const ScanProfile& profile, std::uint64_t seed) {
  return ScanGenerator(profile, seed);
}

// ---------------------------------------------------------------------------
// Ordered parallel processing

/// Pulls items from `source` (returns std::optional<In>), applies `fn` on
/// `workers` threads and hands results to `sink` in pull order. At most
/// `capacity` items are pulled but not yet consumed by the sink; the
/// producer blocks rather than drops.
template <typename Source, typename Fn, typename Sink>
void process_ordered(Source&& source, Fn&& fn, Sink&& sink, int workers = 1,
                     std::size_t capacity = 64) {
  using In = typename std::decay_t<decltype(*source())>;
  using Out = std::decay_t<decltype(fn(std::declval<const In&>()))>;
  if (workers <= 1) {
    while (auto item = source()) sink(fn(*item));
    return;
  }
  capacity = std::max<std::size_t>(capacity, 1);

  std::mutex mu;
  std::condition_variable cv;
  std::map<std::size_t, In> pending;  // pulled, not yet taken by a worker
  std::map<std::size_t, Out> done;    // finished, not yet emitted
  std::size_t pulled = 0;
  std::size_t emitted = 0;
  bool exhausted = false;
  std::exception_ptr failure;

  // Called with the lock held, so pulls are serialised and numbered in order.
  auto refill = [&] {
    while (!exhausted && pulled - emitted < capacity) {
      auto item = source();
      if (!item) {
        exhausted = true;
        cv.notify_all();  // the consumer may be waiting for the end of input
        break;
      }
      pending.emplace(pulled++, std::move(*item));
    }
  };

  auto worker = [&] {
    std::unique_lock lock(mu);
    for (;;) {
      if (failure) return;
      if (!exhausted) {
        try {
          refill();
        } catch (...) {
          failure = std::current_exception();
          cv.notify_all();
          return;
        }
      }
      if (pending.empty()) {
        if (exhausted) return;
        cv.wait(lock);
        continue;
      }
      auto node = pending.extract(pending.begin());
      lock.unlock();
      std::optional<Out> result;
      try {
        result.emplace(fn(node.mapped()));
      } catch (...) {
        lock.lock();
        failure = std::current_exception();
        cv.notify_all();
        return;
      }
      lock.lock();
      done.emplace(node.key(), std::move(*result));
      cv.notify_all();
    }
  };

  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);

  {
    std::unique_lock lock(mu);
    for (;;) {
      cv.wait(lock, [&] {
        return failure || done.count(emitted) || (exhausted && emitted == pulled);
      });
      if (failure) break;
      if (exhausted && emitted == pulled) break;
      auto node = done.extract(emitted);
      lock.unlock();
      try {
        sink(std::move(node.mapped()));
      } catch (...) {
        lock.lock();
        failure = std::current_exception();
        break;
      }
      lock.lock();
      ++emitted;  // the slot frees only once the sink has taken the item
      cv.notify_all();
    }
  }
  cv.notify_all();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------
// Pipelines

struct DiameterStage {
  dsp::DiameterConfig cfg;
  std::optional<LineImage> reference;
  dsp::CorrectionMode mode = dsp::CorrectionMode::subtract;
  SensorSpec sensor = mlx75306_preset();

  MeasurementRecord operator()(const LineImage& frame) const {
    MeasurementRecord rec;
    rec.frame_index = frame.frame_index;
    rec.timestamp = frame.timestamp;
    try {
      const LineImage corrected =
          reference ? dsp::background_correct(frame, *reference, mode, sensor) : frame;
      DiameterResult r = dsp::measure_diameter(corrected, cfg);
      if (r.alarm) rec.flags |= flag_alarm;
      if (r.ambiguous) rec.flags |= flag_multi_object;
      rec.payload = r;
    } catch (const MeasurementError&) {
      rec.payload = DiameterResult{};
      rec.flags |= flag_no_object;
    }
    return rec;
  }
};

struct HeightStage {
  HeightCalibration cal;

  MeasurementRecord operator()(const LineImage& frame) const {
    MeasurementRecord rec;
    rec.frame_index = frame.frame_index;
    rec.timestamp = frame.timestamp;
    try {
      const dsp::PeakApex apex = dsp::find_peak_apex(frame);
      HeightEstimate h = dsp::height_from_peak(apex, cal);
      if (h.degenerate) rec.flags |= flag_degenerate_peak;
      if (h.out_of_range) rec.flags |= flag_out_of_range;
      rec.payload = h;
    } catch (const MeasurementError&) {
      HeightEstimate h;
      h.degenerate = true;
      rec.payload = h;
      rec.flags |= flag_degenerate_peak;
    }
    return rec;
  }
};

namespace detail {

template <typename Stage>
std::vector<MeasurementRecord> run_over(std::span<const LineImage> frames, const Stage& stage,
                                        int workers) {
  if (!frames.empty()) {
    const auto n = frames.front().size();
    for (const auto& f : frames) {
      if (f.size() != n) throw DataError("pipeline: frames must have equal length");
    }
  }
  std::vector<MeasurementRecord> out;
  out.reserve(frames.size());
  std::size_t next = 0;
  process_ordered(
      [&]() -> std::optional<const LineImage*> {
        if (next >= frames.size()) return std::nullopt;
        return &frames[next++];
      },
      [&](const LineImage* f) { return stage(*f); },
      [&](MeasurementRecord r) { out.push_back(std::move(r)); }, workers);
  return out;
}

}  // namespace detail

/// Per frame: optional background correction, then diameter. Frames that
/// cannot be measured become no_object records; the stream never aborts.
inline std::vector<MeasurementRecord> run_diameter_pipeline(
    std::span<const LineImage> frames, const dsp::DiameterConfig& cfg,
    const std::optional<LineImage>& reference = std::nullopt, const SensorSpec& sensor = mlx75306_preset(),
    dsp::CorrectionMode mode = dsp::CorrectionMode::subtract, int workers = 1) {
  cfg.validate();
  if (reference && !frames.empty() && reference->size() != frames.front().size())
    throw DataError("run_diameter_pipeline: reference length differs from frames");
  return detail::run_over(frames, DiameterStage{cfg, reference, mode, sensor}, workers);
}

inline std::vector<MeasurementRecord> run_height_pipeline(std::span<const LineImage> frames,
                                                          const HeightCalibration& cal,
                                                          int workers = 1) {
  if (cal.samples().size() < 2) throw CalibrationError("run_height_pipeline: calibration not set");
  return detail::run_over(frames, HeightStage{cal}, workers);
}

// ---------------------------------------------------------------------------
// Sheet-of-light rig

/// Laser triangulation geometry for the height application. A laser beam
/// offset by `baseline` from the lens axis is tilted so the spot images at
/// the sensor centre at mid-range; the spot on a surface at height h (object
/// distance standoff + h) images through a pinhole lens.
struct TriangulationRig {
  double projection_distance = 33.0;  // mm
  double baseline = 30.0;             // mm
  double standoff = 100.0;            // mm, distance at height 0
  double range = 200.0;               // mm
  double spot_diameter = 2.0;         // mm, 1/e^2 full width
  CollimatedLaser laser{};

  void validate() const {
    if (!(projection_distance > 0 && baseline > 0 && standoff > 0 && range > 0 && spot_diameter > 0))
      throw ValidationError("TriangulationRig: all lengths > 0");
  }

  double object_distance(double height) const { return standoff + height; }

  double tilt() const {
    return 0.5 * baseline * (1.0 / standoff + 1.0 / (standoff + range));
  }

  double spot_x(double height) const { return baseline - object_distance(height) * tilt(); }

  SceneSetup scene_at(double height) const {
    SceneSetup s;
    s.object_distance = object_distance(height);
    s.object = SceneObject{ObjectKind::reflector, spot_x(height), spot_diameter};
    return s;
  }

  optics::LensConfig lens() const { return {projection_distance}; }

  /// Ground-truth subpixel index of the spot centre.
  double true_index(double height, const SensorSpec& sensor) const {
    return sensor.pixel_index_of(optics::project(spot_x(height), object_distance(height), lens()));
  }

  LineImage render(double height, const SensorSpec& sensor, const optics::RenderConfig& cfg) const {
    validate();
    return optics::render_lens(scene_at(height), laser, lens(), sensor, cfg);
  }

  /// Renders one frame per knot height and records the measured apex.
  HeightCalibration calibrate(std::span<const double> knot_heights, const SensorSpec& sensor,
                              const optics::RenderConfig& cfg) const {
    std::vector<HeightCalibration::Sample> samples;
    samples.reserve(knot_heights.size());
    for (std::size_t k = 0; k < knot_heights.size(); ++k) {
      optics::RenderConfig c = cfg;
      c.rng_seed = rng::derive(cfg.rng_seed, rng::Stream::frame, k);
      const auto apex = dsp::find_peak_apex(render(knot_heights[k], sensor, c));
      samples.push_back({apex.index, knot_heights[k]});
    }
    return HeightCalibration(std::move(samples));
  }
};

/// Frames of a staircase surface: one frame per height.
inline std::vector<LineImage> height_staircase(const TriangulationRig& rig, std::span<const double> heights,
                                               const SensorSpec& sensor, const optics::RenderConfig& cfg,
                                               double line_rate = 3500.0) {
  std::vector<LineImage> frames;
  frames.reserve(heights.size());
  for (std::size_t k = 0; k < heights.size(); ++k) {
    optics::RenderConfig c = cfg;
    c.rng_seed = rng::derive(cfg.rng_seed, rng::Stream::frame, k + 0x10000);
    LineImage f = rig.render(heights[k], sensor, c);
    f.frame_index = static_cast<std::int64_t>(k);
    f.timestamp = static_cast<double>(k) / line_rate;
    frames.push_back(std::move(f));
  }
  return frames;
}

// ---------------------------------------------------------------------------
// Throughput

enum class PipelineKind { diameter, height };

struct ThroughputReport {
  std::size_t frames = 0;
  double lines_per_second = 0.0;
  std::vector<std::pair<std::string, double>> per_stage_times;  // s, summed over frames
};

/// Wall-clock benchmark of the processing stages on synthetic frames
/// (rendering is excluded). Cycles through a small bank of distinct frames.
inline ThroughputReport throughput_report(std::size_t n_frames, PipelineKind kind,
                                          const SensorSpec& sensor) {
  if (n_frames < 100) throw ValidationError("throughput_report: n_frames >= 100");
  sensor.validate();
  using clock = std::chrono::steady_clock;
  constexpr std::size_t bank_size = 32;

  optics::RenderConfig cfg;
  cfg.rays_per_pixel = 16;
  std::vector<LineImage> bank;
  bank.reserve(bank_size);
  for (std::size_t k = 0; k < bank_size; ++k) {
    cfg.rng_seed = k + 1;
    if (kind == PipelineKind::diameter) {
      const double shift = 0.25 * sensor.active_length_mm() * (static_cast<double>(k) / bank_size - 0.5);
      bank.push_back(optics::render_lensless(wire_scene(0.4 * sensor.active_length_mm(), shift),
                                             IdealTelecentric{}, sensor, cfg));
    } else {
      // Bright spot scanned across the middle half of the array.
      SceneSetup s;
      s.object_distance = 50.0;
      const double x = 0.25 * sensor.active_length_mm() * (static_cast<double>(k) / bank_size - 0.5);
      s.object = SceneObject{ObjectKind::reflector, x, 6.0 * sensor.pitch_mm()};
      bank.push_back(optics::render_lens(s, CollimatedLaser{}, {50.0}, sensor, cfg));
    }
  }
  const LineImage reference = optics::render_lensless(SceneSetup{}, IdealTelecentric{}, sensor, cfg);

  std::vector<HeightCalibration::Sample> knots{{0.0, 0.0},
                                               {static_cast<double>(sensor.pixel_count - 1), 200.0}};
  const HeightCalibration cal(knots);
  dsp::DiameterConfig dcfg;
  dcfg.pixel_pitch = sensor.pixel_pitch;
  dcfg.edge_config.noise_sigma = sensor.noise_sigma;

  double t_a = 0.0;
  double t_b = 0.0;
  double sink = 0.0;
  const auto start = clock::now();
  for (std::size_t k = 0; k < n_frames; ++k) {
    const LineImage& f = bank[k % bank_size];
    const auto t0 = clock::now();
    if (kind == PipelineKind::diameter) {
      const LineImage c = dsp::background_correct(f, reference, dsp::CorrectionMode::subtract, sensor);
      const auto t1 = clock::now();
      try {
        sink += dsp::measure_diameter(c, dcfg).diameter;
      } catch (const MeasurementError&) {
      }
      const auto t2 = clock::now();
      t_a += std::chrono::duration<double>(t1 - t0).count();
      t_b += std::chrono::duration<double>(t2 - t1).count();
    } else {
      dsp::PeakApex apex{};
      try {
        apex = dsp::find_peak_apex(f);
      } catch (const MeasurementError&) {
      }
      const auto t1 = clock::now();
      sink += dsp::height_from_peak(apex, cal).height;
      const auto t2 = clock::now();
      t_a += std::chrono::duration<double>(t1 - t0).count();
      t_b += std::chrono::duration<double>(t2 - t1).count();
    }
  }
  const double total = std::chrono::duration<double>(clock::now() - start).count();
  // Keep the optimiser from discarding the work.
  if (sink == -1.0) throw std::logic_error("unreachable");

  ThroughputReport r;
  r.frames = n_frames;
  r.lines_per_second = static_cast<double>(n_frames) / total;
  if (kind == PipelineKind::diameter) {
    r.per_stage_times = {{"background_correct", t_a}, {"measure_diameter", t_b}};
  } else {
    r.per_stage_times = {{"find_peak_apex", t_a}, {"height_from_peak", t_b}};
  }
  return r;
}

}  // namespace linescan::stream
