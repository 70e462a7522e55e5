#pragma once

// Run configuration: a sectioned INI document whose keys are the field names
// of the model types. Unknown sections or keys are rejected; missing keys keep
// the defaults below; the parsed result is re-validated.
//
//   [sensor]   pixel_count pixel_pitch bit_depth dark_level noise_sigma
//              saturation_fraction max_line_rate
//   [light]    kind = extended_led | collimated_laser | ideal_telecentric
//              distance_to_sensor emitter_diameter divergence_half_angle
//              telecentric_slope_alpha beam_half_width
//   [speckle]  contrast correlation_length seed      (laser only; presence enables)
//   [scene]    object_distance object = none | occluder | reflector
//              center_x diameter vibration_amplitude vibration_frequency transport_speed
//   [render]   rays_per_pixel rng_seed add_sensor_noise worker_threads
//   [lens]     projection_distance
//   [scan]     duration line_rate flaws = start:length:diameter, ...
//   [diameter] nominal_min nominal_max threshold_fraction plateau_low plateau_high
//              method = area | linear   correction = none | subtract | normalize
//   [height]   projection_distance baseline standoff range spot_diameter knot_step step

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "linescan/dsp.hpp"
#include "linescan/error.hpp"
#include "linescan/io.hpp"
#include "linescan/model.hpp"
#include "linescan/optics.hpp"
#include "linescan/stream.hpp"

namespace linescan::config {

enum class Correction { none, subtract, normalize };

struct ScanSettings {
  double duration = 0.14;  // s
  double line_rate = 7142.857142857143;  // Hz
  std::vector<stream::Flaw> flaws;
  bool operator==(const ScanSettings& o) const {
    if (duration != o.duration || line_rate != o.line_rate || flaws.size() != o.flaws.size()) return false;
    for (std::size_t i = 0; i < flaws.size(); ++i) {
      if (flaws[i].start != o.flaws[i].start || flaws[i].length != o.flaws[i].length ||
          flaws[i].diameter != o.flaws[i].diameter)
        return false;
    }
    return true;
  }
};

struct DiameterSettings {
  double nominal_min = 2.5;
  double nominal_max = 4.0;
  double threshold_fraction = 0.5;
  double plateau_low = 0.1;
  double plateau_high = 0.9;
  dsp::SubpixelMethod method = dsp::SubpixelMethod::area;
  Correction correction = Correction::none;
  bool operator==(const DiameterSettings&) const = default;

  dsp::DiameterConfig to_config(const SensorSpec& sensor) const {
    dsp::DiameterConfig c;
    c.nominal_min = nominal_min;
    c.nominal_max = nominal_max;
    c.pixel_pitch = sensor.pixel_pitch;
    c.edge_config.threshold_fraction = threshold_fraction;
    c.edge_config.plateau_low = plateau_low;
    c.edge_config.plateau_high = plateau_high;
    c.edge_config.noise_sigma = sensor.noise_sigma;
    c.edge_config.method = method;
    return c;
  }
};

struct HeightSettings {
  double projection_distance = 33.0;
  double baseline = 30.0;
  double standoff = 100.0;
  double range = 200.0;
  double spot_diameter = 2.0;
  double knot_step = 10.0;  // mm between calibration knots
  double step = 2.5;        // mm between staircase treads
  bool operator==(const HeightSettings&) const = default;

  stream::TriangulationRig rig() const {
    stream::TriangulationRig r;
    r.projection_distance = projection_distance;
    r.baseline = baseline;
    r.standoff = standoff;
    r.range = range;
    r.spot_diameter = spot_diameter;
    return r;
  }
};

struct RunConfig {
  SensorSpec sensor = mlx75306_preset();
  LightModel light = led_preset();
  SceneSetup scene = wire_scene(3.0);
  optics::RenderConfig render;
  optics::LensConfig lens;
  ScanSettings scan;
  DiameterSettings diameter;
  HeightSettings height;

  void validate() const {
    sensor.validate();
    linescan::validate(light);
    scene.validate(light);
    render.validate();
    if (!(lens.projection_distance > 0)) throw ValidationError("lens: projection_distance > 0");
    if (!(scan.duration > 0 && scan.line_rate > 0)) throw ValidationError("scan: duration, line_rate > 0");
    diameter.to_config(sensor).validate();
    height.rig().validate();
    if (!(height.knot_step > 0 && height.step > 0)) throw ValidationError("height: knot_step, step > 0");
  }

  stream::ScanProfile scan_profile() const {
    stream::ScanProfile p;
    p.duration = scan.duration;
    p.line_rate = scan.line_rate;
    p.scene = scene;
    p.light = light;
    p.sensor = sensor;
    p.render = render;
    p.flaws = scan.flaws;
    return p;
  }

  bool operator==(const RunConfig&) const = default;
};

namespace detail {

using boost::property_tree::ptree;

/// Shortest decimal that reads back to the same double.
inline std::string real(double v) {
  char buf[40];
  for (int digits = 15; digits <= 17; ++digits) {
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

class Reader {
 public:
  Reader(const ptree& tree, std::string section) : section_(std::move(section)) {
    if (auto child = tree.get_child_optional(section_)) node_ = &*child;
  }

  bool present() const { return node_ != nullptr; }

  std::optional<std::string> raw(const std::string& key) {
    used_.insert(key);
    if (!node_) return std::nullopt;
    if (auto v = node_->get_optional<std::string>(key)) return io::detail::trim(*v);
    return std::nullopt;
  }

  void real(const std::string& key, double& out) {
    if (auto v = raw(key)) {
      char* end = nullptr;
      out = std::strtod(v->c_str(), &end);
      if (v->empty() || end != v->c_str() + v->size()) fail(key, "expected a number");
    }
  }

  template <typename Int>
  void integer(const std::string& key, Int& out) {
    if (auto v = raw(key)) {
      char* end = nullptr;
      const unsigned long long u = std::strtoull(v->c_str(), &end, 10);
      if (v->empty() || end != v->c_str() + v->size() || (*v)[0] == '-') {
        // Signed fields may legitimately be negative; let validation judge.
        const long long s = std::strtoll(v->c_str(), &end, 10);
        if (v->empty() || end != v->c_str() + v->size()) fail(key, "expected an integer");
        out = static_cast<Int>(s);
        return;
      }
      out = static_cast<Int>(u);
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (auto v = raw(key)) {
      if (*v == "true" || *v == "1") out = true;
      else if (*v == "false" || *v == "0") out = false;
      else fail(key, "expected true or false");
    }
  }

  template <typename E>
  void choice(const std::string& key, E& out, const std::map<std::string, E>& options) {
    if (auto v = raw(key)) {
      auto it = options.find(*v);
      if (it == options.end()) fail(key, "unknown value '" + *v + "'");
      out = it->second;
    }
  }

  bool has(const std::string& key) const { return node_ && node_->get_child_optional(key); }

  /// Rejects keys that were never asked for.
  void finish() const {
    if (!node_) return;
    for (const auto& [key, value] : *node_) {
      if (!used_.count(key)) throw ValidationError("config: unknown key '" + key + "' in [" + section_ + "]");
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& why) const {
    throw ValidationError("config: [" + section_ + "] " + key + ": " + why);
  }

 private:
  std::string section_;
  const ptree* node_ = nullptr;
  std::set<std::string> used_;
};

inline const std::map<std::string, int> kLightKinds{
    {"extended_led", 0}, {"collimated_laser", 1}, {"ideal_telecentric", 2}};

inline std::vector<stream::Flaw> parse_flaws(const std::string& text) {
  std::vector<stream::Flaw> out;
  for (const auto& item : io::detail::split(text, ',')) {
    const std::string t = io::detail::trim(item);
    if (t.empty()) continue;
    const auto parts = io::detail::split(t, ':');
    if (parts.size() != 3) throw ValidationError("config: [scan] flaws: expected start:length:diameter");
    stream::Flaw f;
    try {
      f.start = std::stod(parts[0]);
      f.length = std::stod(parts[1]);
      f.diameter = std::stod(parts[2]);
    } catch (const std::exception&) {
      throw ValidationError("config: [scan] flaws: expected numbers in '" + t + "'");
    }
    out.push_back(f);
  }
  return out;
}

}  // namespace detail

inline RunConfig parse(std::istream& is) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  static const std::set<std::string> sections{"sensor", "light", "speckle", "scene", "render",
                                              "lens",   "scan",  "diameter", "height"};
  for (const auto& [name, child] : tree) {
    if (!sections.count(name)) throw ValidationError("config: unknown section [" + name + "]");
    if (child.empty() && !child.data().empty())
      throw ValidationError("config: key '" + name + "' outside of a section");
  }

  RunConfig cfg;
  {
    detail::Reader r(tree, "sensor");
    auto& s = cfg.sensor;
    r.integer("pixel_count", s.pixel_count);
    r.real("pixel_pitch", s.pixel_pitch);
    r.integer("bit_depth", s.bit_depth);
    r.real("dark_level", s.dark_level);
    r.real("noise_sigma", s.noise_sigma);
    r.real("saturation_fraction", s.saturation_fraction);
    r.real("max_line_rate", s.max_line_rate);
    r.finish();
  }
  {
    detail::Reader r(tree, "light");
    int kind = 0;
    r.choice("kind", kind, detail::kLightKinds);
    ExtendedLed led;
    CollimatedLaser laser;
    // distance_to_sensor is shared by both finite-distance sources.
    double distance = kind == 1 ? laser.distance_to_sensor : led.distance_to_sensor;
    r.real("distance_to_sensor", distance);
    led.distance_to_sensor = laser.distance_to_sensor = distance;
    r.real("emitter_diameter", led.emitter_diameter);
    r.real("divergence_half_angle", led.divergence_half_angle);
    r.real("telecentric_slope_alpha", laser.telecentric_slope_alpha);
    r.real("beam_half_width", laser.beam_half_width);
    r.finish();

    detail::Reader sp(tree, "speckle");
    if (sp.present()) {
      if (kind != 1) throw ValidationError("config: [speckle] requires light kind collimated_laser");
      SpeckleParams p;
      sp.real("contrast", p.contrast);
      sp.real("correlation_length", p.correlation_length);
      sp.integer("seed", p.seed);
      sp.finish();
      laser.speckle = p;
    }
    if (kind == 0) cfg.light = led;
    else if (kind == 1) cfg.light = laser;
    else cfg.light = IdealTelecentric{};
  }
  {
    detail::Reader r(tree, "scene");
    auto& s = cfg.scene;
    r.real("object_distance", s.object_distance);
    int object = s.object ? static_cast<int>(s.object->kind) + 1 : 0;
    r.choice("object", object, std::map<std::string, int>{{"none", 0}, {"occluder", 1}, {"reflector", 2}});
    SceneObject obj = s.object.value_or(SceneObject{});
    r.real("center_x", obj.center_x);
    r.real("diameter", obj.diameter);
    s.object = object == 0 ? std::nullopt
                           : std::optional<SceneObject>(SceneObject{
                                 object == 1 ? ObjectKind::occluder : ObjectKind::reflector, obj.center_x,
                                 obj.diameter});
    const bool has_motion = r.has("vibration_amplitude") || r.has("vibration_frequency") ||
                            r.has("transport_speed");
    Motion m;
    r.real("vibration_amplitude", m.vibration_amplitude);
    r.real("vibration_frequency", m.vibration_frequency);
    r.real("transport_speed", m.transport_speed);
    if (has_motion) s.motion = m;
    r.finish();
  }
  {
    detail::Reader r(tree, "render");
    r.integer("rays_per_pixel", cfg.render.rays_per_pixel);
    r.integer("rng_seed", cfg.render.rng_seed);
    r.boolean("add_sensor_noise", cfg.render.add_sensor_noise);
    r.integer("worker_threads", cfg.render.worker_threads);
    r.finish();
  }
  {
    detail::Reader r(tree, "lens");
    r.real("projection_distance", cfg.lens.projection_distance);
    r.finish();
  }
  {
    detail::Reader r(tree, "scan");
    r.real("duration", cfg.scan.duration);
    r.real("line_rate", cfg.scan.line_rate);
    if (auto f = r.raw("flaws")) cfg.scan.flaws = detail::parse_flaws(*f);
    r.finish();
  }
  {
    detail::Reader r(tree, "diameter");
    auto& d = cfg.diameter;
    r.real("nominal_min", d.nominal_min);
    r.real("nominal_max", d.nominal_max);
    r.real("threshold_fraction", d.threshold_fraction);
    r.real("plateau_low", d.plateau_low);
    r.real("plateau_high", d.plateau_high);
    r.choice("method", d.method,
             std::map<std::string, dsp::SubpixelMethod>{{"area", dsp::SubpixelMethod::area},
                                                        {"linear", dsp::SubpixelMethod::linear}});
    r.choice("correction", d.correction,
             std::map<std::string, Correction>{{"none", Correction::none},
                                               {"subtract", Correction::subtract},
                                               {"normalize", Correction::normalize}});
    r.finish();
  }
  {
    detail::Reader r(tree, "height");
    auto& h = cfg.height;
    r.real("projection_distance", h.projection_distance);
    r.real("baseline", h.baseline);
    r.real("standoff", h.standoff);
    r.real("range", h.range);
    r.real("spot_diameter", h.spot_diameter);
    r.real("knot_step", h.knot_step);
    r.real("step", h.step);
    r.finish();
  }
  cfg.validate();
  return cfg;
}

inline RunConfig parse(const std::string& text) {
  std::istringstream is(text);
  return parse(is);
}

inline RunConfig load(const std::filesystem::path& path) {
  auto is = io::open_input(path);
  return parse(is);
}

/// Writes every key, so the output documents the full set of defaults.
inline void write(std::ostream& os, const RunConfig& cfg) {
  using detail::real;
  const auto& s = cfg.sensor;
  os << "[sensor]\n"
     << "pixel_count = " << s.pixel_count << '\n'
     << "pixel_pitch = " << real(s.pixel_pitch) << '\n'
     << "bit_depth = " << s.bit_depth << '\n'
     << "dark_level = " << real(s.dark_level) << '\n'
     << "noise_sigma = " << real(s.noise_sigma) << '\n'
     << "saturation_fraction = " << real(s.saturation_fraction) << '\n'
     << "max_line_rate = " << real(s.max_line_rate) << "\n\n";

  os << "[light]\n";
  const SpeckleParams* speckle = nullptr;
  if (const auto* led = std::get_if<ExtendedLed>(&cfg.light)) {
    os << "kind = extended_led\n"
       << "distance_to_sensor = " << real(led->distance_to_sensor) << '\n'
       << "emitter_diameter = " << real(led->emitter_diameter) << '\n'
       << "divergence_half_angle = " << real(led->divergence_half_angle) << '\n';
  } else if (const auto* laser = std::get_if<CollimatedLaser>(&cfg.light)) {
    os << "kind = collimated_laser\n"
       << "distance_to_sensor = " << real(laser->distance_to_sensor) << '\n'
       << "telecentric_slope_alpha = " << real(laser->telecentric_slope_alpha) << '\n'
       << "beam_half_width = " << real(laser->beam_half_width) << '\n';
    if (laser->speckle) speckle = &*laser->speckle;
  } else {
    os << "kind = ideal_telecentric\n";
  }
  os << '\n';
  if (speckle) {
    os << "[speckle]\n"
       << "contrast = " << real(speckle->contrast) << '\n'
       << "correlation_length = " << real(speckle->correlation_length) << '\n'
       << "seed = " << speckle->seed << "\n\n";
  }

  const auto& sc = cfg.scene;
  os << "[scene]\n" << "object_distance = " << real(sc.object_distance) << '\n';
  if (sc.object) {
    os << "object = " << (sc.object->kind == ObjectKind::occluder ? "occluder" : "reflector") << '\n'
       << "center_x = " << real(sc.object->center_x) << '\n'
       << "diameter = " << real(sc.object->diameter) << '\n';
  } else {
    os << "object = none\n";
  }
  if (sc.motion) {
    os << "vibration_amplitude = " << real(sc.motion->vibration_amplitude) << '\n'
       << "vibration_frequency = " << real(sc.motion->vibration_frequency) << '\n'
       << "transport_speed = " << real(sc.motion->transport_speed) << '\n';
  }
  os << '\n';

  os << "[render]\n"
     << "rays_per_pixel = " << cfg.render.rays_per_pixel << '\n'
     << "rng_seed = " << cfg.render.rng_seed << '\n'
     << "add_sensor_noise = " << (cfg.render.add_sensor_noise ? "true" : "false") << '\n'
     << "worker_threads = " << cfg.render.worker_threads << "\n\n";

  os << "[lens]\n" << "projection_distance = " << real(cfg.lens.projection_distance) << "\n\n";

  os << "[scan]\n"
     << "duration = " << real(cfg.scan.duration) << '\n'
     << "line_rate = " << real(cfg.scan.line_rate) << '\n';
  if (!cfg.scan.flaws.empty()) {
    os << "flaws = ";
    for (std::size_t i = 0; i < cfg.scan.flaws.size(); ++i) {
      const auto& f = cfg.scan.flaws[i];
      os << (i ? ", " : "") << real(f.start) << ':' << real(f.length) << ':' << real(f.diameter);
    }
    os << '\n';
  }
  os << '\n';

  const auto& d = cfg.diameter;
  os << "[diameter]\n"
     << "nominal_min = " << real(d.nominal_min) << '\n'
     << "nominal_max = " << real(d.nominal_max) << '\n'
     << "threshold_fraction = " << real(d.threshold_fraction) << '\n'
     << "plateau_low = " << real(d.plateau_low) << '\n'
     << "plateau_high = " << real(d.plateau_high) << '\n'
     << "method = " << (d.method == dsp::SubpixelMethod::area ? "area" : "linear") << '\n'
     << "correction = "
     << (d.correction == Correction::none ? "none" : d.correction == Correction::subtract ? "subtract" : "normalize")
     << "\n\n";

  const auto& h = cfg.height;
  os << "[height]\n"
     << "projection_distance = " << real(h.projection_distance) << '\n'
     << "baseline = " << real(h.baseline) << '\n'
     << "standoff = " << real(h.standoff) << '\n'
     << "range = " << real(h.range) << '\n'
     << "spot_diameter = " << real(h.spot_diameter) << '\n'
     << "knot_step = " << real(h.knot_step) << '\n'
     << "step = " << real(h.step) << '\n';
}

inline std::string to_string(const RunConfig& cfg) {
  std::ostringstream os;
  write(os, cfg);
  return os.str();
}

}  // namespace linescan::config
