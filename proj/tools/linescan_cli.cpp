// linescan: sizing calculators, simulation and measurement from the shell.
//
//   linescan calc pixels --fov 6 --accuracy 0.05
//   linescan sim lensless --config run.ini --out frames.csv --frames 10
//   linescan measure diameter --simulate --config run.ini --out records.csv
//
// Exit codes: 0 success, 2 usage, 3 configuration/validation, 4 data.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "linescan/linescan.hpp"

namespace {

using namespace linescan;
using nlohmann::json;

enum ExitCode { kOk = 0, kUsage = 2, kConfig = 3, kData = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::uint64_t seed = 0;
  bool seed_given = false;
  int workers = 0;
  bool json = false;
  std::string config_path;
  std::string out;
  std::string input;
  std::string reference;
  std::string calibration;
  std::string summary;
  bool simulate = false;
  std::size_t frames = 0;
  bool frames_given = false;
};

std::string fmt(double v, const char* spec = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

config::RunConfig load_config(const Options& o) {
  config::RunConfig cfg = o.config_path.empty() ? config::RunConfig{} : config::load(o.config_path);
  if (o.workers > 0) cfg.render.worker_threads = o.workers;
  return cfg;
}

/// --seed, then LINESCAN_SEED, then the configured rng_seed.
std::uint64_t resolve_seed(const Options& o, const config::RunConfig& cfg) {
  if (o.seed_given) return o.seed;
  if (const char* env = std::getenv("LINESCAN_SEED"); env && *env) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 0);
    if (*end != '\0' || env[0] == '-') throw UsageError(std::string("LINESCAN_SEED: not an integer: ") + env);
    return v;
  }
  return cfg.render.rng_seed;
}

void write_metadata(const std::string& out, const std::string& command, std::uint64_t seed, std::size_t rows,
                    const config::RunConfig& cfg) {
  json meta{{"command", command}, {"seed", seed}, {"rows", rows}, {"output", out}, {"config", config::to_string(cfg)}};
  io::atomic_write(out + ".json", [&](std::ostream& os) { os << meta.dump(2) << '\n'; });
}

// ---------------------------------------------------------------------------
// calc

void print_result(const Options& o, const json& j, const std::string& text) {
  if (o.json)
    std::cout << j.dump() << '\n';
  else
    std::cout << text << '\n';
}

void add_calc(CLI::App& app, Options& o) {
  auto* calc = app.add_subcommand("calc", "Sizing calculators")->require_subcommand(1);
  calc->add_flag("--json", o.json, "Print machine-readable JSON");

  static double fov = 0, accuracy = 0, subpixel = 1;
  auto* pixels = calc->add_subcommand("pixels", "Pixels needed for a field of view and accuracy");
  pixels->add_option("--fov", fov, "Field of view (mm)")->required();
  pixels->add_option("--accuracy", accuracy, "Required accuracy (mm)")->required();
  pixels->add_option("--subpixel", subpixel, "Subpixel factor")->capture_default_str();
  pixels->callback([&o] {
    const long n = sizing::required_pixel_count(fov, accuracy, subpixel);
    print_result(o, {{"pixel_count", n}}, std::to_string(n));
  });

  static double speed = 0, interval = 0, rate = 0;
  auto* rate_cmd = calc->add_subcommand("rate", "Line rate for a transport speed and sample interval");
  rate_cmd->add_option("--speed", speed, "Transport speed (m/s)")->required();
  rate_cmd->add_option("--interval", interval, "Sample interval along the motion (m)")->required();
  rate_cmd->callback([&o] {
    const double hz = sizing::required_line_rate(speed, interval * 1e3);
    print_result(o, {{"line_rate_hz", hz}}, fmt(hz) + " Hz");
  });

  auto* speed_cmd = calc->add_subcommand("speed", "Maximum transport speed for a line rate");
  speed_cmd->add_option("--rate", rate, "Line rate (Hz)")->required();
  speed_cmd->add_option("--interval", interval, "Sample interval along the motion (m)")->required();
  speed_cmd->callback([&o] {
    const double v = sizing::max_transport_speed(rate, interval * 1e3);
    print_result(o, {{"speed_m_s", v}}, fmt(v) + " m/s");
  });

  static double es = 0, area = 0, eta_led = 0, eta_o = 0;
  auto* energy = calc->add_subcommand("energy", "Electrical LED energy per exposure");
  energy->add_option("--es", es, "Saturation energy density (J/m^2)")->required();
  energy->add_option("--area", area, "Illuminated area (m^2)")->required();
  energy->add_option("--eta-led", eta_led, "LED efficiency (0, 1]")->required();
  energy->add_option("--eta-o", eta_o, "Optical efficiency (0, 1]")->required();
  energy->callback([&o] {
    const double e = sizing::led_electrical_energy(es, area, eta_led, eta_o);
    print_result(o, {{"energy_j", e}}, fmt(e) + " J");
  });

  static std::string preset;
  static double t_int = -1, t_read = -1, t_comp = -1;
  static bool overlapped = false;
  auto* timing = calc->add_subcommand("timing", "Achievable line rate from exposure timing");
  timing->add_option("--preset", preset, "Timing preset")
      ->check(CLI::IsMember({"mlx75306", "sheet_of_light"}));
  timing->add_option("--integration", t_int, "Integration time (us)");
  timing->add_option("--readout", t_read, "Readout time (us)");
  timing->add_option("--compute", t_comp, "Per-line compute time (us)");
  timing->add_flag("--overlapped", overlapped, "Readout overlaps the next integration");
  timing->callback([&o] {
    TimingModel t;
    if (preset == "sheet_of_light")
      t = sheet_of_light_timing();
    else if (preset == "mlx75306")
      t = mlx75306_timing();
    else if (t_int < 0 || t_read < 0)
      throw UsageError("calc timing: give --preset or both --integration and --readout");
    if (t_int >= 0) t.integration_time = t_int * 1e-6;
    if (t_read >= 0) t.readout_time = t_read * 1e-6;
    if (t_comp >= 0) t.compute_time = t_comp * 1e-6;
    if (overlapped) t.overlapped_readout = true;
    const double period = sizing::line_period(t);
    const double hz = sizing::achievable_line_rate(t);
    print_result(o, {{"line_period_s", period}, {"line_rate_hz", hz}},
                 fmt(hz) + " Hz (period " + fmt(period * 1e6) + " us)");
  });
}

// ---------------------------------------------------------------------------
// sim

void add_sim(CLI::App& app, Options& o) {
  auto* sim = app.add_subcommand("sim", "Render frames, ray diagrams and parameter sweeps")->require_subcommand(1);
  auto common = [&o](CLI::App* c, bool frames) {
    c->add_option("--config", o.config_path, "Run configuration (INI)")->check(CLI::ExistingFile);
    c->add_option("--out", o.out, "Output CSV")->required();
    if (frames) {
      c->add_option_function<std::size_t>(
          "--frames",
          [&o](std::size_t n) {
            o.frames = n;
            o.frames_given = true;
          },
          "Number of frames (default: [scan] duration x line_rate)");
    }
  };

  auto* lensless = sim->add_subcommand("lensless", "Shadow frames of the configured scan");
  common(lensless, true);
  lensless->callback([&o] {
    const auto cfg = load_config(o);
    const auto seed = resolve_seed(o, cfg);
    const stream::ScanGenerator gen(cfg.scan_profile(), seed);
    const std::size_t n = o.frames_given ? o.frames : gen.size();
    io::atomic_write(o.out, [&](std::ostream& os) {
      io::write_frame_header(os, cfg.sensor);
      for (std::size_t k = 0; k < n; ++k) io::write_frame_row(os, gen.frame(k));
    });
    write_metadata(o.out, "sim lensless", seed, n, cfg);
  });

  auto* lens = sim->add_subcommand("lens", "Front-lit frames through a lens");
  common(lens, true);
  lens->callback([&o] {
    const auto cfg = load_config(o);
    const auto seed = resolve_seed(o, cfg);
    const double rate = cfg.scan.line_rate;
    const std::size_t n = o.frames_given ? o.frames : cfg.scan_profile().frame_count();
    io::atomic_write(o.out, [&](std::ostream& os) {
      io::write_frame_header(os, cfg.sensor);
      for (std::size_t k = 0; k < n; ++k) {
        optics::RenderConfig r = cfg.render;
        r.rng_seed = rng::derive(seed, rng::Stream::frame, k);
        LineImage f = optics::render_lens(cfg.scene, cfg.light, cfg.lens, cfg.sensor, r);
        f.frame_index = static_cast<std::int64_t>(k);
        f.timestamp = static_cast<double>(k) / rate;
        io::write_frame_row(os, f);
      }
    });
    write_metadata(o.out, "sim lens", seed, n, cfg);
  });

  static int n_rays = 200;
  auto* rays = sim->add_subcommand("rays", "Ray diagram segments");
  common(rays, false);
  rays->add_option("--rays", n_rays, "Number of rays")->capture_default_str()->check(CLI::PositiveNumber);
  rays->callback([&o] {
    const auto cfg = load_config(o);
    const auto seed = resolve_seed(o, cfg);
    const auto segments = optics::trace_rays(cfg.light, cfg.scene, n_rays, seed);
    io::atomic_write(o.out, [&](std::ostream& os) { io::write_rays_csv(os, segments); });
    write_metadata(o.out, "sim rays", seed, segments.size(), cfg);
  });

  static std::vector<double> light_distances{100, 200, 300, 400, 500};
  static std::vector<double> object_distances{5, 10, 20, 40};
  auto* sweep_cmd = sim->add_subcommand("sweep", "Edge width and sharpness over light x object distance");
  common(sweep_cmd, false);
  sweep_cmd->add_option("--light-distances", light_distances, "Light distances (mm)")
      ->delimiter(',')
      ->capture_default_str();
  sweep_cmd->add_option("--object-distances", object_distances, "Object distances (mm)")
      ->delimiter(',')
      ->capture_default_str();
  sweep_cmd->callback([&o] {
    auto cfg = load_config(o);
    const auto seed = resolve_seed(o, cfg);
    cfg.render.rng_seed = seed;
    const auto rows = sweep::edge_sweep(cfg.light, light_distances, object_distances, cfg.sensor, cfg.render);
    io::atomic_write(o.out, [&](std::ostream& os) { io::write_sweep_csv(os, rows); });
    write_metadata(o.out, "sim sweep", seed, rows.size(), cfg);
  });
}

// ---------------------------------------------------------------------------
// measure

std::vector<LineImage> read_frames(const std::string& path, const SensorSpec& sensor) {
  auto is = io::open_input(path);
  auto file = io::read_frames_csv(is);
  if (file.header.pixel_count != sensor.pixel_count)
    throw DataError(path + ": pixel_count " + std::to_string(file.header.pixel_count) +
                    " does not match configured " + std::to_string(sensor.pixel_count));
  if (file.header.bit_depth != sensor.bit_depth)
    throw DataError(path + ": bit_depth " + std::to_string(file.header.bit_depth) + " does not match configured " +
                    std::to_string(sensor.bit_depth));
  return std::move(file.frames);
}

json summarize(const std::vector<stream::MeasurementRecord>& records) {
  std::vector<double> v;
  std::size_t alarms = 0;
  std::size_t no_object = 0;
  std::size_t flagged = 0;
  for (const auto& r : records) {
    if (r.has(stream::flag_alarm)) ++alarms;
    if (r.has(stream::flag_no_object)) ++no_object;
    if (r.flags) ++flagged;
    const double x = r.value_mm();
    if (std::isfinite(x)) v.push_back(x);
  }
  json j{{"frames", records.size()}, {"measured", v.size()}, {"alarm_count", alarms},
         {"no_object_count", no_object}, {"flagged_count", flagged}};
  if (v.empty()) {
    j["mean_mm"] = j["std_mm"] = j["min_mm"] = j["max_mm"] = nullptr;
    return j;
  }
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  j["mean_mm"] = mean;
  j["std_mm"] = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  j["min_mm"] = *std::min_element(v.begin(), v.end());
  j["max_mm"] = *std::max_element(v.begin(), v.end());
  return j;
}

void emit_records(const Options& o, const std::vector<stream::MeasurementRecord>& records, json summary) {
  io::atomic_write(o.out, [&](std::ostream& os) { io::write_records_csv(os, records); });
  if (!o.summary.empty())
    io::atomic_write(o.summary, [&](std::ostream& os) { os << summary.dump(2) << '\n'; });
  std::cout << summary.dump(2) << '\n';
}

std::vector<double> staircase_heights(double range, double step) {
  std::vector<double> h;
  const auto n = static_cast<std::size_t>(std::floor(range / step + 1e-9));
  for (std::size_t k = 0; k <= n; ++k) h.push_back(static_cast<double>(k) * step);
  return h;
}

HeightCalibration simulated_calibration(const config::RunConfig& cfg, std::uint64_t seed) {
  optics::RenderConfig r = cfg.render;
  r.rng_seed = rng::derive(seed, rng::Stream::frame, 0xCA1);
  const auto knots = staircase_heights(cfg.height.range, cfg.height.knot_step);
  return cfg.height.rig().calibrate(knots, cfg.sensor, r);
}

void add_measure(CLI::App& app, Options& o) {
  auto* measure = app.add_subcommand("measure", "Run measurement pipelines")->require_subcommand(1);
  auto common = [&o](CLI::App* c) {
    c->add_option("--config", o.config_path, "Run configuration (INI)")->check(CLI::ExistingFile);
    c->add_option("--out", o.out, "Output CSV")->required();
    auto* in = c->add_option("--input", o.input, "Input CSV")->check(CLI::ExistingFile);
    auto* simf = c->add_flag("--simulate", o.simulate, "Generate input from the configuration");
    in->excludes(simf);
  };
  auto frames_opt = [&o](CLI::App* c) {
    c->add_option_function<std::size_t>(
        "--frames",
        [&o](std::size_t n) {
          o.frames = n;
          o.frames_given = true;
        },
        "Simulated frame count (default: [scan] duration x line_rate)");
  };

  auto* diameter = measure->add_subcommand("diameter", "Wire diameter per frame");
  common(diameter);
  frames_opt(diameter);
  diameter->add_option("--reference", o.reference, "Reference frame CSV (first frame used)")
      ->check(CLI::ExistingFile);
  diameter->add_option("--summary", o.summary, "Summary JSON path");
  diameter->callback([&o] {
    const auto cfg = load_config(o);
    const auto seed = resolve_seed(o, cfg);
    std::vector<LineImage> frames;
    std::optional<LineImage> reference;
    const bool correct = cfg.diameter.correction != config::Correction::none;
    if (o.simulate) {
      const stream::ScanGenerator gen(cfg.scan_profile(), seed);
      const std::size_t n = o.frames_given ? o.frames : gen.size();
      frames.reserve(n);
      for (std::size_t k = 0; k < n; ++k) frames.push_back(gen.frame(k));
      if (correct) {
        SceneSetup empty = cfg.scene;
        empty.object.reset();
        optics::RenderConfig r = cfg.render;
        r.rng_seed = rng::derive(seed, rng::Stream::frame, 0xBAC6);
        reference = optics::render_lensless(empty, cfg.light, cfg.sensor, r);
      }
    } else if (!o.input.empty()) {
      frames = read_frames(o.input, cfg.sensor);
      if (correct) {
        if (o.reference.empty()) throw UsageError("measure diameter: correction needs --reference");
        auto ref = read_frames(o.reference, cfg.sensor);
        if (ref.empty()) throw DataError(o.reference + ": no frames");
        reference = std::move(ref.front());
      }
    } else {
      throw UsageError("measure diameter: give --input or --simulate");
    }
    const auto mode = cfg.diameter.correction == config::Correction::normalize ? dsp::CorrectionMode::normalize
                                                                               : dsp::CorrectionMode::subtract;
    const auto records = stream::run_diameter_pipeline(frames, cfg.diameter.to_config(cfg.sensor), reference,
                                                       cfg.sensor, mode, cfg.render.worker_threads);
    json summary = summarize(records);
    summary["seed"] = seed;
    emit_records(o, records, summary);
  });

  auto* height = measure->add_subcommand("height", "Sheet-of-light height per frame");
  common(height);
  height->add_option("--calibration", o.calibration, "Calibration CSV (pixel_index,height_mm)")
      ->check(CLI::ExistingFile);
  height->add_option("--summary", o.summary, "Summary JSON path");
  height->callback([&o] {
    const auto cfg = load_config(o);
    const auto seed = resolve_seed(o, cfg);
    std::optional<HeightCalibration> cal;
    if (!o.calibration.empty()) {
      auto is = io::open_input(o.calibration);
      cal = io::read_calibration_csv(is);
    }
    std::vector<LineImage> frames;
    std::vector<double> truth;
    if (o.simulate) {
      if (!cal) cal = simulated_calibration(cfg, seed);
      truth = staircase_heights(cfg.height.range, cfg.height.step);
      optics::RenderConfig r = cfg.render;
      r.rng_seed = seed;
      frames = stream::height_staircase(cfg.height.rig(), truth, cfg.sensor, r, cfg.scan.line_rate);
    } else if (!o.input.empty()) {
      if (!cal) throw UsageError("measure height: --input needs --calibration");
      frames = read_frames(o.input, cfg.sensor);
    } else {
      throw UsageError("measure height: give --input or --simulate");
    }
    const auto records = stream::run_height_pipeline(frames, *cal, cfg.render.worker_threads);
    json summary = summarize(records);
    summary["seed"] = seed;
    if (!truth.empty()) {
      double worst = 0.0;
      for (std::size_t k = 0; k < records.size(); ++k)
        worst = std::max(worst, std::abs(records[k].value_mm() - truth[k]));
      summary["max_abs_error_mm"] = worst;
    }
    emit_records(o, records, summary);
  });

  auto* calibrate = measure->add_subcommand("calibrate", "Build a height calibration table");
  common(calibrate);
  calibrate->callback([&o] {
    const auto cfg = load_config(o);
    const auto seed = resolve_seed(o, cfg);
    std::optional<HeightCalibration> cal;
    if (o.simulate) {
      cal = simulated_calibration(cfg, seed);
    } else if (!o.input.empty()) {
      auto is = io::open_input(o.input);
      cal = dsp::calibrate_height(io::read_calibration_samples(is));
    } else {
      throw UsageError("measure calibrate: give --input or --simulate");
    }
    io::atomic_write(o.out, [&](std::ostream& os) { io::write_calibration_csv(os, *cal); });
    std::cout << cal->samples().size() << " knots, pixel " << io::format_real(cal->min_index()) << " .. "
              << io::format_real(cal->max_index()) << '\n';
  });
}

// ---------------------------------------------------------------------------
// config

void add_config(CLI::App& app, Options& o) {
  auto* cmd = app.add_subcommand("config", "Inspect run configurations")->require_subcommand(1);
  auto* defaults = cmd->add_subcommand("defaults", "Print the default configuration");
  defaults->callback([] { config::write(std::cout, config::RunConfig{}); });
  auto* check = cmd->add_subcommand("check", "Validate a configuration and print it in full");
  check->add_option("--config", o.config_path, "Run configuration (INI)")->required()->check(CLI::ExistingFile);
  check->callback([&o] { config::write(std::cout, load_config(o)); });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Line-scan imaging workbench"};
  app.require_subcommand(1);
  Options o;
  app.add_option_function<std::uint64_t>(
      "--seed",
      [&o](std::uint64_t s) {
        o.seed = s;
        o.seed_given = true;
      },
      "Random seed (default: LINESCAN_SEED, then [render] rng_seed)");
  app.add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
  app.fallthrough();
  add_calc(app, o);
  add_sim(app, o);
  add_measure(app, o);
  add_config(app, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "linescan: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    std::cerr << "linescan: data error: " << e.what() << '\n';
    return kData;
  } catch (const MeasurementError& e) {
    std::cerr << "linescan: measurement error: " << e.what() << '\n';
    return kData;
  } catch (const Error& e) {
    std::cerr << "linescan: invalid input: " << e.what() << '\n';
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "linescan: " << e.what() << '\n';
    return 1;
  }
  return kOk;
}
