#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <string>

#include "linescan/config.hpp"

using namespace linescan;
using namespace linescan::config;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const Error& e) {
    return e.what();
  }
  ADD_FAILURE() << "accepted:\n" << text;
  return {};
}

}  // namespace

TEST(Config, EmptyDocumentGivesDefaults) {
  const RunConfig cfg = parse("");
  EXPECT_EQ(cfg, RunConfig{});
  EXPECT_EQ(cfg.sensor, mlx75306_preset());
  EXPECT_TRUE(std::holds_alternative<ExtendedLed>(cfg.light));
  EXPECT_EQ(cfg.render.rays_per_pixel, 10000);
  EXPECT_EQ(cfg.diameter.correction, Correction::none);
}

TEST(Config, WriteThenParseIsIdentity) {
  EXPECT_EQ(parse(to_string(RunConfig{})), RunConfig{});

  RunConfig c;
  c.sensor.pixel_count = 2048;
  c.sensor.pixel_pitch = 14.0 / 3.0;
  c.sensor.bit_depth = 12;
  c.light = CollimatedLaser{0.5, 4.0, SpeckleParams{0.25, 6.0, 0xDEADBEEFCAFEull}, 321.0};
  c.scene = wire_scene(2.7, -0.123456789012345, 17.5);
  c.scene.motion = Motion{1.0, 50.0, 50.0};
  c.render.rays_per_pixel = 77;
  c.render.rng_seed = 18446744073709551615ull;
  c.render.add_sensor_noise = false;
  c.render.worker_threads = 3;
  c.lens.projection_distance = 25.0;
  c.scan.duration = 0.5;
  c.scan.line_rate = 50e3 / 7.0;
  c.scan.flaws = {{346.5, 7.0, 4.5}, {1000.0, 14.0, 2.0}};
  c.diameter.nominal_min = 2.6;
  c.diameter.method = dsp::SubpixelMethod::linear;
  c.diameter.correction = Correction::normalize;
  c.height.baseline = 42.0;
  c.height.step = 0.1;
  EXPECT_EQ(parse(to_string(c)), c);

  c.light = IdealTelecentric{};
  c.scene.object.reset();
  c.scene.motion.reset();
  EXPECT_EQ(parse(to_string(c)), c);

  c.scene = wire_scene(3.0);
  c.scene.object->kind = ObjectKind::reflector;
  EXPECT_EQ(parse(to_string(c)), c);
}

TEST(Config, RandomRealsSurviveRoundTrip) {
  std::mt19937_64 g(5);
  std::uniform_real_distribution<double> u(0.01, 400.0);
  for (int i = 0; i < 500; ++i) {
    RunConfig c;
    c.scene.object_distance = u(g);
    c.light = led_preset(c.scene.object_distance + u(g));
    c.sensor.pixel_pitch = u(g);
    c.height.standoff = u(g);
    EXPECT_EQ(parse(to_string(c)), c);
  }
}

TEST(Config, OutputIsReadable) {
  const std::string text = to_string(RunConfig{});
  EXPECT_NE(text.find("pixel_pitch = 49.29577464788732\n"), std::string::npos) << text;
  EXPECT_NE(text.find("line_rate = 7142.857142857143\n"), std::string::npos) << text;
  EXPECT_NE(text.find("kind = extended_led\n"), std::string::npos);
  EXPECT_NE(text.find("nominal_min = 2.5\n"), std::string::npos);
}

TEST(Config, MissingKeysKeepDefaults) {
  const RunConfig c = parse("[sensor]\npixel_count = 256\n[scene]\ndiameter = 2\n");
  EXPECT_EQ(c.sensor.pixel_count, 256);
  EXPECT_EQ(c.sensor.pixel_pitch, mlx75306_preset().pixel_pitch);
  EXPECT_EQ(c.scene.object->diameter, 2.0);
  EXPECT_EQ(c.scene.object_distance, 20.0);
}

TEST(Config, LightKinds) {
  const RunConfig laser = parse("[light]\nkind = collimated_laser\ntelecentric_slope_alpha = 2\n");
  ASSERT_TRUE(std::holds_alternative<CollimatedLaser>(laser.light));
  EXPECT_EQ(std::get<CollimatedLaser>(laser.light).telecentric_slope_alpha, 2.0);
  EXPECT_FALSE(std::get<CollimatedLaser>(laser.light).speckle);

  const RunConfig speckled = parse("[light]\nkind = collimated_laser\n[speckle]\ncontrast = 0.3\n");
  ASSERT_TRUE(std::get<CollimatedLaser>(speckled.light).speckle);
  EXPECT_EQ(std::get<CollimatedLaser>(speckled.light).speckle->contrast, 0.3);

  const RunConfig led = parse("[light]\nkind = extended_led\ndistance_to_sensor = 300\n");
  EXPECT_EQ(std::get<ExtendedLed>(led.light).distance_to_sensor, 300.0);

  EXPECT_TRUE(std::holds_alternative<IdealTelecentric>(parse("[light]\nkind = ideal_telecentric\n").light));
}

TEST(Config, MotionAndFlaws) {
  const RunConfig c = parse(
      "[scene]\nvibration_amplitude = 1\nvibration_frequency = 50\n"
      "[scan]\nflaws = 350:7:4.5, 700:3.5:2\n");
  ASSERT_TRUE(c.scene.motion);
  EXPECT_EQ(c.scene.motion->vibration_amplitude, 1.0);
  EXPECT_EQ(c.scene.motion->transport_speed, 0.0);
  ASSERT_EQ(c.scan.flaws.size(), 2u);
  EXPECT_EQ(c.scan.flaws[1].length, 3.5);
  EXPECT_EQ(c.scan.flaws[1].diameter, 2.0);
  EXPECT_FALSE(parse("[scene]\nobject = none\n").scene.object);
}

TEST(Config, RejectsUnknownNames) {
  EXPECT_NE(error_of("[sensor]\npixel_cnt = 142\n").find("pixel_cnt"), std::string::npos);
  EXPECT_NE(error_of("[optics]\nx = 1\n").find("[optics]"), std::string::npos);
  EXPECT_NE(error_of("[light]\nkind = halogen\n").find("halogen"), std::string::npos);
  EXPECT_NE(error_of("[diameter]\nmethod = cubic\n").find("method"), std::string::npos);
  error_of("stray = 1\n");
}

TEST(Config, RejectsMalformedValues) {
  EXPECT_NE(error_of("[sensor]\npixel_count = 14.5\n").find("pixel_count"), std::string::npos);
  EXPECT_NE(error_of("[sensor]\npixel_pitch = fast\n").find("pixel_pitch"), std::string::npos);
  EXPECT_NE(error_of("[render]\nadd_sensor_noise = maybe\n").find("add_sensor_noise"), std::string::npos);
  EXPECT_NE(error_of("[scan]\nflaws = 1:2\n").find("flaws"), std::string::npos);
  EXPECT_NE(error_of("[scan]\nflaws = a:b:c\n").find("flaws"), std::string::npos);
  error_of("[sensor\npixel_count = 3\n");
}

TEST(Config, SpeckleNeedsLaser) {
  EXPECT_NE(error_of("[speckle]\ncontrast = 0.2\n").find("collimated_laser"), std::string::npos);
}

TEST(Config, ModelInvariantsAreRechecked) {
  EXPECT_THROW(parse("[sensor]\nbit_depth = 4\n"), ValidationError);
  EXPECT_THROW(parse("[sensor]\npixel_pitch = -1\n"), ValidationError);
  EXPECT_THROW(parse("[light]\nkind = collimated_laser\n[speckle]\ncontrast = 1.5\n"), ValidationError);
  EXPECT_THROW(parse("[light]\ndistance_to_sensor = 10\n[scene]\nobject_distance = 20\n"), GeometryError);
  EXPECT_THROW(parse("[render]\nrays_per_pixel = 0\n"), ValidationError);
  EXPECT_THROW(parse("[diameter]\nnominal_min = 5\nnominal_max = 4\n"), ValidationError);
  EXPECT_THROW(parse("[height]\nrange = 0\n"), ValidationError);
  EXPECT_THROW(parse("[scan]\nduration = 0\n"), ValidationError);
}

TEST(Config, ScanProfileMirrorsSettings) {
  const RunConfig c = parse("[scan]\nduration = 0.01\nline_rate = 2000\nflaws = 5:7:4.5\n");
  const auto p = c.scan_profile();
  EXPECT_EQ(p.frame_count(), 20u);
  EXPECT_EQ(p.scene, c.scene);
  EXPECT_EQ(p.flaws.size(), 1u);
}

TEST(Config, DiameterSettingsTakeSensorPitchAndNoise) {
  RunConfig c;
  c.sensor.pixel_pitch = 10.0;
  c.sensor.noise_sigma = 3.0;
  const auto d = c.diameter.to_config(c.sensor);
  EXPECT_EQ(d.pixel_pitch, 10.0);
  EXPECT_EQ(d.edge_config.noise_sigma, 3.0);
}

TEST(Config, SamplesLoad) {
  const std::filesystem::path dir = LINESCAN_SAMPLES;
  int n = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".ini") continue;
    SCOPED_TRACE(entry.path().string());
    const RunConfig c = load(entry.path());
    EXPECT_EQ(parse(to_string(c)), c);
    ++n;
  }
  EXPECT_GE(n, 4);
  EXPECT_THROW(load(dir / "does_not_exist.ini"), DataError);
}
