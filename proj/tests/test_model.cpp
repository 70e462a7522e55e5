#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "linescan/model.hpp"

using namespace linescan;

TEST(SensorPreset, Mlx75306Geometry) {
  const auto s = mlx75306_preset();
  EXPECT_EQ(s.pixel_count, 142);
  EXPECT_NEAR(s.active_length_mm(), 7.0, 1e-12);
  EXPECT_NEAR(s.pixel_pitch, 49.2958, 1e-4);
  EXPECT_EQ(s.max_line_rate, 9480.0);
  EXPECT_EQ(s.bit_depth, 8);
  EXPECT_EQ(s.full_scale(), 255.0);
  EXPECT_NO_THROW(s.validate());
}

TEST(SensorPreset, PixelCentresAreSymmetric) {
  const auto s = mlx75306_preset();
  EXPECT_NEAR(s.pixel_center_mm(0), -s.pixel_center_mm(141), 1e-12);
  EXPECT_NEAR(s.pixel_center_mm(1) - s.pixel_center_mm(0), s.pitch_mm(), 1e-12);
  EXPECT_NEAR(s.pixel_index_of(s.pixel_center_mm(37.25)), 37.25, 1e-9);
}

TEST(SensorSpec, RejectsViolatedInvariants) {
  auto expect_reject = [](auto mutate, const char* needle) {
    auto s = mlx75306_preset();
    mutate(s);
    try {
      s.validate();
      FAIL() << "accepted: " << needle;
    } catch (const ValidationError& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  expect_reject([](SensorSpec& s) { s.pixel_count = 1; }, "pixel_count");
  expect_reject([](SensorSpec& s) { s.pixel_pitch = 0; }, "pixel_pitch");
  expect_reject([](SensorSpec& s) { s.bit_depth = 7; }, "bit_depth");
  expect_reject([](SensorSpec& s) { s.bit_depth = 17; }, "bit_depth");
  expect_reject([](SensorSpec& s) { s.dark_level = 255; }, "dark_level");
  expect_reject([](SensorSpec& s) { s.dark_level = -1; }, "dark_level");
  expect_reject([](SensorSpec& s) { s.noise_sigma = 256; }, "noise_sigma");
  expect_reject([](SensorSpec& s) { s.saturation_fraction = 1.5; }, "saturation_fraction");
}

TEST(LightModel, RejectsViolatedInvariants) {
  ExtendedLed led;
  led.divergence_half_angle = std::numbers::pi / 2;
  EXPECT_THROW(validate(LightModel{led}), ValidationError);
  led = ExtendedLed{};
  led.emitter_diameter = 0;
  EXPECT_THROW(validate(LightModel{led}), ValidationError);

  CollimatedLaser laser;
  laser.telecentric_slope_alpha = -0.1;
  EXPECT_THROW(validate(LightModel{laser}), ValidationError);
  laser = CollimatedLaser{};
  laser.speckle = SpeckleParams{};
  laser.speckle->correlation_length = 0.5;
  EXPECT_THROW(validate(LightModel{laser}), ValidationError);
  laser.speckle->correlation_length = 4;
  laser.speckle->contrast = 1.5;
  EXPECT_THROW(validate(LightModel{laser}), ValidationError);

  EXPECT_NO_THROW(validate(LightModel{IdealTelecentric{}}));
  EXPECT_NO_THROW(validate(LightModel{led_preset(300)}));
}

TEST(LedPreset, TwoDegreeHalfAngle) {
  const auto led = led_preset(400);
  EXPECT_EQ(led.distance_to_sensor, 400.0);
  EXPECT_NEAR(led.divergence_half_angle * 180.0 / std::numbers::pi, 2.0, 1e-12);
}

TEST(SceneSetup, ObjectMustLieBetweenLightAndSensor) {
  auto scene = wire_scene(3.0, 0.0, 20.0);
  EXPECT_NO_THROW(scene.validate(led_preset(500)));
  scene.object_distance = 500;
  EXPECT_THROW(scene.validate(led_preset(500)), GeometryError);
  scene.object_distance = 0;
  EXPECT_THROW(scene.validate(), ValidationError);
  scene = wire_scene(-1.0);
  EXPECT_THROW(scene.validate(), ValidationError);
  scene = wire_scene(3.0);
  scene.motion = Motion{-1.0, 10.0, 0.0};
  EXPECT_THROW(scene.validate(), ValidationError);
}

TEST(LineImage, ValuesMustFitTheAdc) {
  const auto s = mlx75306_preset();
  LineImage f;
  f.values.assign(142, 255);
  EXPECT_NO_THROW(f.validate(s));
  f.values[3] = 256;
  EXPECT_THROW(f.validate(s), ValidationError);
  f.values.assign(141, 0);
  EXPECT_THROW(f.validate(s), ValidationError);
}

TEST(HeightCalibration, SortsAndRejectsBadTables) {
  const HeightCalibration cal({{110, 200}, {10, 0}, {60, 100}});
  ASSERT_EQ(cal.samples().size(), 3u);
  EXPECT_EQ(cal.min_index(), 10);
  EXPECT_EQ(cal.max_index(), 110);
  EXPECT_EQ(cal.samples()[1].height, 100);

  using S = HeightCalibration::Sample;
  EXPECT_THROW(HeightCalibration(std::vector<S>{{1, 0}}), CalibrationError);
  EXPECT_THROW(HeightCalibration(std::vector<S>{{1, 0}, {1, 5}}), CalibrationError);
  EXPECT_THROW(HeightCalibration(std::vector<S>{{1, 0}, {2, 5}, {3, 1}}), CalibrationError);
  EXPECT_THROW(HeightCalibration(std::vector<S>{{1, 0}, {2, NAN}}), CalibrationError);
  EXPECT_NO_THROW(HeightCalibration(std::vector<S>{{1, 9}, {2, 5}, {3, 1}}));
}

TEST(TimingModel, RejectsNegativeTimes) {
  TimingModel t{1e-4, -1e-6, 0, false};
  EXPECT_THROW(t.validate(), ValidationError);
  EXPECT_NO_THROW(mlx75306_timing().validate());
  EXPECT_NO_THROW(sheet_of_light_timing().validate());
}
