#include <gtest/gtest.h>

#include "linescan/sizing.hpp"

using namespace linescan;
using namespace linescan::sizing;

TEST(RequiredPixelCount, WireApplication) {
  EXPECT_EQ(required_pixel_count(6.0, 0.05, 1.0), 120);
  EXPECT_EQ(required_pixel_count(1.0, 1.0, 1.0), 1);
  EXPECT_EQ(required_pixel_count(6.0, 0.05, 10.0), 12);
}

TEST(RequiredPixelCount, RoundsUpGenuineFractions) {
  EXPECT_EQ(required_pixel_count(6.01, 0.05), 121);
  EXPECT_EQ(required_pixel_count(0.1, 1.0), 1);
}

TEST(RequiredPixelCount, Monotonicity) {
  long prev = required_pixel_count(6.0, 0.01);
  for (double acc = 0.011; acc < 1.0; acc *= 1.07) {
    const long n = required_pixel_count(6.0, acc);
    EXPECT_LE(n, prev);
    prev = n;
  }
  prev = required_pixel_count(6.0, 0.05, 1.0);
  for (double f = 1.0; f <= 20.0; f += 0.5) {
    const long n = required_pixel_count(6.0, 0.05, f);
    EXPECT_LE(n, prev);
    prev = n;
  }
  prev = 0;
  for (double fov = 0.5; fov < 50.0; fov *= 1.13) {
    const long n = required_pixel_count(fov, 0.05);
    EXPECT_GE(n, prev);
    prev = n;
  }
}

TEST(RequiredPixelCount, DomainErrors) {
  EXPECT_THROW(required_pixel_count(0.0, 0.05), DomainError);
  EXPECT_THROW(required_pixel_count(6.0, -1.0), DomainError);
  EXPECT_THROW(required_pixel_count(6.0, 0.05, 0.5), DomainError);
}

TEST(RequiredLineRate, Examples) {
  EXPECT_NEAR(required_line_rate(50.0, 7.0), 7142.857142857143, 1e-9);
  EXPECT_NEAR(required_line_rate(1.0, 1000.0), 1.0, 1e-12);
  EXPECT_NEAR(required_line_rate(20.0, 7.0), 2857.142857142857, 1e-9);
  EXPECT_THROW(required_line_rate(0.0, 7.0), DomainError);
  EXPECT_THROW(required_line_rate(50.0, 0.0), DomainError);
}

TEST(MaxTransportSpeed, Examples) {
  EXPECT_NEAR(max_transport_speed(3500.0, 7.0), 24.5, 1e-12);
  EXPECT_NEAR(max_transport_speed(3500.0, 7.0), 25.0, 0.5);
  EXPECT_NEAR(max_transport_speed(1.0, 1000.0), 1.0, 1e-12);
  EXPECT_NEAR(max_transport_speed(7142.86, 7.0), 50.0, 1e-4);
  EXPECT_THROW(max_transport_speed(-1.0, 7.0), DomainError);
}

TEST(LineRateAndSpeed, AreInverses) {
  for (double v : {0.1, 1.0, 20.0, 50.0, 333.3}) {
    for (double d : {0.5, 7.0, 1000.0}) {
      EXPECT_NEAR(max_transport_speed(required_line_rate(v, d), d), v, 1e-9 * v);
    }
  }
}

TEST(LedElectricalEnergy, Examples) {
  EXPECT_DOUBLE_EQ(led_electrical_energy(1, 1, 1, 1), 1.0);
  EXPECT_NEAR(led_electrical_energy(0.01, 1e-3, 0.3, 0.5), 6.6667e-5, 1e-9);
  EXPECT_DOUBLE_EQ(led_electrical_energy(0.01, 2e-3, 0.3, 0.5), 2.0 * led_electrical_energy(0.01, 1e-3, 0.3, 0.5));
}

TEST(LedElectricalEnergy, LinearAndInverseLinear) {
  const double base = led_electrical_energy(2.0, 3.0, 0.4, 0.8);
  EXPECT_NEAR(led_electrical_energy(6.0, 3.0, 0.4, 0.8), 3.0 * base, 1e-12);
  EXPECT_NEAR(led_electrical_energy(2.0, 3.0, 0.2, 0.8), 2.0 * base, 1e-12);
  EXPECT_NEAR(led_electrical_energy(2.0, 3.0, 0.4, 0.4), 2.0 * base, 1e-12);
}

TEST(LedElectricalEnergy, DomainErrors) {
  EXPECT_THROW(led_electrical_energy(1, 1, 0, 1), DomainError);
  EXPECT_THROW(led_electrical_energy(1, 1, 1, -0.5), DomainError);
  EXPECT_THROW(led_electrical_energy(1, 1, 1.5, 1), DomainError);
  EXPECT_THROW(led_electrical_energy(0, 1, 1, 1), DomainError);
}

TEST(AchievableLineRate, Presets) {
  const double mlx = 1.0 / (50e-6 + 55.5e-6);
  EXPECT_NEAR(achievable_line_rate(mlx75306_timing()), mlx, 1e-9);
  EXPECT_NEAR(achievable_line_rate(mlx75306_timing()), 9479.0, 1.0);
  EXPECT_NEAR(achievable_line_rate(sheet_of_light_timing()), 1.0 / (100e-6 + 185.7e-6), 1e-9);
  EXPECT_NEAR(achievable_line_rate(sheet_of_light_timing()), 3500.0, 35.0);
}

TEST(AchievableLineRate, IntegrationLimited) {
  EXPECT_NEAR(achievable_line_rate({100e-6, 0, 0, false}), 10000.0, 1e-6);
  EXPECT_NEAR(achievable_line_rate({100e-6, 0, 0, true}), 10000.0, 1e-6);
}

TEST(AchievableLineRate, CompositionRules) {
  // Compute hides under integration in the digital mode.
  EXPECT_NEAR(achievable_line_rate({100e-6, 20e-6, 80e-6, false}), 1.0 / 120e-6, 1e-6);
  EXPECT_NEAR(achievable_line_rate({100e-6, 20e-6, 150e-6, false}), 1.0 / 170e-6, 1e-6);
  EXPECT_NEAR(achievable_line_rate({100e-6, 20e-6, 150e-6, true}), 1.0 / 170e-6, 1e-6);
  EXPECT_NEAR(achievable_line_rate({100e-6, 20e-6, 30e-6, true}), 1.0 / 100e-6, 1e-6);
}

TEST(AchievableLineRate, OverlapNeverSlower) {
  for (double ti : {0.0, 10e-6, 100e-6})
    for (double tr : {1e-6, 55.5e-6, 200e-6})
      for (double tc : {0.0, 50e-6, 300e-6})
        EXPECT_LE(achievable_line_rate({ti, tr, tc, false}), achievable_line_rate({ti, tr, tc, true}));
}

TEST(AchievableLineRate, ZeroPeriodIsDomainError) {
  EXPECT_THROW(achievable_line_rate({0, 0, 0, false}), DomainError);
  EXPECT_THROW(achievable_line_rate({-1e-6, 1e-6, 0, false}), ValidationError);
}
