#pragma once

// Reference computations written independently of the library, used as
// ground truth by the tests.

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

/// Fraction of pixel i's aperture [i - 0.5, i + 0.5] (pixel units) lying
/// outside the interval [lo, hi].
inline double uncovered_fraction(double i, double lo, double hi) {
  const double a = i - 0.5;
  const double b = i + 0.5;
  const double overlap = std::max(0.0, std::min(b, hi) - std::max(a, lo));
  return 1.0 - overlap;
}

/// Pixel-integrated shadow of an interval, in pixel units, scaled to
/// [low, high].
inline std::vector<double> box_shadow(int n, double lo, double hi, double low, double high) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = low + (high - low) * uncovered_fraction(i, lo, hi);
  return v;
}

/// Piecewise-linear transition from `from` to `to` starting at sample a and
/// ending at sample b.
inline std::vector<double> ramp(int n, double a, double b, double from, double to) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double t = std::clamp((i - a) / (b - a), 0.0, 1.0);
    v[static_cast<std::size_t>(i)] = from + t * (to - from);
  }
  return v;
}

/// Full penumbra (mm) behind a knife edge lit by a uniform disc of width S at
/// height L, for an edge at height d above the screen.
inline double led_penumbra_mm(double S, double L, double d) { return S * d / (L - d); }

/// Same for a beam whose rays deviate by at most alpha (rad).
inline double laser_penumbra_mm(double alpha, double d) { return 2.0 * std::tan(alpha) * d; }

/// Apex of the parabola through (-1, ym), (0, y0), (1, yp) found by dense
/// evaluation of its Lagrange form.
inline double dense_apex(double ym, double y0, double yp, double step = 1e-6) {
  const auto p = [&](double x) {
    return ym * x * (x - 1.0) / 2.0 - y0 * (x + 1.0) * (x - 1.0) + yp * x * (x + 1.0) / 2.0;
  };
  double best_x = -1.0;
  double best = p(-1.0);
  for (double x = -1.0; x <= 1.0; x += step) {
    const double v = p(x);
    if (v > best) {
      best = v;
      best_x = x;
    }
  }
  return best_x;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double stddev(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

struct SinusoidFit {
  double sin_coef = 0.0;
  double cos_coef = 0.0;
  double offset = 0.0;
  double amplitude = 0.0;
};

/// Least-squares fit of x(t) = a sin(2 pi f t) + b cos(2 pi f t) + c at a
/// known frequency, via the 3x3 normal equations and Cramer's rule.
inline SinusoidFit fit_sinusoid(const std::vector<double>& t, const std::vector<double>& x, double f) {
  double m[3][3] = {};
  double r[3] = {};
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double w = 2.0 * 3.14159265358979323846 * f * t[i];
    const double row[3] = {std::sin(w), std::cos(w), 1.0};
    for (int a = 0; a < 3; ++a) {
      r[a] += row[a] * x[i];
      for (int b = 0; b < 3; ++b) m[a][b] += row[a] * row[b];
    }
  }
  const auto det = [](const double (&q)[3][3]) {
    return q[0][0] * (q[1][1] * q[2][2] - q[1][2] * q[2][1]) -
           q[0][1] * (q[1][0] * q[2][2] - q[1][2] * q[2][0]) +
           q[0][2] * (q[1][0] * q[2][1] - q[1][1] * q[2][0]);
  };
  const double d = det(m);
  double sol[3];
  for (int c = 0; c < 3; ++c) {
    double q[3][3];
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) q[a][b] = b == c ? r[a] : m[a][b];
    sol[c] = det(q) / d;
  }
  return {sol[0], sol[1], sol[2], std::hypot(sol[0], sol[1])};
}

}  // namespace oracle
