#pragma once

// Truncated Taylor series in time, f(t) = v + d1*t + d2*t^2.
//
// Evaluating the bicycle's position kinematics on Jet coordinates
// q(t) = q + qd*t + qdd/2*t^2 yields positions, velocities and accelerations
// of every material point in one pass, with no finite-difference error.

#include <cmath>

namespace whipple {

struct Jet {
  double v = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;

  constexpr Jet() = default;
  constexpr Jet(double value) : v(value) {}  // NOLINT: implicit constant lift
  constexpr Jet(double value, double first, double second)
      : v(value), d1(first), d2(second) {}

  /// First time derivative at t = 0.
  [[nodiscard]] constexpr double rate() const { return d1; }
  /// Second time derivative at t = 0.
  [[nodiscard]] constexpr double accel() const { return 2.0 * d2; }

  Jet& operator+=(const Jet& o) {
    v += o.v;
    d1 += o.d1;
    d2 += o.d2;
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    v -= o.v;
    d1 -= o.d1;
    d2 -= o.d2;
    return *this;
  }
};

inline constexpr Jet operator-(const Jet& a) { return {-a.v, -a.d1, -a.d2}; }
inline constexpr Jet operator+(const Jet& a, const Jet& b) {
  return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2};
}
inline constexpr Jet operator-(const Jet& a, const Jet& b) {
  return {a.v - b.v, a.d1 - b.d1, a.d2 - b.d2};
}
inline constexpr Jet operator*(const Jet& a, const Jet& b) {
  return {a.v * b.v, a.v * b.d1 + a.d1 * b.v,
          a.v * b.d2 + a.d1 * b.d1 + a.d2 * b.v};
}
inline constexpr Jet operator*(double s, const Jet& a) {
  return {s * a.v, s * a.d1, s * a.d2};
}
inline constexpr Jet operator*(const Jet& a, double s) { return s * a; }
inline constexpr Jet operator/(const Jet& a, const Jet& b) {
  const double q0 = a.v / b.v;
  const double q1 = (a.d1 - q0 * b.d1) / b.v;
  const double q2 = (a.d2 - q0 * b.d2 - q1 * b.d1) / b.v;
  return {q0, q1, q2};
}
inline constexpr Jet operator/(const Jet& a, double s) {
  return {a.v / s, a.d1 / s, a.d2 / s};
}

inline Jet sin(const Jet& a) {
  const double s = std::sin(a.v);
  const double c = std::cos(a.v);
  return {s, c * a.d1, c * a.d2 - 0.5 * s * a.d1 * a.d1};
}

inline Jet cos(const Jet& a) {
  const double s = std::sin(a.v);
  const double c = std::cos(a.v);
  return {c, -s * a.d1, -s * a.d2 - 0.5 * c * a.d1 * a.d1};
}

inline Jet sqrt(const Jet& a) {
  const double s = std::sqrt(a.v);
  const double s1 = a.d1 / (2.0 * s);
  const double s2 = (a.d2 - s1 * s1) / (2.0 * s);
  return {s, s1, s2};
}

}  // namespace whipple
