#pragma once

#include <cmath>

namespace uavsec {

/// Horizontal position in meters.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 &operator+=(const Vec2 &o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2 &operator-=(const Vec2 &o) { x -= o.x; y -= o.y; return *this; }
  constexpr Vec2 &operator*=(double s) { x *= s; y *= s; return *this; }

  friend constexpr Vec2 operator+(Vec2 a, const Vec2 &b) { return a += b; }
  friend constexpr Vec2 operator-(Vec2 a, const Vec2 &b) { return a -= b; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
  friend constexpr bool operator==(const Vec2 &, const Vec2 &) = default;
};

constexpr double dot(const Vec2 &a, const Vec2 &b) { return a.x * b.x + a.y * b.y; }
constexpr double squared_norm(const Vec2 &v) { return dot(v, v); }
inline double norm(const Vec2 &v) { return std::hypot(v.x, v.y); }
inline double distance(const Vec2 &a, const Vec2 &b) { return norm(a - b); }

} // namespace uavsec
