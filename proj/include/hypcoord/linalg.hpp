#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace hypcoord {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kSqrt2 = 1.41421356237309504880;
inline constexpr double kPi = 3.14159265358979323846;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

inline Vec2 normalized(Vec2 a) {
  double n = norm(a);
  return {a.x / n, a.y / n};
}

// Rotation by +pi/2.
inline Vec2 perp(Vec2 a) { return {-a.y, a.x}; }

// Row-major 2x2 matrix [[a, b], [c, d]].
struct Mat2 {
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;

  static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  static Mat2 diag(double p, double q) { return {p, 0.0, 0.0, q}; }
  static Mat2 rotation(double t) {
    return {std::cos(t), -std::sin(t), std::sin(t), std::cos(t)};
  }

  double det() const { return a * d - b * c; }
  double max_abs() const {
    return std::max({std::fabs(a), std::fabs(b), std::fabs(c), std::fabs(d)});
  }
  Mat2 transpose() const { return {a, c, b, d}; }
  Vec2 col(int j) const { return j == 0 ? Vec2{a, c} : Vec2{b, d}; }
  std::array<double, 4> entries() const { return {a, b, c, d}; }
};

inline Mat2 operator*(const Mat2& m, const Mat2& n) {
  return {m.a * n.a + m.b * n.c, m.a * n.b + m.b * n.d,
          m.c * n.a + m.d * n.c, m.c * n.b + m.d * n.d};
}
inline Vec2 operator*(const Mat2& m, Vec2 v) {
  return {m.a * v.x + m.b * v.y, m.c * v.x + m.d * v.y};
}
inline Mat2 operator*(double s, const Mat2& m) {
  return {s * m.a, s * m.b, s * m.c, s * m.d};
}
inline Mat2 operator+(const Mat2& m, const Mat2& n) {
  return {m.a + n.a, m.b + n.b, m.c + n.c, m.d + n.d};
}
inline Mat2 operator-(const Mat2& m, const Mat2& n) {
  return {m.a - n.a, m.b - n.b, m.c - n.c, m.d - n.d};
}

// Matrix whose columns are u and v.
inline Mat2 from_columns(Vec2 u, Vec2 v) { return {u.x, v.x, u.y, v.y}; }

// Closed-form singular values of a 2x2 matrix, largest first.
// The smaller one is derived from the determinant to avoid cancellation.
inline std::array<double, 2> singular_values(const Mat2& m) {
  double e = 0.5 * (m.a + m.d), f = 0.5 * (m.a - m.d);
  double g = 0.5 * (m.c + m.b), h = 0.5 * (m.c - m.b);
  double smax = std::hypot(e, h) + std::hypot(f, g);
  if (smax == 0.0) return {0.0, 0.0};
  return {smax, std::fabs(m.det()) / smax};
}

inline double op_norm(const Mat2& m) { return singular_values(m)[0]; }

// log(exp(a) + exp(b)) without overflow.
inline double log_add(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::fabs(a - b)));
}

// Reduce an angle to (-pi/2, pi/2]; directions are defined modulo pi.
inline double reduce_half_turn(double t) {
  double r = std::remainder(t, kPi);
  if (r <= -kPi / 2) r += kPi;
  return r;
}

}  // namespace hypcoord
