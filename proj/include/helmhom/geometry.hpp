// Small fixed-size geometry types used across the library: 2D vectors
// (real and complex) and symmetric 2x2 coefficient matrices.
#pragma once

#include <cmath>
#include <complex>

namespace helmhom {

using Complex = std::complex<double>;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator/(double s) const { return {x / s, y / s}; }

  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm2() const { return x * x + y * y; }
  double norm() const { return std::sqrt(norm2()); }
  // Rotation by +90 degrees; (x,y) -> (-y,x).
  Vec2 perp() const { return {-y, x}; }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

struct Vec2c {
  Complex x{0.0, 0.0};
  Complex y{0.0, 0.0};

  Vec2c() = default;
  Vec2c(Complex x_, Complex y_) : x(x_), y(y_) {}
  explicit Vec2c(const Vec2& v) : x(v.x), y(v.y) {}

  Vec2c operator+(const Vec2c& o) const { return {x + o.x, y + o.y}; }
  Vec2c operator-(const Vec2c& o) const { return {x - o.x, y - o.y}; }
  Vec2c operator*(Complex s) const { return {x * s, y * s}; }

  // |v|^2 = |v_x|^2 + |v_y|^2 (Hermitian square).
  double norm2() const { return std::norm(x) + std::norm(y); }
};

inline Vec2c operator*(Complex s, const Vec2c& v) { return v * s; }

// Symmetric 2x2 matrix; the only anisotropy the pipeline ever needs.
struct Mat2 {
  double a11 = 0.0;
  double a12 = 0.0;
  double a22 = 0.0;

  Mat2() = default;
  Mat2(double a11_, double a12_, double a22_) : a11(a11_), a12(a12_), a22(a22_) {}

  static Mat2 identity() { return {1.0, 0.0, 1.0}; }
  static Mat2 scalar(double s) { return {s, 0.0, s}; }

  Vec2 apply(const Vec2& v) const {
    return {a11 * v.x + a12 * v.y, a12 * v.x + a22 * v.y};
  }
  Vec2c apply(const Vec2c& v) const {
    return {a11 * v.x + a12 * v.y, a12 * v.x + a22 * v.y};
  }

  Mat2 operator-(const Mat2& o) const { return {a11 - o.a11, a12 - o.a12, a22 - o.a22}; }
  Mat2 operator+(const Mat2& o) const { return {a11 + o.a11, a12 + o.a12, a22 + o.a22}; }
  Mat2 operator*(double s) const { return {a11 * s, a12 * s, a22 * s}; }

  double min_eigenvalue() const {
    const double tr = a11 + a22;
    const double disc = std::sqrt((a11 - a22) * (a11 - a22) + 4.0 * a12 * a12);
    return 0.5 * (tr - disc);
  }
  double max_eigenvalue() const {
    const double tr = a11 + a22;
    const double disc = std::sqrt((a11 - a22) * (a11 - a22) + 4.0 * a12 * a12);
    return 0.5 * (tr + disc);
  }
};

// Axis-aligned square, stored as center and side; used for the scatterer
// support D and for region predicates.
struct Square {
  Vec2 center;
  double side = 0.0;

  double xmin() const { return center.x - 0.5 * side; }
  double xmax() const { return center.x + 0.5 * side; }
  double ymin() const { return center.y - 0.5 * side; }
  double ymax() const { return center.y + 0.5 * side; }

  bool contains(const Vec2& p) const {
    return p.x >= xmin() && p.x <= xmax() && p.y >= ymin() && p.y <= ymax();
  }
  bool contains_strict(const Vec2& p) const {
    return p.x > xmin() && p.x < xmax() && p.y > ymin() && p.y < ymax();
  }
  // Euclidean distance from p to the closed square (0 inside).
  double distance(const Vec2& p) const {
    const double dx = std::max({xmin() - p.x, 0.0, p.x - xmax()});
    const double dy = std::max({ymin() - p.y, 0.0, p.y - ymax()});
    return std::sqrt(dx * dx + dy * dy);
  }
};

// Wrap v into [0, period). Exact for v already in range.
inline double wrap_periodic(double v, double period) {
  double w = v - period * std::floor(v / period);
  if (w >= period) w -= period;  // guards the floor rounding edge case
  if (w < 0.0) w = 0.0;
  return w;
}

// Shortest signed separation of two torus coordinates (|result| <= period/2).
inline double torus_delta(double a, double b, double period) {
  double d = a - b;
  d -= period * std::round(d / period);
  return d;
}

inline double torus_distance2(const Vec2& a, const Vec2& b, double period) {
  const double dx = torus_delta(a.x, b.x, period);
  const double dy = torus_delta(a.y, b.y, period);
  return dx * dx + dy * dy;
}

}  // namespace helmhom
