#pragma once
// Planar geometry for parametrized curves: linear interpolation in the
// parameter, first exit through a circle, polar coordinates restricted to the
// closed upper half plane, and the curve CSV format.

#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace slefvar {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double norm2(Point a) { return a.x * a.x + a.y * a.y; }
double dist(Point a, Point b);

// r >= 0 and theta in [0, pi]; only meaningful for points with y >= 0.
struct PolarPoint {
  double r = 0.0;
  double theta = 0.0;
};

// Piecewise-linear curve. params is strictly increasing and matches points
// one-to-one; a curve needs at least two points.
struct Curve {
  std::vector<double> params;
  std::vector<Point> points;

  std::size_t size() const { return points.size(); }
  double param_begin() const { return params.front(); }
  double param_end() const { return params.back(); }
};

// Throws std::invalid_argument if the curve is malformed.
void check_curve(const Curve& c);

// Linear interpolation at parameter s; stored parameters reproduce stored
// points exactly. Throws std::out_of_range when s lies outside
// [params.front(), params.back()] (the message names the valid interval).
Point point_at(const Curve& c, double s);

// Prefix of the curve up to parameter s_end: stored points with param < s_end
// followed by the interpolated endpoint. Requires s_end in range and strictly
// greater than params.front().
Curve truncated(const Curve& c, double s_end);

struct CircleHit {
  double param = 0.0;  // curve parameter of the hit
  Point point;         // lies on the circle to ~1e-10 relative accuracy
};

// First parameter at which the curve leaves the open disc |z - center| <
// radius, scanning segments in order. The start point must be strictly
// inside. Returns nullopt when the whole curve stays inside. A discriminant
// that is negative only by rounding at tangency counts as no crossing; a root
// within 1e-12 beyond a segment end is clamped to the segment end so that
// curves that terminate exactly on the circle still register the hit.
std::optional<CircleHit> first_circle_hit(const Curve& c, Point center,
                                          double radius);

// Incremental variant: resumes the scan from a previous hit. `seg` is the
// index of the segment containing `start` (points[seg] -> points[seg+1]).
struct HitCursor {
  std::size_t seg = 0;
  double param = 0.0;
  Point point;
};
std::optional<CircleHit> first_circle_hit_from(const Curve& c,
                                               const HitCursor& cur,
                                               double radius,
                                               HitCursor* next);

// theta = pi - atan2(y, -x) when x is negative so that mirroring x -> -x maps
// theta -> pi - theta bit-for-bit. Throws std::domain_error at the origin or
// for y < 0.
PolarPoint polar_decompose(Point p);

// CSV with header `param,x,y`, one row per stored point, 17 significant
// digits (doubles round-trip exactly).
void write_curve_csv(const std::string& path, const Curve& c);
Curve read_curve_csv(const std::string& path);

// Shared CSV helper: shortest representation that round-trips a double.
std::string format_double(double v);

}  // namespace slefvar
