#include "slefvar/geometry.hpp"

#include <algorithm>
#include <cassert>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace slefvar {

double dist(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

void check_curve(const Curve& c) {
  if (c.points.size() < 2)
    throw std::invalid_argument("curve needs at least two points, has " +
                                std::to_string(c.points.size()));
  if (c.params.size() != c.points.size())
    throw std::invalid_argument("curve params/points length mismatch");
  for (std::size_t i = 1; i < c.params.size(); ++i)
    if (!(c.params[i] > c.params[i - 1]))
      throw std::invalid_argument(
          "curve params must be strictly increasing (violated at index " +
          std::to_string(i) + ")");
}

namespace {

// Index i with params[i] <= s <= params[i+1]; exact endpoints resolve to the
// stored sample.
std::size_t bracket(const Curve& c, double s) {
  const auto& ps = c.params;
  if (!(s >= ps.front() && s <= ps.back())) {
    std::ostringstream msg;
    msg << "parameter " << s << " outside curve range [" << ps.front() << ", "
        << ps.back() << "]";
    throw std::out_of_range(msg.str());
  }
  auto it = std::upper_bound(ps.begin(), ps.end(), s);
  std::size_t i = static_cast<std::size_t>(it - ps.begin());
  if (i > 0) --i;
  if (i + 1 >= ps.size()) i = ps.size() - 2;
  return i;
}

}  // namespace

Point point_at(const Curve& c, double s) {
  std::size_t i = bracket(c, s);
  if (s == c.params[i]) return c.points[i];
  if (s == c.params[i + 1]) return c.points[i + 1];
  double u = (s - c.params[i]) / (c.params[i + 1] - c.params[i]);
  return c.points[i] + u * (c.points[i + 1] - c.points[i]);
}

Curve truncated(const Curve& c, double s_end) {
  std::size_t i = bracket(c, s_end);  // validates the range
  if (!(s_end > c.params.front()))
    throw std::out_of_range("truncation parameter must exceed curve start");
  Curve out;
  std::size_t last_kept = (s_end == c.params[i + 1]) ? i + 1 : i;
  out.params.assign(c.params.begin(), c.params.begin() + last_kept + 1);
  out.points.assign(c.points.begin(), c.points.begin() + last_kept + 1);
  if (out.params.back() != s_end) {
    out.params.push_back(s_end);
    out.points.push_back(point_at(c, s_end));
  }
  if (out.points.size() < 2) {
    // s_end landed inside the first segment; keep the interpolated endpoint.
    out.params = {c.params.front(), s_end};
    out.points = {c.points.front(), point_at(c, s_end)};
  }
  return out;
}

namespace {

// First parameter in segment A->B (params a..b, scanning from local fraction
// u_lo) at which |P - center| reaches radius, assuming the scan enters the
// segment strictly inside the disc. Returns the local fraction in (u_lo, 1]
// or nullopt. Roots within 1e-12 beyond the segment end are clamped to 1.
std::optional<double> segment_exit(Point A, Point B, Point C, double radius,
                                   double u_lo) {
  Point d = B - A;
  Point w = A - C;
  double a = norm2(d);
  if (a == 0.0) return std::nullopt;
  double b = 2.0 * dot(w, d);
  double cc = norm2(w) - radius * radius;
  double disc = b * b - 4.0 * a * cc;
  if (disc < 0.0) return std::nullopt;  // tangency rounding => no crossing
  double sq = std::sqrt(disc);
  // Larger root is the exit through the circle; the smaller one (if in range)
  // is an entry from outside, which cannot happen for a scan that starts
  // inside the disc. The b > 0 branch avoids cancellation.
  double u = (b <= 0.0) ? (-b + sq) / (2.0 * a) : (-2.0 * cc) / (b + sq);
  if (u <= u_lo) return std::nullopt;
  constexpr double kEndSlack = 1e-12;
  if (u > 1.0 + kEndSlack) return std::nullopt;
  return std::min(u, 1.0);
}

}  // namespace

std::optional<CircleHit> first_circle_hit_from(const Curve& c,
                                               const HitCursor& cur,
                                               double radius,
                                               HitCursor* next) {
  if (!(radius > 0.0)) throw std::invalid_argument("radius must be positive");
  Point C = cur.point;
  for (std::size_t k = cur.seg; k + 1 < c.points.size(); ++k) {
    Point A = c.points[k];
    Point B = c.points[k + 1];
    double p0 = c.params[k], p1 = c.params[k + 1];
    double u_lo = 0.0;
    if (k == cur.seg) {
      // Resume mid-segment: positions before the cursor belong to the past.
      u_lo = (cur.param - p0) / (p1 - p0);
      if (u_lo >= 1.0) continue;
      if (u_lo < 0.0) u_lo = 0.0;
    }
    auto u = segment_exit(A, B, C, radius, u_lo);
    if (u) {
      CircleHit hit;
      hit.param = (*u == 1.0) ? p1 : p0 + *u * (p1 - p0);
      hit.point = A + *u * (B - A);
      if (next) {
        next->seg = (*u == 1.0 && k + 2 < c.points.size()) ? k + 1 : k;
        next->param = hit.param;
        next->point = hit.point;
      }
      return hit;
    }
  }
  return std::nullopt;
}

std::optional<CircleHit> first_circle_hit(const Curve& c, Point center,
                                          double radius) {
  check_curve(c);
  if (!(radius > 0.0)) throw std::invalid_argument("radius must be positive");
  if (!(dist(c.points.front(), center) < radius))
    throw std::invalid_argument(
        "first_circle_hit: curve must start strictly inside the circle");
  HitCursor cur;
  cur.seg = 0;
  cur.param = c.params.front();
  cur.point = center;  // distances are measured from the circle center
  return first_circle_hit_from(c, cur, radius, nullptr);
}

PolarPoint polar_decompose(Point p) {
  if (p.y < 0.0)
    throw std::domain_error("polar_decompose: point below the real axis");
  if (p.x == 0.0 && p.y == 0.0)
    throw std::domain_error("polar_decompose: origin has no angle");
  PolarPoint out;
  out.r = std::hypot(p.x, p.y);
  constexpr double kPi = 3.14159265358979323846;
  // Mirror-symmetric branch: x -> -x gives theta -> pi - theta bit-for-bit.
  out.theta = std::signbit(p.x) ? kPi - std::atan2(p.y, -p.x)
                                : std::atan2(p.y, p.x);
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_curve_csv(const std::string& path, const Curve& c) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "param,x,y\n";
  for (std::size_t i = 0; i < c.points.size(); ++i)
    out << format_double(c.params[i]) << ',' << format_double(c.points[i].x)
        << ',' << format_double(c.points[i].y) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

Curve read_curve_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("param,x,y", 0) != 0)
    throw std::runtime_error("bad curve CSV header in " + path);
  Curve c;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double v[3];
    const char* p = line.c_str();
    const char* end = p + line.size();
    for (int k = 0; k < 3; ++k) {
      auto [next, ec] = std::from_chars(p, end, v[k]);
      if (ec != std::errc{})
        throw std::runtime_error("bad curve CSV row in " + path + ": " + line);
      p = next;
      if (k < 2) {
        if (p == end || *p != ',')
          throw std::runtime_error("bad curve CSV row in " + path);
        ++p;
      }
    }
    c.params.push_back(v[0]);
    c.points.push_back({v[1], v[2]});
  }
  check_curve(c);
  return c;
}

}  // namespace slefvar
