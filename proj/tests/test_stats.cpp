#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <vector>

#include "slefvar/stats.hpp"

using namespace slefvar;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Straight ray from the origin toward angle `ang`, reaching out to `reach`,
// with strictly increasing (but otherwise arbitrary) parameters.
Curve make_ray(double ang, double reach, int npts) {
  Curve c;
  for (int k = 0; k <= npts; ++k) {
    const double s = reach * k / npts;
    c.points.push_back({s * std::cos(ang), s * std::sin(ang)});
    c.params.push_back(0.01 * k * k + k);  // nonuniform on purpose
  }
  return c;
}

Curve mirrored_curve(const Curve& c) {
  Curve m = c;
  for (Point& p : m.points) p.x = -p.x;
  return m;
}

// Brute-force KS oracle: scan |F_a - F_b| on a dense grid plus all jump
// points (the sup of two step functions is attained at a jump).
double ks_bruteforce(const EmpiricalCdf& a, const EmpiricalCdf& b) {
  std::vector<double> probes;
  for (const double v : a.samples) probes.push_back(v);
  for (const double v : b.samples) probes.push_back(v);
  for (int k = -4000; k <= 4000; ++k) probes.push_back(k / 1000.0);
  double best = 0.0;
  for (const double t : probes) best = std::max(best, std::fabs(a(t) - b(t)));
  return best;
}

}  // namespace

TEST_SUITE_BEGIN("stats");

TEST_CASE("empirical cdf: sorting, ties, bounds, right continuity") {
  const EmpiricalCdf F = cdf({3.0, 1.0, 2.0});
  CHECK(F(2.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(F(0.5) == 0.0);
  CHECK(F(1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(F(3.0) == 1.0);
  CHECK(F(100.0) == 1.0);
  CHECK(F(std::nextafter(2.0, 0.0)) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  const EmpiricalCdf T = cdf({1.0, 1.0, 2.0});
  CHECK(T(1.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(T.size() == 3);

  CHECK_THROWS_AS(cdf({}), std::domain_error);
}

TEST_CASE("ks_distance: exact values on hand-checked pairs") {
  const EmpiricalCdf a = cdf({1.0, 2.0, 3.0, 4.0});
  CHECK(ks_distance(a, a) == 0.0);
  const EmpiricalCdf b = cdf({1.5, 2.5, 3.5, 4.5});
  CHECK(ks_distance(a, b) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(ks_distance(b, a) == doctest::Approx(0.25).epsilon(1e-15));
  const EmpiricalCdf lo = cdf({0.0, 0.1});
  const EmpiricalCdf hi = cdf({5.0, 6.0, 7.0});
  CHECK(ks_distance(lo, hi) == 1.0);
  CHECK_THROWS_AS(ks_distance(cdf({1.0}), EmpiricalCdf{}), std::domain_error);
}

TEST_CASE("ks_distance agrees with a dense-grid oracle on random samples") {
  std::mt19937_64 gen(7777);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int rep = 0; rep < 40; ++rep) {
    std::vector<double> xs, ys;
    const int na = 1 + static_cast<int>(gen() % 40);
    const int nb = 1 + static_cast<int>(gen() % 40);
    for (int k = 0; k < na; ++k) xs.push_back(n01(gen));
    for (int k = 0; k < nb; ++k) ys.push_back(u(gen));
    if (rep % 3 == 0 && na > 2) xs[1] = xs[0];  // inject ties
    const EmpiricalCdf A = cdf(xs), B = cdf(ys);
    const double fast = ks_distance(A, B);
    CHECK(fast == doctest::Approx(ks_bruteforce(A, B)).epsilon(1e-12));
    CHECK(fast >= 0.0);
    CHECK(fast <= 1.0);
    CHECK(ks_distance(B, A) == fast);
  }
}

TEST_CASE("midpoint_sle on a straight ray lands halfway to the circle") {
  const Curve ray = make_ray(kPi / 3.0, 1.05, 2100);
  const auto s = midpoint_sle(ray, 0.01, 2.0, 1.0);
  REQUIRE(s.has_value());
  CHECK(s->n_hits == 10);
  CHECK(s->T == 10 * 0.01);
  CHECK(s->x == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(s->y == doctest::Approx(std::sqrt(3.0) / 4.0).epsilon(1e-9));
  CHECK(s->r == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(s->theta == doctest::Approx(kPi / 3.0).epsilon(1e-9));
}

TEST_CASE("midpoint_sle is exactly invariant under joint dyadic rescaling") {
  const Curve ray = make_ray(1.1, 2.6, 1700);
  Curve big = ray;
  for (Point& p : big.points) {
    p.x *= 2.0;
    p.y *= 2.0;
  }
  const auto a = midpoint_sle(ray, 0.004, 2.0, 2.0);
  // Hitting scale dt transforms with the curve scale as lambda^{d_h} = 4.
  const auto b = midpoint_sle(big, 0.004 * 4.0, 2.0, 4.0);
  REQUIRE(a.has_value());
  REQUIRE(b.has_value());
  CHECK(a->n_hits == b->n_hits);
  CHECK(a->x == b->x);
  CHECK(a->y == b->y);
  CHECK(a->r == b->r);
  CHECK(a->theta == b->theta);
}

TEST_CASE("midpoint_sle maps a mirrored curve to the mirrored sample bit-for-bit") {
  const Curve ray = make_ray(0.7, 3.1, 900);
  const auto a = midpoint_sle(ray, 0.02, 1.75, 2.5);
  const auto m = midpoint_sle(mirrored_curve(ray), 0.02, 1.75, 2.5);
  REQUIRE(a.has_value());
  REQUIRE(m.has_value());
  CHECK(m->x == -a->x);
  CHECK(m->y == a->y);
  CHECK(m->r == a->r);
  CHECK(m->theta == kPi - a->theta);
  CHECK(m->T == a->T);
  CHECK(m->n_hits == a->n_hits);
}

TEST_CASE("midpoint_sle rejection and domain errors") {
  const Curve shorty = make_ray(1.0, 0.5, 50);
  CHECK_FALSE(midpoint_sle(shorty, 0.01, 2.0, 1.0).has_value());  // no hit
  // Coarse scale: only one fractal-variation hit before the circle.
  const Curve ray = make_ray(1.0, 1.2, 120);
  CHECK_FALSE(midpoint_sle(ray, 0.81, 2.0, 1.0).has_value());
  CHECK_THROWS_AS(midpoint_sle(ray, 0.01, 2.0, 0.0), std::invalid_argument);
}

TEST_CASE("midpoint_lattice on a straight walk returns the halfway site") {
  Curve walk;
  for (int k = 0; k <= 25; ++k) {
    walk.points.push_back({0.0, static_cast<double>(k)});
    walk.params.push_back(static_cast<double>(k));
  }
  const auto s = midpoint_lattice(walk, 10.0);
  REQUIRE(s.has_value());
  CHECK(s->T == 10.0);
  CHECK(s->n_hits == 10);
  CHECK(s->x == 0.0);
  CHECK(s->y == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(s->r == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(s->theta == doctest::Approx(kPi / 2.0).epsilon(1e-15));
}

TEST_CASE("midpoint_lattice rounds the crossing up to a whole step") {
  // Diagonal-ish walk crossing radius 2 strictly inside step 3.
  Curve walk;
  walk.points = {{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {2.0, 1.0}, {2.0, 2.0}};
  walk.params = {0.0, 1.0, 2.0, 3.0, 4.0};
  const auto s = midpoint_lattice(walk, 2.0);
  REQUIRE(s.has_value());
  CHECK(s->n_hits == 3);            // ceil of the fractional crossing param
  CHECK(s->T == 3.0);
  CHECK(s->x == walk.points[1].x / 2.0);  // site floor(3/2) = 1
  CHECK(s->y == walk.points[1].y / 2.0);
}

TEST_CASE("midpoint_lattice rejects short crossings and bad parametrizations") {
  Curve walk;
  walk.points = {{0.0, 0.0}, {0.0, 1.5}};
  walk.params = {0.0, 1.0};
  CHECK_FALSE(midpoint_lattice(walk, 1.0).has_value());  // m = 1 < 2
  CHECK_FALSE(midpoint_lattice(walk, 5.0).has_value());  // never reaches

  Curve bad = walk;
  bad.params = {0.0, 0.5};
  CHECK_THROWS_AS(midpoint_lattice(bad, 1.0), std::invalid_argument);
}

TEST_CASE("extract_coord selects the requested component") {
  std::vector<MidpointSample> v(2);
  v[0] = {0.1, 0.2, 0.3, 0.4, 0.5, 6};
  v[1] = {1.1, 1.2, 1.3, 1.4, 1.5, 7};
  CHECK(extract_coord(v, Coord::X) == std::vector<double>{0.1, 1.1});
  CHECK(extract_coord(v, Coord::Y) == std::vector<double>{0.2, 1.2});
  CHECK(extract_coord(v, Coord::R) == std::vector<double>{0.3, 1.3});
  CHECK(extract_coord(v, Coord::Theta) == std::vector<double>{0.4, 1.4});
}

TEST_CASE("samples CSV round-trips exactly") {
  std::vector<MidpointSample> v(3);
  v[0] = {0.12345678901234567, -0.5, 0.7, 2.25, 0.875, 11};
  v[1] = {-1.0 / 3.0, 2.0 / 7.0, std::sqrt(2.0), kPi / 5.0, 1e-9, 2};
  v[2] = {0.0, 1.0, 1.0, kPi / 2.0, 123456.0, 99999};
  const std::string path =
      (std::filesystem::temp_directory_path() / "slefvar_samples_rt.csv").string();
  write_samples_csv(path, v);
  const std::vector<MidpointSample> back = read_samples_csv(path);
  REQUIRE(back.size() == v.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    CHECK(back[k].x == v[k].x);
    CHECK(back[k].y == v[k].y);
    CHECK(back[k].r == v[k].r);
    CHECK(back[k].theta == v[k].theta);
    CHECK(back[k].T == v[k].T);
    CHECK(back[k].n_hits == v[k].n_hits);
  }
  std::remove(path.c_str());
  CHECK_THROWS(read_samples_csv(path));
}

TEST_CASE("mean and variance") {
  CHECK(mean({1.0, 2.0, 3.0, 4.0}) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(variance({1.0, 2.0, 3.0, 4.0}) ==
        doctest::Approx(5.0 / 3.0).epsilon(1e-15));
  CHECK(variance({7.0, 7.0, 7.0}) == 0.0);
  CHECK_THROWS_AS(mean({}), std::domain_error);
  CHECK_THROWS_AS(variance({1.0}), std::domain_error);
}

TEST_SUITE_END();
