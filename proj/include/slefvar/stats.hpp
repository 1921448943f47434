#pragma once
// Empirical distribution comparison and midpoint observables: each stopped
// curve contributes the point halfway along it (halfway in fractal-variation
// time for capacity-parametrized curves, halfway in step count for lattice
// walks), rescaled by the stopping radius.

#include <optional>
#include <string>
#include <vector>

#include "slefvar/geometry.hpp"

namespace slefvar {

// Sorted sample array; F(x) = (#samples <= x) / N, right-continuous.
struct EmpiricalCdf {
  std::vector<double> samples;

  double operator()(double x) const;
  std::size_t size() const { return samples.size(); }
};

// Sorts a copy. Throws std::domain_error on an empty input.
EmpiricalCdf cdf(std::vector<double> samples);

// Exact sup |F_a - F_b|, evaluated at the merged jump points (sufficient for
// step functions). Result in [0, 1].
double ks_distance(const EmpiricalCdf& a, const EmpiricalCdf& b);

// Observation extracted from one stopped curve: the halfway point rescaled by
// the stopping radius, its polar decomposition, the total parametrization
// value T at the stopping point (fractal variation n_hits*dt for
// capacity-parametrized curves, step count for walks), and the hit/step count.
struct MidpointSample {
  double x = 0.0;
  double y = 0.0;
  double r = 0.0;
  double theta = 0.0;
  double T = 0.0;
  long n_hits = 0;
};

// Truncates the curve at its first hit of the circle |z| = radius, computes
// the fractal-variation hit sequence at scale dt, and returns the hit with
// 1-based index round(n/2) (the point at fractal-variation time T/2),
// coordinates divided by radius. Empty when the curve never reaches the
// circle or yields fewer than two hits (rejected sample).
std::optional<MidpointSample> midpoint_sle(const Curve& curve, double dt,
                                           double d_h, double radius);

// Same for a lattice walk carrying step-index parameters (params k = k): with
// m the first step index at or beyond the circle crossing, the observation is
// site floor(m/2) divided by radius, T = m. Empty when the walk never reaches
// the circle or m < 2 (rejected sample).
std::optional<MidpointSample> midpoint_lattice(const Curve& curve,
                                               double radius);

enum class Coord { X, Y, R, Theta };

std::vector<double> extract_coord(const std::vector<MidpointSample>& samples,
                                  Coord c);

// CSV with header `sample_id,x,y,r,theta,T,n_hits`.
void write_samples_csv(const std::string& path,
                       const std::vector<MidpointSample>& samples);
std::vector<MidpointSample> read_samples_csv(const std::string& path);

double mean(const std::vector<double>& xs);
double variance(const std::vector<double>& xs);  // unbiased, needs n >= 2

}  // namespace slefvar
