#pragma once
// Parametrization-free fractal variation of a curve with dimension d_h.
//
// Partition form: sum over partition cells of |gamma(t_j) - gamma(t_{j-1})|
// raised to d_h. Hitting form: starting from the curve's first point, t_i is
// the first parameter after t_{i-1} at which the curve is dt^(1/d_h) away
// from gamma(t_{i-1}); with n hits found before the curve ends the variation
// is n*dt. The hitting form needs no parametrization of the input beyond the
// ordering of points, which is what makes curves with different natural
// parametrizations comparable.

#include <string>
#include <vector>

#include "slefvar/geometry.hpp"

namespace slefvar {

struct ModelSpec {
  std::string name;  // one of lerw, saw, ising, perc, sle
  double d_h = 0.0;  // curve dimension
  double kappa = 0.0;
};

// Dimension/kappa table: lerw 5/4 (kappa 2), saw 4/3 (8/3), ising 11/8 (3),
// perc 7/4 (6); sle uses d_h = 1 + kappa/8.
ModelSpec model_spec(const std::string& name, double kappa_for_sle = 0.0);

// Sum over the partition (strictly increasing parameters inside the curve's
// range, at least two entries) of displacement^d_h.
double fvar_partition(const Curve& c, const std::vector<double>& partition,
                      double d_h);

struct FvarResult {
  double dt = 0.0;
  double d_h = 0.0;
  std::vector<double> hit_params;  // t_1..t_n
  long n = 0;
  double value = 0.0;  // n * dt
};

FvarResult fvar_hitting(const Curve& c, double dt, double d_h);

// Curve restricted to the hit points with params dt, 2dt, ..., n*dt.
// Requires at least two hits.
Curve reparam_by_fvar(const Curve& c, double dt, double d_h);

struct FvarStudy {
  std::vector<double> dt;
  std::vector<std::vector<double>> values;  // values[i][s]: sample s at dt[i]
  std::vector<std::vector<long>> counts;    // matching hit counts
  long skipped = 0;  // curves that did not reach t_cap
};

// Hitting-form variation of every curve truncated at parameter t_cap, for
// each dt in dt_list.
FvarStudy fvar_study(const std::vector<Curve>& curves,
                     const std::vector<double>& dt_list, double d_h,
                     double t_cap);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
};

// Least-squares fit of log(y) against log(x); both arrays positive, same
// length >= 2. Used for the variance-vs-dt diagnostic where the expected
// slope is 1.
SlopeFit variance_slope(const std::vector<double>& x,
                        const std::vector<double>& y);

}  // namespace slefvar
