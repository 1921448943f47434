#pragma once
// Chordal Loewner evolution discretized by incremental slit maps.
//
// Over a capacity interval of length dt with driving displacement delta, the
// inverse incremental map has the closed form
//     f(w) = (w - base + p)^alpha * (w - base - q)^(1-alpha) + base,
// which opens a straight slit from `base` at angle (1-alpha)*pi. Hydrodynamic
// normalization and the tip condition pin the parameters:
//     alpha*p - (1-alpha)*q = 0
//     alpha*p^2 + (1-alpha)*q^2 = 4*dt
//     alpha*q - (1-alpha)*p = delta,
// so alpha is the root in (0,1) of delta/sqrt(dt) = 2(2a-1)/sqrt(a(1-a)),
// q = 2*sqrt(alpha*dt/(1-alpha)) and p = (1-alpha)*q/alpha. A trace point is
// the composition gamma(t_n) = f_1(f_2(...f_n(U(t_n)))), earliest map
// applied last.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "slefvar/geometry.hpp"
#include "slefvar/rng.hpp"

namespace slefvar {

using cplx = std::complex<double>;

struct SlitMap {
  double dt = 0.0;     // capacity increment, > 0
  double delta = 0.0;  // driving displacement over the interval
  double base = 0.0;   // driving value at the start of the interval
  double alpha = 0.5;  // slit angle parameter in (0,1)
  double p = 0.0;      // cut extends over [base - p, base + q]
  double q = 0.0;
};

// Solves the parameter constraints above; alpha is bisected to full double
// precision. Throws std::invalid_argument for dt <= 0 or non-finite inputs.
SlitMap solve_slit_map(double dt, double delta, double base = 0.0);

// Principal-branch evaluation, valid on the whole plane minus the real cut
// [base - p, base + q]. Maps with delta < 0 (and delta == 0, base < 0) are
// evaluated through their mirror image so that negating delta and base
// reflects results across the imaginary axis bit-for-bit.
cplx apply_slit_map(const SlitMap& m, cplx w);

// Image of the critical point base + delta: the tip of the slit.
cplx slit_tip(const SlitMap& m);

// Newton inversion of apply_slit_map; used to evaluate the forward map g_t.
// Throws std::runtime_error if the iteration fails to converge.
cplx invert_slit_map(const SlitMap& m, cplx z);

// Driving function sampled at capacity times; times[0] = 0, values[0] = 0.
struct DrivingPath {
  double kappa = 0.0;
  std::vector<double> times;
  std::vector<double> values;
};

std::vector<SlitMap> maps_from_driving(const DrivingPath& d);

// Exact composition of the whole map list at boundary point u. An empty list
// gives (u, 0).
Point trace_point(const std::vector<SlitMap>& maps, double u);

// Laurent-compressed composition. Maps are grouped into dyadic blocks
// (`block` maps per leaf, blocks merged pairwise); each completed block is
// replaced by a truncated series  F(w) = w + sum_{k=1..order} c_k (w-c)^-k
// fitted on a circle outside the block's hull disc and used only at points
// beyond 2.6x the disc radius, falling back to the block's children (and
// ultimately to the exact per-map evaluation) inside. block <= 1 disables
// compression, reproducing trace_point bit-for-bit.
class MapComposer {
 public:
  explicit MapComposer(int order = 20, int block = 16);

  void push(const SlitMap& m);
  std::size_t size() const { return maps_.size(); }
  const std::vector<SlitMap>& maps() const { return maps_; }

  cplx evaluate(cplx w) const;
  // Applies `extra` first (a candidate map extending the list), then the list.
  cplx evaluate_with(const SlitMap& extra, cplx w) const;
  Point trace(double u) const;

 private:
  struct Node {
    std::size_t begin = 0, end = 0;  // map index range [begin, end)
    double cap = 0.0;                // total capacity of the range
    double lo = 0.0, hi = 0.0;       // real extent of cuts in the range
    double center = 0.0, radius = 0.0, r_use = 0.0;
    std::vector<cplx> coef;          // c_1..c_order
  };

  int order_;
  int block_;
  std::vector<SlitMap> maps_;
  std::vector<std::vector<Node>> levels_;  // levels_[l][i]: leaves i*2^l..(i+1)*2^l

  cplx apply_range_raw(std::size_t begin, std::size_t end, cplx w) const;
  cplx eval_node(std::size_t level, std::size_t idx, cplx w) const;
  void build_node(std::size_t level, std::size_t idx);
};

// One-shot convenience wrapper around MapComposer (order >= 4, block >= 1).
Point trace_point_fast(const std::vector<SlitMap>& maps, double u, int order,
                       int block);

// Midpoint of a Brownian bridge with variance rate kappa: mean
// (u_a + u_b)/2, variance kappa*(t_b - t_a)/4. kappa = 0 is the exact
// midpoint.
double bridge_midpoint(double u_a, double u_b, double t_a, double t_b,
                       double kappa, Rng& rng);

// Conformal map from the upper half plane to the strip of height L taking
// 0 -> 0, i -> iL/2 and infinity -> iL. Poles at z = +-1.
cplx strip_map(cplx z, double L);

struct StopRule {
  enum class Kind { semicircle, strip_tip };
  Kind kind = Kind::semicircle;
  double radius = 1.0;  // semicircle: stop at first point with |gamma| >= radius
  double dist = 0.01;   // strip_tip: stop when the strip image (height 1) is
                        // within dist of the endpoint i
};

struct SleConfig {
  double kappa = 2.0;
  double dx = 0.01;  // spatial resolution of the stored trace
  StopRule stop;
  bool use_laurent = true;
  int laurent_order = 20;
  int laurent_block = 16;
  int max_depth = 64;                   // bisection depth limit per interval;
                                        // the default exceeds the depth at
                                        // which capacity intervals stop being
                                        // splittable in double precision
  std::size_t max_maps = 50'000'000;    // defensive cap
};

struct SleSample {
  Curve curve;          // capacity-parametrized; strip coordinates when the
                        // stop rule is strip_tip
  DrivingPath driving;  // committed times and driving values
  std::vector<SlitMap> maps;
};

// Adaptive trace sampler: uniform capacity steps dx^2 refined by driving
// bisection (Brownian bridge midpoints) until consecutive stored points are
// within dx of each other (measured after strip_map for strip_tip stops).
// Intervals too narrow to bisect in double precision are committed even when
// oversized (the trace can move a finite distance in sub-resolution capacity
// time near pinch events). Throws std::runtime_error if an interval still
// violates the spacing bound at max_depth before reaching that floor.
SleSample sample_sle_full(const SleConfig& cfg, Rng& rng);
Curve sample_sle(const SleConfig& cfg, Rng& rng);

}  // namespace slefvar
