#include "slefvar/loewner.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace slefvar {

namespace {

constexpr double kPi = 3.14159265358979323846;

// delta/sqrt(dt) as a function of alpha, monotone increasing on (0,1).
double delta_of_alpha(double a) {
  return 2.0 * (2.0 * a - 1.0) / std::sqrt(a * (1.0 - a));
}

SlitMap mirrored(const SlitMap& m) {
  SlitMap r = m;
  r.delta = -m.delta;
  r.base = -m.base;
  r.alpha = 1.0 - m.alpha;
  r.p = m.q;
  r.q = m.p;
  return r;
}

// Evaluation for canonical maps (delta >= 0) via explicit polar factors.
cplx apply_canonical(const SlitMap& m, cplx w) {
  double zx = w.real() - m.base;
  double zy = w.imag();
  if (m.delta == 0.0) {
    // alpha = 1/2: f(w) = base + sqrt((w-base)^2 - 4 dt) on the branch that
    // continues the identity at infinity (sign of the real part follows zx).
    if (zx == 0.0) {
      double s = std::sqrt(zy * zy + 4.0 * m.dt);
      return {m.base, std::copysign(s, zy == 0.0 ? 1.0 : zy)};
    }
    cplx zeta(zx * zx - zy * zy - 4.0 * m.dt, 2.0 * zx * zy);
    cplx s = std::sqrt(zeta);
    if (zx < 0.0) s = -s;
    return {m.base + s.real(), s.imag()};
  }
  double ax = zx + m.p, bx = zx - m.q;
  double lr = 0.5 * (m.alpha * std::log(ax * ax + zy * zy) +
                     (1.0 - m.alpha) * std::log(bx * bx + zy * zy));
  double ang = m.alpha * std::atan2(zy, ax) +
               (1.0 - m.alpha) * std::atan2(zy, bx);
  double r = std::exp(lr);
  return {m.base + r * std::cos(ang), r * std::sin(ang)};
}

}  // namespace

SlitMap solve_slit_map(double dt, double delta, double base) {
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw std::invalid_argument("solve_slit_map: dt must be positive, got " +
                                std::to_string(dt));
  if (!std::isfinite(delta) || !std::isfinite(base))
    throw std::invalid_argument("solve_slit_map: delta and base must be finite");

  SlitMap m;
  m.dt = dt;
  m.delta = delta;
  m.base = base;

  double target = std::fabs(delta) / std::sqrt(dt);
  // Root of delta_of_alpha(a) = target on [1/2, 1); the function is monotone.
  double lo = 0.5, hi = 1.0 - 1e-14;
  if (delta_of_alpha(hi) < target)
    throw std::invalid_argument(
        "solve_slit_map: |delta|/sqrt(dt) too large to resolve");
  double a = 0.5;
  if (target > 0.0) {
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi) break;
      (delta_of_alpha(mid) < target ? lo : hi) = mid;
    }
    a = 0.5 * (lo + hi);
  }
  double q = 2.0 * std::sqrt(a * dt / (1.0 - a));
  double p = (1.0 - a) * q / a;
  if (delta < 0.0) {
    m.alpha = 1.0 - a;
    m.p = q;
    m.q = p;
  } else {
    m.alpha = a;
    m.p = p;
    m.q = q;
  }
  return m;
}

cplx apply_slit_map(const SlitMap& m, cplx w) {
  bool flip;
  if (m.delta != 0.0)
    flip = std::signbit(m.delta);
  else if (m.base != 0.0)
    flip = std::signbit(m.base);
  else
    flip = std::signbit(w.real());
  if (flip) {
    cplx r = apply_canonical(mirrored(m), cplx(-w.real(), w.imag()));
    return {-r.real(), r.imag()};
  }
  return apply_canonical(m, w);
}

cplx slit_tip(const SlitMap& m) {
  return apply_slit_map(m, cplx(m.base + m.delta, 0.0));
}

cplx invert_slit_map(const SlitMap& m, cplx z) {
  cplx w = z;
  for (int it = 0; it < 80; ++it) {
    cplx fw = apply_slit_map(m, w);
    cplx r = fw - z;
    if (std::abs(r) <= 1e-13 * (1.0 + std::abs(z))) return w;
    cplx om = w - m.base;
    cplx deriv = (fw - m.base) *
                 (m.alpha / (om + m.p) + (1.0 - m.alpha) / (om - m.q));
    if (deriv == cplx(0.0, 0.0)) break;
    w -= r / deriv;
  }
  throw std::runtime_error("invert_slit_map: Newton iteration stalled");
}

std::vector<SlitMap> maps_from_driving(const DrivingPath& d) {
  if (d.times.size() != d.values.size() || d.times.empty())
    throw std::invalid_argument("driving path times/values mismatch");
  std::vector<SlitMap> maps;
  maps.reserve(d.times.size() - 1);
  for (std::size_t i = 1; i < d.times.size(); ++i) {
    double dt = d.times[i] - d.times[i - 1];
    if (!(dt > 0.0))
      throw std::invalid_argument("driving times must be strictly increasing");
    maps.push_back(
        solve_slit_map(dt, d.values[i] - d.values[i - 1], d.values[i - 1]));
  }
  return maps;
}

Point trace_point(const std::vector<SlitMap>& maps, double u) {
  cplx w(u, 0.0);
  for (std::size_t k = maps.size(); k-- > 0;) w = apply_slit_map(maps[k], w);
  return {w.real(), w.imag()};
}

// ---------------------------------------------------------------------------
// MapComposer

MapComposer::MapComposer(int order, int block) : order_(order), block_(block) {
  if (order_ < 4) throw std::invalid_argument("laurent order must be >= 4");
  if (block_ < 1) throw std::invalid_argument("laurent block must be >= 1");
}

cplx MapComposer::apply_range_raw(std::size_t begin, std::size_t end,
                                  cplx w) const {
  for (std::size_t k = end; k-- > begin;) w = apply_slit_map(maps_[k], w);
  return w;
}

cplx MapComposer::eval_node(std::size_t level, std::size_t idx, cplx w) const {
  const Node& nd = levels_[level][idx];
  if (std::abs(w - nd.center) >= nd.r_use) {
    cplx iv = 1.0 / (w - nd.center);
    cplx s(0.0, 0.0);
    for (std::size_t k = nd.coef.size(); k-- > 0;) s = (s + nd.coef[k]) * iv;
    return w + s;
  }
  if (level == 0) return apply_range_raw(nd.begin, nd.end, w);
  return eval_node(level - 1, 2 * idx, eval_node(level - 1, 2 * idx + 1, w));
}

void MapComposer::build_node(std::size_t level, std::size_t idx) {
  Node nd;
  if (level == 0) {
    nd.begin = idx * static_cast<std::size_t>(block_);
    nd.end = nd.begin + static_cast<std::size_t>(block_);
    nd.cap = 0.0;
    nd.lo = maps_[nd.begin].base - maps_[nd.begin].p;
    nd.hi = maps_[nd.begin].base + maps_[nd.begin].q;
    for (std::size_t k = nd.begin; k < nd.end; ++k) {
      nd.cap += maps_[k].dt;
      nd.lo = std::min(nd.lo, maps_[k].base - maps_[k].p);
      nd.hi = std::max(nd.hi, maps_[k].base + maps_[k].q);
    }
  } else {
    const Node& a = levels_[level - 1][2 * idx];
    const Node& b = levels_[level - 1][2 * idx + 1];
    nd.begin = a.begin;
    nd.end = b.end;
    nd.cap = a.cap + b.cap;
    nd.lo = std::min(a.lo, b.lo);
    nd.hi = std::max(a.hi, b.hi);
  }
  nd.center = 0.5 * (nd.lo + nd.hi);
  nd.radius = 0.5 * (nd.hi - nd.lo) + 4.0 * std::sqrt(nd.cap);
  nd.r_use = 2.6 * nd.radius;
  double r_fit = 2.0 * nd.radius;

  // Laurent coefficients by discrete Fourier transform of F(w) - w on the
  // fitting circle; F evaluated through the children (or raw maps at level 0).
  constexpr int K = 64;
  cplx h[K];
  for (int j = 0; j < K; ++j) {
    double th = 2.0 * kPi * j / K;
    cplx w = nd.center + r_fit * cplx(std::cos(th), std::sin(th));
    cplx img = (level == 0)
                   ? apply_range_raw(nd.begin, nd.end, w)
                   : eval_node(level - 1, 2 * idx,
                               eval_node(level - 1, 2 * idx + 1, w));
    h[j] = img - w;
  }
  nd.coef.resize(static_cast<std::size_t>(order_));
  double rp = r_fit;
  for (int k = 1; k <= order_; ++k, rp *= r_fit) {
    cplx acc(0.0, 0.0);
    for (int j = 0; j < K; ++j) {
      double th = 2.0 * kPi * ((j * k) % K) / K;
      acc += h[j] * cplx(std::cos(th), std::sin(th));
    }
    nd.coef[static_cast<std::size_t>(k - 1)] = acc * (rp / K);
  }
  if (levels_.size() <= level) levels_.emplace_back();
  levels_[level].push_back(std::move(nd));
}

void MapComposer::push(const SlitMap& m) {
  maps_.push_back(m);
  if (block_ <= 1) return;  // compression disabled
  std::size_t nb = maps_.size() / static_cast<std::size_t>(block_);
  if (maps_.size() % static_cast<std::size_t>(block_) != 0) return;
  build_node(0, nb - 1);
  for (std::size_t l = 0; levels_[l].size() % 2 == 0; ++l)
    build_node(l + 1, levels_[l].size() / 2 - 1);
}

cplx MapComposer::evaluate(cplx w) const {
  std::size_t n = maps_.size();
  if (block_ <= 1 || levels_.empty()) return apply_range_raw(0, n, w);
  std::size_t nb = n / static_cast<std::size_t>(block_);
  w = apply_range_raw(nb * static_cast<std::size_t>(block_), n, w);
  // Aligned binary decomposition of the leaf range [0, nb), applied from the
  // latest node to the earliest: bit l of nb set means the node at level l
  // with index (nb >> l) - 1 belongs to the decomposition, and walking bits
  // from the LSB up visits nodes in reverse range order.
  std::size_t rem = nb;
  for (std::size_t l = 0; rem > 0; ++l, rem >>= 1)
    if (rem & 1) w = eval_node(l, rem - 1, w);
  return w;
}

cplx MapComposer::evaluate_with(const SlitMap& extra, cplx w) const {
  return evaluate(apply_slit_map(extra, w));
}

Point MapComposer::trace(double u) const {
  cplx w = evaluate(cplx(u, 0.0));
  return {w.real(), w.imag()};
}

Point trace_point_fast(const std::vector<SlitMap>& maps, double u, int order,
                       int block) {
  MapComposer comp(order, block);
  for (const auto& m : maps) comp.push(m);
  return comp.trace(u);
}

double bridge_midpoint(double u_a, double u_b, double t_a, double t_b,
                       double kappa, Rng& rng) {
  if (!(t_b > t_a))
    throw std::invalid_argument("bridge_midpoint: needs t_b > t_a");
  if (kappa < 0.0)
    throw std::invalid_argument("bridge_midpoint: kappa must be >= 0");
  double sd = 0.5 * std::sqrt(kappa * (t_b - t_a));
  return 0.5 * (u_a + u_b) + sd * rng.normal();
}

cplx strip_map(cplx z, double L) {
  if (!(L > 0.0)) throw std::invalid_argument("strip_map: L must be positive");
  if (z == cplx(1.0, 0.0) || z == cplx(-1.0, 0.0))
    throw std::domain_error("strip_map: pole at z = +-1");
  return (L / kPi) * std::log((cplx(1.0, 0.0) + z) / (cplx(1.0, 0.0) - z));
}

// ---------------------------------------------------------------------------
// Adaptive SLE sampler

namespace {

struct Sampler {
  const SleConfig& cfg;
  Rng& rng;
  MapComposer comp;
  Curve curve;
  DrivingPath drv;
  Point last_measured{0.0, 0.0};
  bool strip;

  Sampler(const SleConfig& c, Rng& r)
      : cfg(c),
        rng(r),
        comp(c.laurent_order, c.use_laurent ? c.laurent_block : 1),
        strip(c.stop.kind == StopRule::Kind::strip_tip) {
    curve.params = {0.0};
    curve.points = {{0.0, 0.0}};
    drv.kappa = c.kappa;
    drv.times = {0.0};
    drv.values = {0.0};
  }

  Point measure(Point g) const {
    if (!strip) return g;
    cplx s = strip_map(cplx(g.x, g.y), 1.0);
    return {s.real(), s.imag()};
  }

  bool stop_reached(Point measured) const {
    if (strip) {
      double dxm = measured.x, dym = measured.y - 1.0;
      return dxm * dxm + dym * dym <= cfg.stop.dist * cfg.stop.dist;
    }
    return norm2(measured) >= cfg.stop.radius * cfg.stop.radius;
  }

  // Returns true once the stop rule fired at a committed point.
  bool refine(double t_a, double u_a, double t_b, double u_b, int depth) {
    SlitMap m = solve_slit_map(t_b - t_a, u_b - u_a, u_a);
    cplx w = comp.evaluate_with(m, cplx(u_b, 0.0));
    Point g{w.real(), std::max(w.imag(), 0.0)};
    Point gm = measure(g);
    // An interval whose midpoint rounds to an endpoint cannot be split
    // further. Near pinch events (large kappa) the trace can move a visible
    // distance within one representable capacity step, so such segments are
    // committed even when they violate the spacing bound.
    double t_m = 0.5 * (t_a + t_b);
    bool splittable = t_a < t_m && t_m < t_b;
    if (dist(gm, last_measured) <= cfg.dx || !splittable) {
      comp.push(m);
      curve.params.push_back(t_b);
      curve.points.push_back(strip ? gm : g);
      drv.times.push_back(t_b);
      drv.values.push_back(u_b);
      last_measured = gm;
      return stop_reached(gm);
    }
    if (depth >= cfg.max_depth) {
      std::ostringstream msg;
      msg << "sample_sle: spacing " << dist(gm, last_measured)
          << " still exceeds dx=" << cfg.dx << " at depth " << cfg.max_depth
          << " on capacity interval [" << t_a << ", " << t_b << "]";
      throw std::runtime_error(msg.str());
    }
    double u_m = bridge_midpoint(u_a, u_b, t_a, t_b, cfg.kappa, rng);
    if (refine(t_a, u_a, t_m, u_m, depth + 1)) return true;
    return refine(t_m, u_m, t_b, u_b, depth + 1);
  }

  void run() {
    double dt0 = cfg.dx * cfg.dx;
    while (true) {
      double t_a = drv.times.back();
      double u_a = drv.values.back();
      double t_b = t_a + dt0;
      double u_b = u_a + std::sqrt(cfg.kappa * dt0) * rng.normal();
      if (refine(t_a, u_a, t_b, u_b, 0)) return;
      if (comp.size() > cfg.max_maps)
        throw std::runtime_error("sample_sle: map budget exhausted");
    }
  }
};

void validate(const SleConfig& cfg) {
  if (!(cfg.kappa >= 0.0))
    throw std::invalid_argument("sle config: kappa must be >= 0");
  if (!(cfg.dx > 0.0))
    throw std::invalid_argument("sle config: dx must be positive");
  if (cfg.stop.kind == StopRule::Kind::semicircle && !(cfg.stop.radius > 0.0))
    throw std::invalid_argument("sle config: stop radius must be positive");
  if (cfg.stop.kind == StopRule::Kind::strip_tip && !(cfg.stop.dist > 0.0))
    throw std::invalid_argument("sle config: stop dist must be positive");
  if (cfg.laurent_order < 4)
    throw std::invalid_argument("sle config: laurent_order must be >= 4");
  if (cfg.laurent_block < 1)
    throw std::invalid_argument("sle config: laurent_block must be >= 1");
  if (cfg.max_depth < 1)
    throw std::invalid_argument("sle config: max_depth must be >= 1");
}

}  // namespace

SleSample sample_sle_full(const SleConfig& cfg, Rng& rng) {
  validate(cfg);
  Sampler s(cfg, rng);
  s.run();
  return {std::move(s.curve), std::move(s.drv), s.comp.maps()};
}

Curve sample_sle(const SleConfig& cfg, Rng& rng) {
  return sample_sle_full(cfg, rng).curve;
}

}  // namespace slefvar
