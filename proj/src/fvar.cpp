#include "slefvar/fvar.hpp"

#include <cmath>
#include <stdexcept>

namespace slefvar {

ModelSpec model_spec(const std::string& name, double kappa_for_sle) {
  if (name == "lerw") return {name, 1.25, 2.0};
  if (name == "saw") return {name, 4.0 / 3.0, 8.0 / 3.0};
  if (name == "ising") return {name, 11.0 / 8.0, 3.0};
  if (name == "perc") return {name, 1.75, 6.0};
  if (name == "sle") {
    if (!(kappa_for_sle > 0.0))
      throw std::invalid_argument("model sle needs kappa > 0");
    return {name, 1.0 + kappa_for_sle / 8.0, kappa_for_sle};
  }
  throw std::invalid_argument("unknown model name: " + name);
}

double fvar_partition(const Curve& c, const std::vector<double>& partition,
                      double d_h) {
  check_curve(c);
  if (!(d_h > 0.0)) throw std::invalid_argument("d_h must be positive");
  if (partition.size() < 2)
    throw std::invalid_argument("partition needs at least two parameters");
  double sum = 0.0;
  Point prev = point_at(c, partition.front());
  for (std::size_t j = 1; j < partition.size(); ++j) {
    if (!(partition[j] > partition[j - 1]))
      throw std::invalid_argument("partition must be strictly increasing");
    Point cur = point_at(c, partition[j]);
    sum += std::pow(dist(prev, cur), d_h);
    prev = cur;
  }
  return sum;
}

namespace {

struct Hit {
  double param;
  Point point;
};

std::vector<Hit> hitting_scan(const Curve& c, double radius) {
  std::vector<Hit> hits;
  HitCursor cur;
  cur.seg = 0;
  cur.param = c.params.front();
  cur.point = c.points.front();
  while (true) {
    HitCursor next;
    auto h = first_circle_hit_from(c, cur, radius, &next);
    if (!h) break;
    hits.push_back({h->param, h->point});
    cur = next;
  }
  return hits;
}

double hit_radius(double dt, double d_h) {
  if (!(dt > 0.0)) throw std::invalid_argument("fvar dt must be positive");
  if (!(d_h > 0.0)) throw std::invalid_argument("d_h must be positive");
  // sqrt is correctly rounded (pow is not), so the d_h = 2 radius commutes
  // bit-for-bit with power-of-two rescalings of dt.
  if (d_h == 2.0) return std::sqrt(dt);
  return std::pow(dt, 1.0 / d_h);
}

}  // namespace

FvarResult fvar_hitting(const Curve& c, double dt, double d_h) {
  check_curve(c);
  auto hits = hitting_scan(c, hit_radius(dt, d_h));
  FvarResult r;
  r.dt = dt;
  r.d_h = d_h;
  r.n = static_cast<long>(hits.size());
  r.value = static_cast<double>(r.n) * dt;
  r.hit_params.reserve(hits.size());
  for (const auto& h : hits) r.hit_params.push_back(h.param);
  return r;
}

Curve reparam_by_fvar(const Curve& c, double dt, double d_h) {
  check_curve(c);
  auto hits = hitting_scan(c, hit_radius(dt, d_h));
  if (hits.size() < 2)
    throw std::invalid_argument(
        "reparam_by_fvar: fewer than two hits at this dt");
  Curve out;
  out.params.reserve(hits.size());
  out.points.reserve(hits.size());
  for (std::size_t k = 0; k < hits.size(); ++k) {
    out.params.push_back(static_cast<double>(k + 1) * dt);
    out.points.push_back(hits[k].point);
  }
  return out;
}

FvarStudy fvar_study(const std::vector<Curve>& curves,
                     const std::vector<double>& dt_list, double d_h,
                     double t_cap) {
  if (dt_list.empty()) throw std::invalid_argument("dt list is empty");
  for (double dt : dt_list)
    if (!(dt > 0.0)) throw std::invalid_argument("fvar dt must be positive");
  if (!(d_h > 0.0)) throw std::invalid_argument("d_h must be positive");
  FvarStudy study;
  study.dt = dt_list;
  study.values.resize(dt_list.size());
  study.counts.resize(dt_list.size());
  for (const auto& c : curves) {
    check_curve(c);
    if (c.param_end() < t_cap || !(t_cap > c.param_begin())) {
      ++study.skipped;
      continue;
    }
    Curve cut = truncated(c, t_cap);
    for (std::size_t i = 0; i < dt_list.size(); ++i) {
      FvarResult r = fvar_hitting(cut, dt_list[i], d_h);
      study.values[i].push_back(r.value);
      study.counts[i].push_back(r.n);
    }
  }
  return study;
}

SlopeFit variance_slope(const std::vector<double>& x,
                        const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument(
        "variance_slope needs matching arrays with at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw std::invalid_argument("variance_slope needs positive data");
    double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  double n = static_cast<double>(x.size());
  double denom = n * sxx - sx * sx;
  // Relative test: equal abscissae leave only rounding residue in denom.
  if (!(std::fabs(denom) > 1e-12 * (n * sxx + sx * sx)))
    throw std::invalid_argument("variance_slope: degenerate abscissae");
  SlopeFit fit;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  return fit;
}

}  // namespace slefvar
