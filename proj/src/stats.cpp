#include "slefvar/stats.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "slefvar/fvar.hpp"

namespace slefvar {

double EmpiricalCdf::operator()(double x) const {
  const auto it = std::upper_bound(samples.begin(), samples.end(), x);
  return static_cast<double>(it - samples.begin()) /
         static_cast<double>(samples.size());
}

EmpiricalCdf cdf(std::vector<double> samples) {
  if (samples.empty()) throw std::domain_error("cdf: empty sample set");
  std::sort(samples.begin(), samples.end());
  return {std::move(samples)};
}

double ks_distance(const EmpiricalCdf& a, const EmpiricalCdf& b) {
  const auto& A = a.samples;
  const auto& B = b.samples;
  if (A.empty() || B.empty())
    throw std::domain_error("ks_distance: empty sample set");
  const double na = static_cast<double>(A.size());
  const double nb = static_cast<double>(B.size());
  std::size_t i = 0, j = 0;
  double best = 0.0;
  while (i < A.size() || j < B.size()) {
    const double t = (j >= B.size() || (i < A.size() && A[i] <= B[j])) ? A[i]
                                                                       : B[j];
    while (i < A.size() && A[i] <= t) ++i;
    while (j < B.size() && B[j] <= t) ++j;
    best = std::max(best, std::fabs(i / na - j / nb));
  }
  return best;
}

std::optional<MidpointSample> midpoint_sle(const Curve& curve, double dt,
                                           double d_h, double radius) {
  if (!(radius > 0.0))
    throw std::invalid_argument("midpoint_sle: radius must be positive");
  const auto hit = first_circle_hit(curve, Point{0.0, 0.0}, radius);
  if (!hit) return std::nullopt;
  const Curve head = truncated(curve, hit->param);
  const FvarResult fv = fvar_hitting(head, dt, d_h);
  if (fv.n < 2) return std::nullopt;
  const long k = std::llround(fv.n / 2.0);  // 1-based hit index at time T/2
  const Point p = point_at(head, fv.hit_params[static_cast<std::size_t>(k - 1)]);
  MidpointSample s;
  s.x = p.x / radius;
  s.y = p.y / radius;
  const PolarPoint pp = polar_decompose({s.x, s.y});
  s.r = pp.r;
  s.theta = pp.theta;
  s.T = fv.value;
  s.n_hits = fv.n;
  return s;
}

std::optional<MidpointSample> midpoint_lattice(const Curve& curve,
                                               double radius) {
  if (!(radius > 0.0))
    throw std::invalid_argument("midpoint_lattice: radius must be positive");
  check_curve(curve);
  if (curve.params.front() != 0.0 ||
      curve.params.back() != static_cast<double>(curve.size() - 1))
    throw std::invalid_argument(
        "midpoint_lattice: curve must carry step-index parameters");
  const auto hit = first_circle_hit(curve, Point{0.0, 0.0}, radius);
  if (!hit) return std::nullopt;
  const long m = static_cast<long>(std::ceil(hit->param));
  if (m < 2) return std::nullopt;
  const Point p = curve.points[static_cast<std::size_t>(m / 2)];
  MidpointSample s;
  s.x = p.x / radius;
  s.y = p.y / radius;
  const PolarPoint pp = polar_decompose({s.x, s.y});
  s.r = pp.r;
  s.theta = pp.theta;
  s.T = static_cast<double>(m);
  s.n_hits = m;
  return s;
}

std::vector<double> extract_coord(const std::vector<MidpointSample>& samples,
                                  Coord c) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const MidpointSample& s : samples) {
    switch (c) {
      case Coord::X: out.push_back(s.x); break;
      case Coord::Y: out.push_back(s.y); break;
      case Coord::R: out.push_back(s.r); break;
      case Coord::Theta: out.push_back(s.theta); break;
    }
  }
  return out;
}

void write_samples_csv(const std::string& path,
                       const std::vector<MidpointSample>& samples) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("write_samples_csv: cannot open " + path);
  std::fputs("sample_id,x,y,r,theta,T,n_hits\n", f);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const MidpointSample& s = samples[k];
    std::fprintf(f, "%zu,%s,%s,%s,%s,%s,%ld\n", k, format_double(s.x).c_str(),
                 format_double(s.y).c_str(), format_double(s.r).c_str(),
                 format_double(s.theta).c_str(), format_double(s.T).c_str(),
                 s.n_hits);
  }
  std::fclose(f);
}

namespace {

double parse_field(const std::string& line, std::size_t& pos, bool last) {
  const std::size_t end = last ? line.size() : line.find(',', pos);
  if (end == std::string::npos)
    throw std::runtime_error("read_samples_csv: malformed row: " + line);
  double v = 0.0;
  const auto res = std::from_chars(line.data() + pos, line.data() + end, v);
  if (res.ec != std::errc{} || res.ptr != line.data() + end)
    throw std::runtime_error("read_samples_csv: bad number in row: " + line);
  pos = end + 1;
  return v;
}

}  // namespace

std::vector<MidpointSample> read_samples_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_samples_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("sample_id,", 0) != 0)
    throw std::runtime_error("read_samples_csv: missing header in " + path);
  std::vector<MidpointSample> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t pos = 0;
    parse_field(line, pos, false);  // sample_id, unused
    MidpointSample s;
    s.x = parse_field(line, pos, false);
    s.y = parse_field(line, pos, false);
    s.r = parse_field(line, pos, false);
    s.theta = parse_field(line, pos, false);
    s.T = parse_field(line, pos, false);
    s.n_hits = static_cast<long>(parse_field(line, pos, true));
    out.push_back(s);
  }
  return out;
}

double mean(const std::vector<double>& xs) {
  if (xs.empty()) throw std::domain_error("mean: empty sample set");
  double acc = 0.0;
  for (const double x : xs) acc += x;
  return acc / static_cast<double>(xs.size());
}

double variance(const std::vector<double>& xs) {
  if (xs.size() < 2) throw std::domain_error("variance: need at least 2 samples");
  const double m = mean(xs);
  double acc = 0.0;
  for (const double x : xs) acc += (x - m) * (x - m);
  return acc / static_cast<double>(xs.size() - 1);
}

}  // namespace slefvar
