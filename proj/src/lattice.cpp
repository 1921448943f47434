#include "slefvar/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <utility>

namespace slefvar {
namespace {

// Open-addressed 64-bit-key map with O(1) clear via epoch tags, reused across
// many walks without reinitialization. Values are never individually erased;
// callers that need erasure semantics validate hits against their own state.
struct SiteMap {
  struct Slot {
    std::uint64_t key = 0;
    std::uint32_t epoch = 0;
    std::int32_t value = 0;
  };
  std::vector<Slot> slots;
  std::uint64_t mask = 0;
  std::uint32_t epoch = 1;
  std::size_t used = 0;

  explicit SiteMap(unsigned log2cap)
      : slots(std::size_t{1} << log2cap),
        mask((std::size_t{1} << log2cap) - 1) {}

  void clear() {
    ++epoch;
    used = 0;
    if (epoch == 0) {
      for (Slot& s : slots) s.epoch = 0;
      epoch = 1;
    }
  }

  std::int32_t* find(std::uint64_t key) {
    std::size_t i = mix64(key) & mask;
    while (true) {
      Slot& s = slots[i];
      if (s.epoch != epoch) return nullptr;
      if (s.key == key) return &s.value;
      i = (i + 1) & mask;
    }
  }

  void insert(std::uint64_t key, std::int32_t value) {
    if (2 * (used + 1) >= slots.size()) grow();
    insert_raw(key, value);
  }

 private:
  void insert_raw(std::uint64_t key, std::int32_t value) {
    std::size_t i = mix64(key) & mask;
    while (true) {
      Slot& s = slots[i];
      if (s.epoch != epoch) {
        s = {key, epoch, value};
        ++used;
        return;
      }
      if (s.key == key) {
        s.value = value;
        return;
      }
      i = (i + 1) & mask;
    }
  }

  void grow() {
    std::vector<Slot> old = std::move(slots);
    slots.assign(old.size() * 2, Slot{});
    mask = slots.size() - 1;
    const std::uint32_t live = epoch;
    epoch = 1;
    used = 0;
    for (const Slot& s : old)
      if (s.epoch == live) insert_raw(s.key, s.value);
  }
};

inline std::uint64_t pack_axial(Axial c) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.a)) << 32) |
         static_cast<std::uint32_t>(c.b);
}

inline Axial rot_cw(Axial d) { return {-d.b, d.a + d.b}; }
inline Axial rot_ccw(Axial d) { return {d.a + d.b, -d.a}; }
inline Axial add(Axial p, Axial d) { return {p.a + d.a, p.b + d.b}; }
inline Axial sub(Axial p, Axial q) { return {p.a - q.a, p.b - q.b}; }

inline int floordiv(int a, int b) {
  return (a >= 0) ? a / b : -((-a + b - 1) / b);
}

}  // namespace

Site apply_square_symmetry(int g, Site v) {
  switch (g) {
    case 1: return {-v.y, v.x};    // quarter turn
    case 2: return {-v.x, -v.y};   // half turn
    case 3: return {v.y, -v.x};    // three-quarter turn
    case 4: return {v.x, -v.y};    // flip across the x axis
    case 5: return {-v.x, v.y};    // flip across the y axis
    case 6: return {v.y, v.x};     // flip across the main diagonal
    case 7: return {-v.y, -v.x};   // flip across the anti-diagonal
    default: throw std::domain_error("apply_square_symmetry: index must be 1..7");
  }
}

int inverse_square_symmetry(int g) {
  if (g == 1) return 3;
  if (g == 3) return 1;
  if (g >= 2 && g <= 7) return g;  // the rest are involutions
  throw std::domain_error("inverse_square_symmetry: index must be 1..7");
}

Site excursion_step(Site s, Rng& rng) {
  const int k = s.y;
  if (k < 1) throw std::domain_error("excursion_step: height must be >= 1");
  const double u = rng.uniform01();
  const double up = (k + 1.0) / (4.0 * k);
  if (u < up) return {s.x, s.y + 1};
  if (u < 0.5) return {s.x, s.y - 1};  // up + down probabilities sum to 1/2
  if (u < 0.75) return {s.x - 1, s.y};
  return {s.x + 1, s.y};
}

std::vector<Site> loop_erased(const std::vector<Site>& path) {
  std::vector<Site> walk;
  if (path.empty()) return walk;
  std::unordered_map<std::uint64_t, std::size_t> index;
  walk.push_back(path[0]);
  index.emplace(pack_site(path[0]), 0);
  for (std::size_t k = 1; k < path.size(); ++k) {
    const Site s = path[k];
    auto it = index.find(pack_site(s));
    if (it != index.end()) {
      for (std::size_t j = it->second + 1; j < walk.size(); ++j)
        index.erase(pack_site(walk[j]));
      walk.resize(it->second + 1);
    } else {
      walk.push_back(s);
      index.emplace(pack_site(s), walk.size() - 1);
    }
  }
  return walk;
}

LatticeWalk lerw_sample(long n_steps, Rng& rng,
                        std::vector<Site>* raw_excursion) {
  if (n_steps < 1)
    throw std::invalid_argument("lerw_sample: n_steps must be >= 1");
  thread_local SiteMap map(16);
  map.clear();
  std::vector<Site> walk;
  walk.reserve(static_cast<std::size_t>(n_steps) + 1);
  walk.push_back({0, 0});
  walk.push_back({0, 1});  // the first excursion step is deterministically up
  map.insert(pack_site({0, 0}), 0);
  map.insert(pack_site({0, 1}), 1);
  if (raw_excursion) {
    raw_excursion->clear();
    raw_excursion->push_back({0, 0});
    raw_excursion->push_back({0, 1});
  }
  Site pos{0, 1};
  while (static_cast<long>(walk.size()) - 1 < n_steps) {
    pos = excursion_step(pos, rng);
    if (raw_excursion) raw_excursion->push_back(pos);
    // A stale map hit (left over from an erased loop) is detected by checking
    // the walk itself; entries are refreshed on append.
    std::int32_t* v = map.find(pack_site(pos));
    if (v && static_cast<std::size_t>(*v) < walk.size() &&
        walk[static_cast<std::size_t>(*v)] == pos) {
      walk.resize(static_cast<std::size_t>(*v) + 1);
    } else {
      walk.push_back(pos);
      map.insert(pack_site(pos), static_cast<std::int32_t>(walk.size() - 1));
    }
  }
  return {std::move(walk), model_spec("lerw")};
}

bool saw_apply_pivot(std::vector<Site>& walk, long j, int g) {
  const long n = static_cast<long>(walk.size()) - 1;
  if (j < 0 || j > n)
    throw std::invalid_argument("saw_apply_pivot: pivot index out of range");
  const Site piv = walk[j];
  thread_local SiteMap occupied(12);
  thread_local std::vector<Site> prop;
  prop.resize(walk.size());
  occupied.clear();
  for (long i = 0; i <= j; ++i) occupied.insert(pack_site(walk[i]), 1);
  for (long i = j + 1; i <= n; ++i) {
    const Site t = apply_square_symmetry(g, {walk[i].x - piv.x, walk[i].y - piv.y});
    const Site s2{piv.x + t.x, piv.y + t.y};
    if (s2.y < 0) return false;
    if (occupied.find(pack_site(s2))) return false;
    occupied.insert(pack_site(s2), 1);
    prop[i] = s2;
  }
  for (long i = j + 1; i <= n; ++i) walk[i] = prop[i];
  return true;
}

PivotStats saw_pivot_run(long n, long iters, long thin, Rng& rng,
                         const std::function<void(const LatticeWalk&)>& observer,
                         long burnin_accepted) {
  if (n < 2) throw std::invalid_argument("saw_pivot_run: n must be >= 2");
  if (iters < 0) throw std::invalid_argument("saw_pivot_run: iters must be >= 0");
  if (thin < 1) throw std::invalid_argument("saw_pivot_run: thin must be >= 1");
  if (burnin_accepted < 0) burnin_accepted = 10 * n;

  std::vector<Site> walk(static_cast<std::size_t>(n) + 1);
  for (long i = 0; i <= n; ++i) walk[i] = {0, static_cast<int>(i)};

  PivotStats st;
  auto attempt = [&]() {
    ++st.proposals;
    const long j = rng.uniform_int(0, n);
    const int g = 1 + static_cast<int>(rng.uniform_int(0, 6));
    if (saw_apply_pivot(walk, j, g)) ++st.accepted;
  };

  // Burn-in is measured in accepted moves; a pivot at the endpoint is the
  // identity and always accepted, so this terminates.
  while (st.accepted < burnin_accepted) attempt();

  LatticeWalk view{{}, model_spec("saw")};
  for (long it = 1; it <= iters; ++it) {
    attempt();
    if (observer && it % thin == 0) {
      view.sites = walk;
      observer(view);
    }
  }
  return st;
}

Point hex_center(Axial c) {
  const double s3 = std::sqrt(3.0);
  return {s3 * (c.a + 0.5 * c.b) + 0.5 * s3, 1.5 * c.b};
}

namespace {
Point centroid3(Point a, Point b, Point c) {
  return {(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
}
}  // namespace

HexInterface perc_interface(long n_steps, Rng& rng, bool with_colors) {
  if (n_steps < 1)
    throw std::invalid_argument("perc_interface: n_steps must be >= 1");
  thread_local SiteMap cmap(16);
  cmap.clear();

  HexInterface out;
  out.vertices.reserve(static_cast<std::size_t>(n_steps) + 1);
  out.edge_cells.reserve(static_cast<std::size_t>(n_steps));

  auto color_of = [&](Axial c) -> bool {  // true = black (kept on the right)
    if (c.b == 0) return c.a >= 0;  // fixed boundary row
    if (c.b < 0)
      throw std::logic_error("perc_interface: queried a cell below the boundary");
    const std::uint64_t key = pack_axial(c);
    if (const std::int32_t* v = cmap.find(key)) return *v != 0;
    const bool black = rng.uniform01() < 0.5;
    cmap.insert(key, black ? 1 : 0);
    if (with_colors) out.colors.emplace(c, black);
    return black;
  };

  Axial L{-1, 0}, R{0, 0};      // the edge through the origin
  Axial head{-1, 1};            // upper endpoint's third cell
  const Axial tail{0, -1};      // lower endpoint's third cell
  out.vertices.push_back(centroid3(hex_center(L), hex_center(R), hex_center(tail)));
  out.vertices.push_back(centroid3(hex_center(L), hex_center(R), hex_center(head)));
  out.edge_cells.push_back({L, R});

  for (long k = 1; k < n_steps; ++k) {
    Axial old;
    if (color_of(head)) {
      old = R;
      R = head;
    } else {
      old = L;
      L = head;
    }
    const Axial d = sub(R, L);
    const Axial c1 = add(L, rot_cw(d));
    const Axial c2 = add(L, rot_ccw(d));
    head = (c1 == old) ? c2 : c1;
    out.edge_cells.push_back({L, R});
    out.vertices.push_back(
        centroid3(hex_center(L), hex_center(R), hex_center(head)));
  }
  return out;
}

SpinConfig make_ising_rect(int cols, int rows, double coupling,
                           bool frozen_rows, bool antiperiodic_seam) {
  if (cols < 2 || rows < 2)
    throw std::invalid_argument("make_ising_rect: need at least 2x2 sites");
  if (antiperiodic_seam && cols % 2 != 0)
    throw std::invalid_argument(
        "make_ising_rect: the antiperiodic seam needs an even column count");
  SpinConfig s;
  s.cols = cols;
  s.rows = rows;
  s.coupling = coupling;
  s.antiperiodic = antiperiodic_seam;
  s.spin.assign(static_cast<std::size_t>(cols) * rows, 1);
  s.frozen.assign(static_cast<std::size_t>(cols) * rows, 0);
  if (frozen_rows) {
    for (int i = 0; i < cols; ++i) {
      const std::int8_t sgn = (i >= cols / 2) ? 1 : -1;
      for (int j : {0, rows - 1}) {
        s.spin[s.idx(i, j)] = sgn;
        s.frozen[s.idx(i, j)] = 1;
      }
    }
  }
  return s;
}

Point ising_site_position(const SpinConfig& s, int i, int j) {
  const double x = (i - s.cols / 2) * (std::sqrt(3.0) / 2.0);
  const double y = j + ((i & 1) ? 0.5 : 0.0);
  return {x, y};
}

namespace {

// Visits the in-rectangle neighbors of (i, j); sign is -1 on bonds that wrap
// through the seam.
template <class F>
void for_neighbors(const SpinConfig& s, int i, int j, F&& fn) {
  auto emit_col = [&](int i2, int j2) {
    int sign = 1;
    if (i2 < 0) {
      if (!s.antiperiodic) return;
      i2 += s.cols;
      sign = -1;
    } else if (i2 >= s.cols) {
      if (!s.antiperiodic) return;
      i2 -= s.cols;
      sign = -1;
    }
    if (j2 < 0 || j2 >= s.rows) return;
    fn(i2, j2, sign);
  };
  if (j + 1 < s.rows) fn(i, j + 1, 1);
  if (j - 1 >= 0) fn(i, j - 1, 1);
  const int dj = (i & 1) ? 1 : -1;
  emit_col(i + 1, j);
  emit_col(i - 1, j);
  emit_col(i + 1, j + dj);
  emit_col(i - 1, j + dj);
}

}  // namespace

long ising_bond_sum(const SpinConfig& s) {
  long total = 0;
  for (int i = 0; i < s.cols; ++i)
    for (int j = 0; j < s.rows; ++j)
      for_neighbors(s, i, j, [&](int i2, int j2, int sign) {
        total += sign * s.spin[s.idx(i, j)] * s.spin[s.idx(i2, j2)];
      });
  return total / 2;  // every bond was visited from both ends
}

long ising_wolff_run(SpinConfig& s, long iters, long thin, Rng& rng,
                     const std::function<void(const SpinConfig&)>& observer) {
  if (iters < 0) throw std::invalid_argument("ising_wolff_run: iters must be >= 0");
  if (thin < 1) throw std::invalid_argument("ising_wolff_run: thin must be >= 1");
  const double padd = 1.0 - std::exp(-2.0 * s.coupling);
  const int nsite = s.cols * s.rows;
  std::vector<std::uint32_t> mark(nsite, 0);
  std::uint32_t cur = 0;
  std::vector<int> stack, cluster;
  long flipped = 0;
  for (long it = 1; it <= iters; ++it) {
    if (++cur == 0) {
      std::fill(mark.begin(), mark.end(), 0);
      cur = 1;
    }
    const int seed = static_cast<int>(rng.uniform_int(0, nsite - 1));
    stack.assign(1, seed);
    cluster.assign(1, seed);
    mark[seed] = cur;
    bool has_frozen = s.frozen[seed] != 0;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      const int ui = u / s.rows;
      const int uj = u % s.rows;
      const int su = s.spin[u];
      for_neighbors(s, ui, uj, [&](int i2, int j2, int sign) {
        const int v = s.idx(i2, j2);
        if (mark[v] == cur) return;
        if (su * s.spin[v] * sign != 1) return;  // bond not satisfied
        if (rng.uniform01() >= padd) return;
        mark[v] = cur;
        if (s.frozen[v]) has_frozen = true;
        stack.push_back(v);
        cluster.push_back(v);
      });
    }
    if (!has_frozen) {
      for (const int u : cluster) s.spin[u] = -s.spin[u];
      ++flipped;
    }
    if (observer && it % thin == 0) observer(s);
  }
  return flipped;
}

long ising_wolff_run(double W, long L, long iters, long thin, Rng& rng,
                     const std::function<void(const SpinConfig&)>& observer) {
  if (!(W > 0.0) || L < 2)
    throw std::invalid_argument("ising_wolff_run: rectangle dimensions must be positive");
  long cols = std::lround(2.0 * W / std::sqrt(3.0));
  if (cols % 2 != 0) ++cols;  // the seam needs consistent column parity
  if (cols < 2) cols = 2;
  SpinConfig s = make_ising_rect(static_cast<int>(cols), static_cast<int>(L) + 1,
                                 kIsingTriangularKc, true, true);
  return ising_wolff_run(s, iters, thin, rng, observer);
}

namespace {

// Axial view of the triangular lattice with columns unrolled through the
// seam: cell (a, m) is site (a mod cols, m + floor(a/2)) with spin sign
// flipped once per wrap.
int unrolled_spin(const SpinConfig& s, Axial c, int* row_out) {
  const int ii = c.a;
  const int j = c.b + floordiv(ii, 2);
  if (row_out) *row_out = j;
  if (j < 0)
    throw std::logic_error("ising_interface: walked below the bottom row");
  if (j >= s.rows) return 0;  // beyond the top row: termination sentinel
  const int w = floordiv(ii, s.cols);
  const int i = ii - w * s.cols;
  const int sp = s.spin[s.idx(i, j)];
  return (w & 1) ? -sp : sp;
}

}  // namespace

Curve ising_interface(const SpinConfig& s) {
  if (!s.antiperiodic)
    throw std::invalid_argument("ising_interface: needs the antiperiodic seam");
  for (int i = 0; i < s.cols; ++i)
    if (!s.frozen[s.idx(i, 0)] || !s.frozen[s.idx(i, s.rows - 1)])
      throw std::invalid_argument("ising_interface: needs frozen boundary rows");

  const int i0 = s.cols / 2;
  auto pos_of = [&](Axial c) -> Point {
    const int ii = c.a;
    const int j = c.b + floordiv(ii, 2);
    return {(ii - i0) * (std::sqrt(3.0) / 2.0), j + ((ii & 1) ? 0.5 : 0.0)};
  };
  auto row_of = [&](Axial c) { return c.b + floordiv(c.a, 2); };

  Axial L{i0 - 1, -floordiv(i0 - 1, 2)};
  Axial R{i0, -floordiv(i0, 2)};
  if (unrolled_spin(s, L, nullptr) != -1 || unrolled_spin(s, R, nullptr) != 1)
    throw std::logic_error("ising_interface: boundary change pair not found");

  Axial d = sub(R, L);
  Axial c1 = add(L, rot_cw(d));
  Axial c2 = add(L, rot_ccw(d));
  Axial head = (row_of(c1) >= 0) ? c1 : c2;
  const Axial tail = (row_of(c1) >= 0) ? c2 : c1;

  std::vector<Point> pts;
  pts.push_back(centroid3(pos_of(L), pos_of(R), pos_of(tail)));
  pts.push_back(centroid3(pos_of(L), pos_of(R), pos_of(head)));
  const long cap = 64L * s.cols * s.rows;
  while (true) {
    const int sp = unrolled_spin(s, head, nullptr);
    if (sp == 0) break;  // the decision cell is above the top boundary row
    Axial old;
    if (sp > 0) {  // +1 spins stay on the right of the path
      old = R;
      R = head;
    } else {
      old = L;
      L = head;
    }
    d = sub(R, L);
    c1 = add(L, rot_cw(d));
    c2 = add(L, rot_ccw(d));
    head = (c1 == old) ? c2 : c1;
    pts.push_back(centroid3(pos_of(L), pos_of(R), pos_of(head)));
    if (static_cast<long>(pts.size()) > cap)
      throw std::runtime_error("ising_interface: path failed to terminate");
  }

  Curve out;
  out.params.resize(pts.size());
  for (std::size_t k = 0; k < pts.size(); ++k)
    out.params[k] = static_cast<double>(k);
  out.points = std::move(pts);
  return out;
}

namespace {

Curve scaled_curve(const std::vector<Point>& pts, long scale_n, double d_h) {
  if (scale_n < 1)
    throw std::invalid_argument("natural_curve: scale must be >= 1");
  const double sp = std::pow(static_cast<double>(scale_n), 1.0 / d_h);
  Curve c;
  c.params.reserve(pts.size());
  c.points.reserve(pts.size());
  for (std::size_t k = 0; k < pts.size(); ++k) {
    c.params.push_back(static_cast<double>(k) / scale_n);
    c.points.push_back({pts[k].x / sp, pts[k].y / sp});
  }
  return c;
}

}  // namespace

Curve natural_curve(const LatticeWalk& w, long scale_n) {
  std::vector<Point> pts;
  pts.reserve(w.sites.size());
  for (const Site s : w.sites)
    pts.push_back({static_cast<double>(s.x), static_cast<double>(s.y)});
  return scaled_curve(pts, scale_n, w.model.d_h);
}

Curve natural_curve(const HexInterface& h, long scale_n) {
  return scaled_curve(h.vertices, scale_n, model_spec("perc").d_h);
}

void write_walk_csv(const std::string& path, const LatticeWalk& w) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("write_walk_csv: cannot open " + path);
  std::fputs("step,x,y\n", f);
  for (std::size_t k = 0; k < w.sites.size(); ++k)
    std::fprintf(f, "%zu,%d,%d\n", k, w.sites[k].x, w.sites[k].y);
  std::fclose(f);
}

void write_interface_csv(const std::string& path, const HexInterface& h) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("write_interface_csv: cannot open " + path);
  std::fputs("step,x,y\n", f);
  for (std::size_t k = 0; k < h.vertices.size(); ++k)
    std::fprintf(f, "%zu,%s,%s\n", k, format_double(h.vertices[k].x).c_str(),
                 format_double(h.vertices[k].y).c_str());
  std::fclose(f);
}

}  // namespace slefvar
