#pragma once
// Lattice curve ensembles: loop-erased random walk from a half-plane
// excursion, the pivot chain for self-avoiding walks, the percolation
// exploration path on the hexagonal lattice, and the Wolff-sampled Ising
// interface on a triangular-lattice rectangle.

#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

#include "slefvar/fvar.hpp"
#include "slefvar/geometry.hpp"
#include "slefvar/rng.hpp"

namespace slefvar {

struct Site {
  int x = 0;
  int y = 0;
  bool operator==(const Site&) const = default;
};

inline std::uint64_t pack_site(Site s) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(s.x)) << 32) |
         static_cast<std::uint32_t>(s.y);
}

struct LatticeWalk {
  std::vector<Site> sites;  // sites[0] is the start; steps are unit moves
  ModelSpec model;
};

// One step of the upper-half-plane excursion at height k >= 1: up with
// probability (k+1)/(4k), down (k-1)/(4k), left and right 1/4 each. Throws
// std::domain_error for k < 1.
Site excursion_step(Site s, Rng& rng);

// Chronological loop erasure: scan the path once, truncating back to the
// previous visit whenever a site repeats.
std::vector<Site> loop_erased(const std::vector<Site>& path);

// Loop-erased walk with exactly n_steps steps: half-plane excursion from the
// origin (first step deterministically up), loops erased online as they
// close. raw_excursion, when non-null, records every excursion position.
LatticeWalk lerw_sample(long n_steps, Rng& rng,
                        std::vector<Site>* raw_excursion = nullptr);

// The 7 nontrivial point symmetries of the square lattice acting on a
// displacement: 1..3 are quarter/half/three-quarter turns, 4..7 reflections
// across the x axis, y axis, main diagonal and anti-diagonal.
Site apply_square_symmetry(int g, Site v);
int inverse_square_symmetry(int g);

// Deterministic pivot move: apply symmetry g to the walk's tail beyond site
// index j; commits and returns true iff the result is self-avoiding and stays
// at y >= 0. Rejected moves leave the walk untouched. Reversal: an accepted
// (j, g) is undone exactly by (j, inverse_square_symmetry(g)).
bool saw_apply_pivot(std::vector<Site>& walk, long j, int g);

struct PivotStats {
  long proposals = 0;
  long accepted = 0;
};

// Pivot chain over n-step half-plane self-avoiding walks anchored at the
// origin. Starts from the straight vertical walk, discards burnin_accepted
// accepted moves (default 10*n when negative), then runs `iters` iterations
// invoking the observer every `thin` iterations. Each move picks a uniform
// pivot site and one of the 7 nontrivial square-lattice point symmetries,
// applies it to the tail and accepts iff the result is self-avoiding and
// stays at y >= 0.
PivotStats saw_pivot_run(long n, long iters, long thin, Rng& rng,
                         const std::function<void(const LatticeWalk&)>& observer,
                         long burnin_accepted = -1);

// Axial coordinates of a hexagonal cell (percolation) or a triangular site
// (Ising); both lattices share the same adjacency arithmetic.
struct Axial {
  int a = 0;
  int b = 0;
  bool operator==(const Axial&) const = default;
};

struct AxialHash {
  std::size_t operator()(const Axial& c) const {
    return static_cast<std::size_t>(
        mix64((static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.a))
               << 32) |
              static_cast<std::uint32_t>(c.b)));
  }
};

// Percolation exploration path. Hexagons have unit edge; the row b = 0 is
// the boundary (white for centers on the negative real axis, black on the
// positive), rows b >= 1 are fair coins revealed lazily: each step reveals at
// most the one hexagon whose color decides the next turn. The path starts
// with the hexagon edge through the origin and keeps white cells on its left
// and black cells on its right.
struct HexInterface {
  std::vector<Point> vertices;  // n_steps+1 planar points, unit edge length
  std::vector<std::pair<Axial, Axial>> edge_cells;  // (left, right) per step
  std::unordered_map<Axial, bool, AxialHash> colors;  // revealed bulk cells;
                                                      // true = black
};

// with_colors controls whether the revealed-color map is exported (the walk
// itself always uses lazy reveals internally).
HexInterface perc_interface(long n_steps, Rng& rng, bool with_colors = true);

// Planar center of hexagon (a, b); the boundary row straddles the real axis
// with the first black cell centered at sqrt(3)/2.
Point hex_center(Axial c);

// Ising spins on a triangular-lattice rectangle. Sites (i, j) sit at
// x = (i - cols/2) * sqrt(3)/2 and y = j (+ 1/2 on odd columns); neighbors
// are (i, j+-1), (i+-1, j) and (i+-1, j-1) for even i / (i+-1, j+1) for odd.
// With antiperiodic_seam the columns wrap (cols must be even) and bonds
// crossing the wrap carry coupling sign -1; with frozen_rows the bottom and
// top rows are fixed to -1 for x < 0 and +1 for x >= 0, which together force
// one interface from near 0 to near i*rows. Bulk spins start at +1.
struct SpinConfig {
  int cols = 0;
  int rows = 0;
  double coupling = 0.0;  // K = J/kT; the triangular critical point is ln(3)/4
  bool antiperiodic = false;
  std::vector<std::int8_t> spin;     // index i*rows + j
  std::vector<std::uint8_t> frozen;  // fixed-site mask, same indexing

  int idx(int i, int j) const { return i * rows + j; }
};

inline constexpr double kIsingTriangularKc = 0.27465307216702745;  // ln(3)/4

SpinConfig make_ising_rect(int cols, int rows, double coupling,
                           bool frozen_rows, bool antiperiodic_seam);

Point ising_site_position(const SpinConfig& s, int i, int j);

// Sum of s_i * s_j * sign over bonds (sign = -1 across the seam); the energy
// is minus this times the coupling's J.
long ising_bond_sum(const SpinConfig& s);

// Wolff cluster updates: each iteration seeds a uniform site and grows a
// cluster through satisfied bonds with probability 1 - exp(-2K); clusters
// containing a frozen site are built but not flipped. The observer (when
// set) runs every `thin` iterations. Returns the number of flipped clusters.
long ising_wolff_run(SpinConfig& s, long iters, long thin, Rng& rng,
                     const std::function<void(const SpinConfig&)>& observer);

// Convenience wrapper for the interface geometry: a frozen-row, antiperiodic
// rectangle of planar width W and height L (columns every sqrt(3)/2, rows
// 0..L) at the critical coupling.
long ising_wolff_run(double W, long L, long iters, long thin, Rng& rng,
                     const std::function<void(const SpinConfig&)>& observer);

// Interface on the dual hexagonal lattice from the lower boundary-condition
// change point to the upper one, keeping -1 spins on the left and +1 on the
// right. Requires frozen rows and the antiperiodic seam. params are step
// indices, points planar dual vertices (triangle centers).
Curve ising_interface(const SpinConfig& s);

// Natural parametrization: point k at params k/scale_n with coordinates
// divided by scale_n^(1/d_h) (the walk's own dimension, or 7/4 for the
// percolation interface). scale_n = 1 is the identity embedding.
Curve natural_curve(const LatticeWalk& w, long scale_n);
Curve natural_curve(const HexInterface& h, long scale_n);

// CSV with header `step,x,y`: integer sites for walks, planar vertices for
// interfaces.
void write_walk_csv(const std::string& path, const LatticeWalk& w);
void write_interface_csv(const std::string& path, const HexInterface& h);

}  // namespace slefvar
