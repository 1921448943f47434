#pragma once
// Experiment orchestration: JSON configs, deterministic per-sample seeding,
// a worker pool whose output is independent of the worker count, CSV/JSON
// persistence, and the command-line entry point.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "slefvar/loewner.hpp"
#include "slefvar/stats.hpp"

namespace slefvar {

// Thrown for malformed configs; the message names the offending field.
// The CLI maps it to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SleEnsembleConfig {
  double kappa = 0.0;
  double dx = 0.01;
  std::string stop_kind = "semicircle";  // or "strip_tip"
  double stop_radius = 1.0;
  double stop_dist = 0.1;
  bool use_laurent = true;
  int laurent_order = 20;
  int laurent_block = 16;
  double fvar_dt = 0.0;   // 0: default (4*dx)^d_h, resolution-matched
  long n_samples = 0;     // 0: inherit the experiment's n_samples

  SleConfig to_sle_config() const;
};

struct IsingGeometry {
  double W = 64.0;  // planar width; columns every sqrt(3)/2
  long L = 64;      // rows 0..L
};

struct ExperimentConfig {
  std::string experiment;  // "fvar_study" or "midpoint_compare"
  std::string model;       // lerw | saw | ising | perc | sle
  long n_steps = 0;
  long n_samples = 0;
  double rho = 0.4;
  std::vector<double> dt_list;      // fvar_study scales
  std::vector<double> fit_dt_list;  // slope-fit subset; empty: use dt_list
  double t_cap = 1.0;
  std::uint64_t master_seed = 1;
  int workers = 1;
  std::string out_dir;
  double scale = 1.0;  // multiplies n_samples and n_steps (desk-scale knob)
  long chains = 1;     // MCMC models: independent chains
  long thin = 0;       // MCMC observation spacing; 0: per-model default
  long burnin = -1;    // saw: accepted pivots; ising: iterations; -1: default
  IsingGeometry ising;
  std::optional<SleEnsembleConfig> sle;  // required when model == "sle";
                                         // optional second ensemble otherwise
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);  // config or manifest
void validate_config(const ExperimentConfig& cfg);
nlohmann::json config_json(const ExperimentConfig& cfg);  // canonical echo

// Effective (scale-applied) sizes.
long effective_samples(const ExperimentConfig& cfg);
long effective_steps(const ExperimentConfig& cfg);
// Rectangle actually simulated: `scale` shrinks/grows the Ising geometry by
// scale^(1/d_h), mirroring what it does to the walk models' step counts.
IsingGeometry effective_ising(const ExperimentConfig& cfg);

struct RunResult {
  nlohmann::json manifest;
  std::string out_dir;
};

// Runs the configured experiment and writes, under out_dir:
//   manifest.json                       always
//   samples.csv                         midpoint_compare (primary ensemble)
//   samples_sle.csv, comparison.json    midpoint_compare with a second
//                                       (SLE) ensemble configured
//   fvar_study.csv, fvar_summary.json,
//   slope_fit.json                      fvar_study
// Data files depend only on (config, master_seed), never on `workers`.
RunResult run_experiment(const ExperimentConfig& cfg);

// Per-coordinate max-CDF-distance between the samples.csv of two run
// directories: {"X": {"ks", "n_a", "n_b"}, "Y": ..., "R": ..., "Theta": ...}.
nlohmann::json compare_runs(const std::string& dir_a, const std::string& dir_b);
nlohmann::json compare_samples(const std::vector<MidpointSample>& a,
                               const std::vector<MidpointSample>& b);

// `slefvar run|compare|fvar-study ...`; returns the process exit code
// (0 success, 2 config validation failure, 1 other errors).
int cli_main(int argc, const char* const* argv);

}  // namespace slefvar
