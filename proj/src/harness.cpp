#include "slefvar/harness.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "slefvar/fvar.hpp"
#include "slefvar/lattice.hpp"

namespace slefvar {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "slefvar 0.1.0";

void require_keys(const json& j, std::initializer_list<const char*> known,
                  const std::string& prefix) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw ConfigError("unknown config field: " + prefix + it.key());
  }
}

template <class T>
T get_req(const json& j, const char* key, const std::string& prefix = "") {
  if (!j.contains(key))
    throw ConfigError("missing required field: " + prefix + key);
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("invalid value for field: " + prefix + key);
  }
}

template <class T>
T get_or(const json& j, const char* key, T def, const std::string& prefix = "") {
  if (!j.contains(key)) return def;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("invalid value for field: " + prefix + key);
  }
}

bool known_model(const std::string& m) {
  return m == "lerw" || m == "saw" || m == "ising" || m == "perc" || m == "sle";
}

long scaled_count(long raw, double scale) {
  return std::max<long>(1, std::llround(static_cast<double>(raw) * scale));
}

void dump_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot open for writing: " + path.string());
  out << j.dump(2) << "\n";
}

// Runs body(0..n-1) with at most `workers` threads pulling indices from a
// shared counter; output arrays indexed by i make the result independent of
// scheduling.
void parallel_for(long n, int workers, const std::function<void(long)>& body) {
  if (n <= 0) return;
  if (workers <= 1 || n == 1) {
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<long> next{0};
  std::mutex err_mutex;
  std::exception_ptr err;
  auto work = [&]() {
    while (true) {
      const long i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!err) err = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int k = static_cast<int>(std::min<long>(workers, n));
  pool.reserve(k);
  for (int w = 0; w < k; ++w) pool.emplace_back(work);
  for (std::thread& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace

SleConfig SleEnsembleConfig::to_sle_config() const {
  SleConfig c;
  c.kappa = kappa;
  c.dx = dx;
  c.stop.kind = (stop_kind == "strip_tip") ? StopRule::Kind::strip_tip
                                           : StopRule::Kind::semicircle;
  c.stop.radius = stop_radius;
  c.stop.dist = stop_dist;
  c.use_laurent = use_laurent;
  c.laurent_order = laurent_order;
  c.laurent_block = laurent_block;
  return c;
}

ExperimentConfig parse_config(const json& jin) {
  const json& j = (jin.is_object() && jin.contains("config") &&
                   jin.at("config").is_object())
                      ? jin.at("config")
                      : jin;
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  require_keys(j,
               {"experiment", "model", "n_steps", "n_samples", "rho", "dt_list",
                "fit_dt_list", "t_cap", "master_seed", "workers", "out_dir",
                "scale", "chains", "thin", "burnin", "ising", "sle"},
               "");
  ExperimentConfig c;
  c.experiment = get_req<std::string>(j, "experiment");
  c.model = get_req<std::string>(j, "model");
  c.n_steps = get_or<long>(j, "n_steps", 0);
  c.n_samples = get_req<long>(j, "n_samples");
  c.rho = get_or<double>(j, "rho", 0.4);
  c.dt_list = get_or<std::vector<double>>(j, "dt_list", {});
  c.fit_dt_list = get_or<std::vector<double>>(j, "fit_dt_list", {});
  c.t_cap = get_or<double>(j, "t_cap", 1.0);
  c.master_seed = get_req<std::uint64_t>(j, "master_seed");
  c.workers = get_or<int>(j, "workers", 1);
  c.out_dir = get_or<std::string>(j, "out_dir", "");
  c.scale = get_or<double>(j, "scale", 1.0);
  c.chains = get_or<long>(j, "chains", 1);
  c.thin = get_or<long>(j, "thin", 0);
  c.burnin = get_or<long>(j, "burnin", -1);
  if (j.contains("ising")) {
    const json& ji = j.at("ising");
    require_keys(ji, {"W", "L"}, "ising.");
    c.ising.W = get_or<double>(ji, "W", c.ising.W, "ising.");
    c.ising.L = get_or<long>(ji, "L", c.ising.L, "ising.");
  }
  if (j.contains("sle")) {
    const json& js = j.at("sle");
    require_keys(js,
                 {"kappa", "dx", "stop_kind", "stop_radius", "stop_dist",
                  "use_laurent", "laurent_order", "laurent_block", "fvar_dt",
                  "n_samples"},
                 "sle.");
    SleEnsembleConfig e;
    e.kappa = get_req<double>(js, "kappa", "sle.");
    e.dx = get_or<double>(js, "dx", e.dx, "sle.");
    e.stop_kind = get_or<std::string>(js, "stop_kind", e.stop_kind, "sle.");
    e.stop_radius = get_or<double>(js, "stop_radius", e.stop_radius, "sle.");
    e.stop_dist = get_or<double>(js, "stop_dist", e.stop_dist, "sle.");
    e.use_laurent = get_or<bool>(js, "use_laurent", e.use_laurent, "sle.");
    e.laurent_order = get_or<int>(js, "laurent_order", e.laurent_order, "sle.");
    e.laurent_block = get_or<int>(js, "laurent_block", e.laurent_block, "sle.");
    e.fvar_dt = get_or<double>(js, "fvar_dt", e.fvar_dt, "sle.");
    e.n_samples = get_or<long>(js, "n_samples", e.n_samples, "sle.");
    c.sle = e;
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse config " + path + ": " + e.what());
  }
  return parse_config(j);
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.experiment != "fvar_study" && cfg.experiment != "midpoint_compare")
    throw ConfigError(
        "invalid field: experiment must be fvar_study or midpoint_compare");
  if (!known_model(cfg.model))
    throw ConfigError(
        "invalid field: model must be one of lerw, saw, ising, perc, sle");
  if (cfg.n_samples < 1)
    throw ConfigError("invalid field: n_samples must be >= 1");
  if (!(cfg.scale > 0.0)) throw ConfigError("invalid field: scale must be > 0");
  if (cfg.workers < 1) throw ConfigError("invalid field: workers must be >= 1");
  if (cfg.chains < 1) throw ConfigError("invalid field: chains must be >= 1");

  if (cfg.model == "lerw" || cfg.model == "saw" || cfg.model == "perc") {
    if (cfg.n_steps < 1)
      throw ConfigError("invalid field: n_steps must be >= 1 for lattice walks");
    if (cfg.model == "saw" && scaled_count(cfg.n_steps, cfg.scale) < 2)
      throw ConfigError("invalid field: n_steps must scale to >= 2 for saw");
  }
  if (cfg.model == "ising") {
    if (!(cfg.ising.W > 0.0))
      throw ConfigError("invalid field: ising.W must be > 0");
    if (cfg.ising.L < 2) throw ConfigError("invalid field: ising.L must be >= 2");
  }
  if (cfg.experiment == "midpoint_compare" && cfg.model != "sle") {
    if (!(cfg.rho > 0.0) || cfg.rho > 1.0)
      throw ConfigError("invalid field: rho must lie in (0, 1]");
  }
  if (cfg.experiment == "fvar_study") {
    if (cfg.dt_list.empty())
      throw ConfigError("invalid field: dt_list must be non-empty");
    for (const double dt : cfg.dt_list)
      if (!(dt > 0.0))
        throw ConfigError("invalid field: dt_list entries must be positive");
    for (const double dt : cfg.fit_dt_list) {
      bool found = false;
      for (const double d : cfg.dt_list) found = found || d == dt;
      if (!found)
        throw ConfigError(
            "invalid field: fit_dt_list entries must appear in dt_list");
    }
    if (!(cfg.t_cap > 0.0)) throw ConfigError("invalid field: t_cap must be > 0");
  }
  if (cfg.model == "sle" && !cfg.sle)
    throw ConfigError("missing required field: sle");
  if (cfg.sle) {
    const SleEnsembleConfig& e = *cfg.sle;
    if (!(e.kappa > 0.0)) throw ConfigError("invalid field: sle.kappa must be > 0");
    if (!(e.dx > 0.0)) throw ConfigError("invalid field: sle.dx must be > 0");
    if (e.stop_kind != "semicircle" && e.stop_kind != "strip_tip")
      throw ConfigError(
          "invalid field: sle.stop_kind must be semicircle or strip_tip");
    if (!(e.stop_radius > 0.0))
      throw ConfigError("invalid field: sle.stop_radius must be > 0");
    if (!(e.stop_dist > 0.0))
      throw ConfigError("invalid field: sle.stop_dist must be > 0");
    if (e.laurent_order < 4)
      throw ConfigError("invalid field: sle.laurent_order must be >= 4");
    if (e.laurent_block < 1)
      throw ConfigError("invalid field: sle.laurent_block must be >= 1");
    if (e.fvar_dt < 0.0)
      throw ConfigError("invalid field: sle.fvar_dt must be >= 0");
    if (e.n_samples < 0)
      throw ConfigError("invalid field: sle.n_samples must be >= 0");
    if (cfg.experiment == "midpoint_compare" && e.stop_kind != "semicircle")
      throw ConfigError(
          "invalid field: sle.stop_kind must be semicircle for midpoint_compare");
  }
}

long effective_samples(const ExperimentConfig& cfg) {
  return scaled_count(cfg.n_samples, cfg.scale);
}

long effective_steps(const ExperimentConfig& cfg) {
  return scaled_count(std::max<long>(1, cfg.n_steps), cfg.scale);
}

IsingGeometry effective_ising(const ExperimentConfig& cfg) {
  IsingGeometry g = cfg.ising;
  if (cfg.scale != 1.0) {
    // The rectangle is the Ising size knob (the walk models' is n_steps), and
    // interface length grows like L^d_h, so a time-scale factor s shrinks the
    // rectangle by s^(1/d_h).
    const double f = std::pow(cfg.scale, 1.0 / model_spec("ising").d_h);
    g.W *= f;
    g.L = std::max<long>(2, std::llround(static_cast<double>(g.L) * f));
  }
  return g;
}

json config_json(const ExperimentConfig& cfg) {
  json j;
  j["experiment"] = cfg.experiment;
  j["model"] = cfg.model;
  j["n_steps"] = cfg.n_steps;
  j["n_samples"] = cfg.n_samples;
  j["rho"] = cfg.rho;
  j["dt_list"] = cfg.dt_list;
  j["fit_dt_list"] = cfg.fit_dt_list;
  j["t_cap"] = cfg.t_cap;
  j["master_seed"] = cfg.master_seed;
  j["scale"] = cfg.scale;
  j["chains"] = cfg.chains;
  j["thin"] = cfg.thin;
  j["burnin"] = cfg.burnin;
  if (cfg.model == "ising")
    j["ising"] = json{{"W", cfg.ising.W}, {"L", cfg.ising.L}};
  if (cfg.sle) {
    const SleEnsembleConfig& e = *cfg.sle;
    j["sle"] = json{{"kappa", e.kappa},
                    {"dx", e.dx},
                    {"stop_kind", e.stop_kind},
                    {"stop_radius", e.stop_radius},
                    {"stop_dist", e.stop_dist},
                    {"use_laurent", e.use_laurent},
                    {"laurent_order", e.laurent_order},
                    {"laurent_block", e.laurent_block},
                    {"fvar_dt", e.fvar_dt},
                    {"n_samples", e.n_samples}};
  }
  return j;
}

namespace {

// Fills defaults that depend on the model so the manifest echoes the values
// actually used and reruns are exact.
ExperimentConfig resolve_defaults(ExperimentConfig cfg) {
  const long steps = effective_steps(cfg);
  if (cfg.model == "saw") {
    if (cfg.thin <= 0) cfg.thin = std::max<long>(1, steps);
    if (cfg.burnin < 0) cfg.burnin = 10 * steps;
  } else if (cfg.model == "ising") {
    if (cfg.thin <= 0) cfg.thin = 10;
    if (cfg.burnin < 0) cfg.burnin = 50 * cfg.thin;
  } else {
    if (cfg.thin <= 0) cfg.thin = 1;
    if (cfg.burnin < 0) cfg.burnin = 0;
  }
  if (cfg.sle) {
    SleEnsembleConfig& e = *cfg.sle;
    if (e.n_samples <= 0) e.n_samples = cfg.n_samples;
    if (e.fvar_dt <= 0.0) {
      // Resolution-matched default: hit radius 4*dx.
      e.fvar_dt = std::pow(4.0 * e.dx, model_spec("sle", e.kappa).d_h);
    }
  }
  return cfg;
}

bool is_mcmc(const std::string& model) {
  return model == "saw" || model == "ising";
}

struct GenPlan {
  long chains = 0;  // 0: independent samples
  long per = 0;
  long total = 0;
};

GenPlan plan_generation(const ExperimentConfig& cfg, long n_eff) {
  GenPlan p;
  if (is_mcmc(cfg.model)) {
    p.chains = std::min<long>(cfg.chains, n_eff);
    p.per = (n_eff + p.chains - 1) / p.chains;
    p.total = p.chains * p.per;
  } else {
    p.total = n_eff;
  }
  return p;
}

json seeds_json(std::uint64_t master, std::uint64_t tag, long n) {
  json a = json::array();
  for (long i = 0; i < n; ++i)
    a.push_back(stream_seed(master, tag, static_cast<std::uint64_t>(i)));
  return a;
}

// Produces `plan.total` step-index curves of the configured lattice model and
// hands each to sink(index, curve). Independent models parallelize over
// samples, MCMC models over chains; either way index i is deterministic.
void generate_lattice_curves(const ExperimentConfig& cfg, const GenPlan& plan,
                             long steps,
                             const std::function<void(long, const Curve&)>& sink) {
  if (cfg.model == "lerw") {
    parallel_for(plan.total, cfg.workers, [&](long i) {
      Rng rng(stream_seed(cfg.master_seed, kTagSample, i));
      sink(i, natural_curve(lerw_sample(steps, rng), 1));
    });
  } else if (cfg.model == "perc") {
    parallel_for(plan.total, cfg.workers, [&](long i) {
      Rng rng(stream_seed(cfg.master_seed, kTagSample, i));
      sink(i, natural_curve(perc_interface(steps, rng, false), 1));
    });
  } else if (cfg.model == "saw") {
    parallel_for(plan.chains, cfg.workers, [&](long c) {
      Rng rng(stream_seed(cfg.master_seed, kTagChain, c));
      long got = 0;
      saw_pivot_run(
          steps, plan.per * cfg.thin, cfg.thin, rng,
          [&](const LatticeWalk& w) {
            if (got >= plan.per) return;
            sink(c * plan.per + got, natural_curve(w, 1));
            ++got;
          },
          cfg.burnin);
    });
  } else if (cfg.model == "ising") {
    const IsingGeometry geo = effective_ising(cfg);
    parallel_for(plan.chains, cfg.workers, [&](long c) {
      Rng rng(stream_seed(cfg.master_seed, kTagChain, c));
      long cols = std::lround(2.0 * geo.W / std::sqrt(3.0));
      if (cols % 2 != 0) ++cols;
      if (cols < 4) cols = 4;
      SpinConfig s = make_ising_rect(static_cast<int>(cols),
                                     static_cast<int>(geo.L) + 1,
                                     kIsingTriangularKc, true, true);
      if (cfg.burnin > 0) ising_wolff_run(s, cfg.burnin, 1, rng, nullptr);
      long got = 0;
      ising_wolff_run(s, plan.per * cfg.thin, cfg.thin, rng,
                      [&](const SpinConfig& sc) {
                        if (got >= plan.per) return;
                        sink(c * plan.per + got, ising_interface(sc));
                        ++got;
                      });
    });
  } else {
    throw std::logic_error("generate_lattice_curves: not a lattice model");
  }
}

void generate_sle_curves(const SleEnsembleConfig& ec, long n,
                         std::uint64_t master, std::uint64_t tag, int workers,
                         const std::function<void(long, const Curve&)>& sink) {
  const SleConfig sc = ec.to_sle_config();
  parallel_for(n, workers, [&](long i) {
    Rng rng(stream_seed(master, tag, i));
    sink(i, sample_sle(sc, rng));
  });
}

double lattice_midpoint_radius(const ExperimentConfig& cfg, long steps) {
  // rho * N^(1/d_H) for walk models; the Ising interface's length varies per
  // sample, so its scale knob is the rectangle height L.
  if (cfg.model == "ising")
    return cfg.rho * static_cast<double>(effective_ising(cfg).L);
  return cfg.rho *
         std::pow(static_cast<double>(steps), 1.0 / model_spec(cfg.model).d_h);
}

// Natural parametrization used by the fractal-variation study: time in units
// of N (or L^d_H for Ising), lengths in units of N^(1/d_H) (or L).
Curve to_natural_study(const ExperimentConfig& cfg, long steps, Curve c) {
  double time_scale, len_scale;
  if (cfg.model == "ising") {
    len_scale = static_cast<double>(effective_ising(cfg).L);
    time_scale = std::pow(len_scale, model_spec("ising").d_h);
  } else {
    time_scale = static_cast<double>(steps);
    len_scale = std::pow(static_cast<double>(steps),
                         1.0 / model_spec(cfg.model).d_h);
  }
  for (double& p : c.params) p /= time_scale;
  for (Point& q : c.points) {
    q.x /= len_scale;
    q.y /= len_scale;
  }
  return c;
}

void write_rows_csv(const fs::path& path,
                    const std::vector<std::optional<MidpointSample>>& rows) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f)
    throw std::runtime_error("cannot open for writing: " + path.string());
  std::fputs("sample_id,x,y,r,theta,T,n_hits\n", f);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i]) continue;
    const MidpointSample& s = *rows[i];
    std::fprintf(f, "%zu,%s,%s,%s,%s,%s,%ld\n", i, format_double(s.x).c_str(),
                 format_double(s.y).c_str(), format_double(s.r).c_str(),
                 format_double(s.theta).c_str(), format_double(s.T).c_str(),
                 s.n_hits);
  }
  std::fclose(f);
}

std::vector<MidpointSample> accepted_of(
    const std::vector<std::optional<MidpointSample>>& rows) {
  std::vector<MidpointSample> out;
  for (const auto& r : rows)
    if (r) out.push_back(*r);
  return out;
}

void run_midpoint(const ExperimentConfig& cfg, json& manifest) {
  const fs::path dir(cfg.out_dir);
  const long n_eff = effective_samples(cfg);
  const long steps = effective_steps(cfg);
  json counts;

  std::vector<std::optional<MidpointSample>> rows;
  if (cfg.model == "sle") {
    const SleEnsembleConfig& e = *cfg.sle;
    const double d_h = model_spec("sle", e.kappa).d_h;
    rows.assign(n_eff, std::nullopt);
    generate_sle_curves(e, n_eff, cfg.master_seed, kTagSample, cfg.workers,
                        [&](long i, const Curve& c) {
                          rows[i] = midpoint_sle(c, e.fvar_dt, d_h, e.stop_radius);
                        });
    manifest["sample_seeds"] = seeds_json(cfg.master_seed, kTagSample, n_eff);
  } else {
    const GenPlan plan = plan_generation(cfg, n_eff);
    const double radius = lattice_midpoint_radius(cfg, steps);
    rows.assign(plan.total, std::nullopt);
    generate_lattice_curves(cfg, plan, steps, [&](long i, const Curve& c) {
      rows[i] = midpoint_lattice(c, radius);
    });
    rows.resize(n_eff);
    if (plan.chains > 0)
      manifest["chain_seeds"] = seeds_json(cfg.master_seed, kTagChain, plan.chains);
    else
      manifest["sample_seeds"] = seeds_json(cfg.master_seed, kTagSample, n_eff);
    counts["radius"] = radius;
  }
  write_rows_csv(dir / "samples.csv", rows);
  const std::vector<MidpointSample> acc = accepted_of(rows);
  counts["requested"] = n_eff;
  counts["accepted"] = acc.size();
  counts["rejected"] = n_eff - static_cast<long>(acc.size());

  if (cfg.model != "sle" && cfg.sle) {
    const SleEnsembleConfig& e = *cfg.sle;
    const double d_h = model_spec("sle", e.kappa).d_h;
    const long n_sle = scaled_count(e.n_samples, cfg.scale);
    std::vector<std::optional<MidpointSample>> srows(n_sle);
    generate_sle_curves(e, n_sle, cfg.master_seed, kTagSle, cfg.workers,
                        [&](long i, const Curve& c) {
                          srows[i] = midpoint_sle(c, e.fvar_dt, d_h, e.stop_radius);
                        });
    write_rows_csv(dir / "samples_sle.csv", srows);
    manifest["sle_sample_seeds"] = seeds_json(cfg.master_seed, kTagSle, n_sle);
    const std::vector<MidpointSample> sacc = accepted_of(srows);
    counts["sle_requested"] = n_sle;
    counts["sle_accepted"] = sacc.size();
    counts["sle_rejected"] = n_sle - static_cast<long>(sacc.size());
    if (acc.empty() || sacc.empty())
      throw std::runtime_error(
          "midpoint_compare: an ensemble produced no accepted samples");
    const json cmp = compare_samples(acc, sacc);
    std::ofstream out(dir / "comparison.json");
    out << cmp.dump(2) << "\n";
  }
  manifest["counts"] = counts;
}

void run_fvar(const ExperimentConfig& cfg, json& manifest) {
  const fs::path dir(cfg.out_dir);
  const long n_eff = effective_samples(cfg);
  const long steps = effective_steps(cfg);
  const ModelSpec ms =
      model_spec(cfg.model, cfg.sle ? cfg.sle->kappa : 0.0);
  const std::size_t nd = cfg.dt_list.size();

  const GenPlan plan = (cfg.model == "sle") ? GenPlan{0, 0, n_eff}
                                            : plan_generation(cfg, n_eff);
  std::vector<std::uint8_t> used(plan.total, 0);
  std::vector<std::vector<long>> ns(plan.total, std::vector<long>(nd, 0));
  std::vector<std::vector<double>> vals(plan.total,
                                        std::vector<double>(nd, 0.0));

  auto process = [&](long i, const Curve& natural) {
    if (natural.param_end() < cfg.t_cap) return;  // skipped, counted below
    const Curve head = truncated(natural, cfg.t_cap);
    for (std::size_t k = 0; k < nd; ++k) {
      const FvarResult fv = fvar_hitting(head, cfg.dt_list[k], ms.d_h);
      ns[i][k] = fv.n;
      vals[i][k] = fv.value;
    }
    used[i] = 1;
  };

  if (cfg.model == "sle") {
    generate_sle_curves(*cfg.sle, n_eff, cfg.master_seed, kTagSample,
                        cfg.workers, process);
    manifest["sample_seeds"] = seeds_json(cfg.master_seed, kTagSample, n_eff);
  } else {
    generate_lattice_curves(cfg, plan, steps, [&](long i, const Curve& c) {
      process(i, to_natural_study(cfg, steps, c));
    });
    if (plan.chains > 0)
      manifest["chain_seeds"] = seeds_json(cfg.master_seed, kTagChain, plan.chains);
    else
      manifest["sample_seeds"] = seeds_json(cfg.master_seed, kTagSample, n_eff);
  }

  // Data file: only the first n_eff sample slots count.
  {
    std::FILE* f = std::fopen((dir / "fvar_study.csv").c_str(), "w");
    if (!f) throw std::runtime_error("cannot open for writing: fvar_study.csv");
    std::fputs("dt,sample_id,n,value\n", f);
    for (std::size_t k = 0; k < nd; ++k)
      for (long i = 0; i < n_eff; ++i) {
        if (!used[i]) continue;
        std::fprintf(f, "%s,%ld,%ld,%s\n", format_double(cfg.dt_list[k]).c_str(),
                     i, ns[i][k], format_double(vals[i][k]).c_str());
      }
    std::fclose(f);
  }

  long n_used = 0;
  for (long i = 0; i < n_eff; ++i) n_used += used[i];
  json per_dt = json::array();
  std::vector<double> variances(nd, 0.0);
  for (std::size_t k = 0; k < nd; ++k) {
    std::vector<double> v;
    v.reserve(n_used);
    for (long i = 0; i < n_eff; ++i)
      if (used[i]) v.push_back(vals[i][k]);
    json e;
    e["dt"] = cfg.dt_list[k];
    e["n_used"] = v.size();
    if (!v.empty()) e["mean"] = mean(v);
    if (v.size() >= 2) {
      variances[k] = variance(v);
      e["variance"] = variances[k];
    }
    per_dt.push_back(e);
  }
  json summary;
  summary["model"] = cfg.model;
  summary["d_h"] = ms.d_h;
  summary["t_cap"] = cfg.t_cap;
  summary["skipped"] = n_eff - n_used;
  summary["per_dt"] = per_dt;
  dump_json(dir / "fvar_summary.json", summary);

  const std::vector<double>& fit_dts =
      cfg.fit_dt_list.empty() ? cfg.dt_list : cfg.fit_dt_list;
  json slope;
  slope["dt_used"] = fit_dts;
  try {
    std::vector<double> fv;
    for (const double dt : fit_dts)
      for (std::size_t k = 0; k < nd; ++k)
        if (cfg.dt_list[k] == dt) fv.push_back(variances[k]);
    const SlopeFit fit = variance_slope(fit_dts, fv);
    slope["slope"] = fit.slope;
    slope["intercept"] = fit.intercept;
  } catch (const std::exception& e) {
    slope["error"] = e.what();
  }
  dump_json(dir / "slope_fit.json", slope);

  manifest["counts"] =
      json{{"requested", n_eff}, {"used", n_used}, {"skipped", n_eff - n_used}};
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& raw) {
  validate_config(raw);
  const ExperimentConfig cfg = resolve_defaults(raw);
  if (cfg.out_dir.empty())
    throw ConfigError("missing required field: out_dir");
  const fs::path dir(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  {
    const fs::path probe = dir / ".write_probe";
    std::ofstream p(probe);
    if (!p)
      throw std::runtime_error("out_dir is not writable: " + cfg.out_dir);
    p.close();
    fs::remove(probe, ec);
  }

  const auto t0 = std::chrono::steady_clock::now();
  json manifest;
  manifest["version"] = kVersion;
  manifest["seed_rule"] = "mix64-stream-v1";
  manifest["rng"] = "mt19937_64";
  manifest["config"] = config_json(cfg);

  if (cfg.experiment == "midpoint_compare")
    run_midpoint(cfg, manifest);
  else
    run_fvar(cfg, manifest);

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  manifest["execution"] = json{{"workers", cfg.workers}, {"wall_seconds", wall}};
  {
    std::ofstream m(dir / "manifest.json");
    if (!m) throw std::runtime_error("cannot write manifest.json");
    m << manifest.dump(2) << "\n";
  }
  return {manifest, cfg.out_dir};
}

json compare_samples(const std::vector<MidpointSample>& a,
                     const std::vector<MidpointSample>& b) {
  static constexpr std::pair<const char*, Coord> kCoords[] = {
      {"X", Coord::X}, {"Y", Coord::Y}, {"R", Coord::R}, {"Theta", Coord::Theta}};
  json out;
  for (const auto& [name, coord] : kCoords) {
    const double d =
        ks_distance(cdf(extract_coord(a, coord)), cdf(extract_coord(b, coord)));
    out[name] = json{{"ks", d}, {"n_a", a.size()}, {"n_b", b.size()}};
  }
  return out;
}

json compare_runs(const std::string& dir_a, const std::string& dir_b) {
  const auto a = read_samples_csv((fs::path(dir_a) / "samples.csv").string());
  const auto b = read_samples_csv((fs::path(dir_b) / "samples.csv").string());
  if (a.empty() || b.empty())
    throw std::runtime_error("compare: a run contains no samples");
  return compare_samples(a, b);
}

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Monte Carlo toolkit: SLE traces, lattice interfaces, and "
               "fractal-variation statistics"};
  app.require_subcommand(1);

  std::string config_path, out_override, run_a, run_b, out_file;
  std::uint64_t seed_override = 0;
  int workers_override = 0;

  CLI::App* cmd_run =
      app.add_subcommand("run", "Run an experiment from a JSON config or manifest");
  CLI::App* cmd_fvar = app.add_subcommand(
      "fvar-study", "Run a config as a fractal-variation study");
  for (CLI::App* sub : {cmd_run, cmd_fvar}) {
    sub->add_option("config", config_path, "JSON config (or manifest) path")
        ->required();
    sub->add_option("--seed", seed_override, "master seed override");
    sub->add_option("--workers", workers_override, "worker thread count");
    sub->add_option("--out", out_override, "output directory override");
  }
  CLI::App* cmd_cmp = app.add_subcommand(
      "compare", "Per-coordinate max-CDF distances between two run directories");
  cmd_cmp->add_option("run_a", run_a, "first run directory")->required();
  cmd_cmp->add_option("run_b", run_b, "second run directory")->required();
  cmd_cmp->add_option("--out", out_file, "also write the comparison JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (cmd_cmp->parsed()) {
      const json cmp = compare_runs(run_a, run_b);
      const std::string text = cmp.dump(2) + "\n";
      if (!out_file.empty()) {
        std::ofstream o(out_file);
        if (!o) throw std::runtime_error("cannot write " + out_file);
        o << text;
      }
      std::fputs(text.c_str(), stdout);
      return 0;
    }
    CLI::App* sub = cmd_run->parsed() ? cmd_run : cmd_fvar;
    ExperimentConfig cfg = load_config(config_path);
    if (cmd_fvar->parsed()) cfg.experiment = "fvar_study";
    if (sub->count("--seed") > 0) cfg.master_seed = seed_override;
    if (sub->count("--workers") > 0) cfg.workers = workers_override;
    if (!out_override.empty()) cfg.out_dir = out_override;
    const RunResult r = run_experiment(cfg);
    std::printf("wrote %s\n", (fs::path(r.out_dir) / "manifest.json").c_str());
    return 0;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace slefvar
