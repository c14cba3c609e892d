#pragma once

#include "ovio/attitude.hpp"
#include "ovio/csv.hpp"
#include "ovio/flow_direction.hpp"
#include "ovio/geometry.hpp"
#include "ovio/observability.hpp"
#include "ovio/riccati.hpp"
#include "ovio/sim.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace ovio {
namespace harness {

/// Deterministic seed mixer (splitmix64); run i of a campaign draws its
/// sensor and init streams from mix(seed, i).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct InitialEstimates {
  Vec3 v_hat_B = Vec3(0.8, -1.5, 0.5);
  Vec3 z = Vec3(1.4, 0.8, -8.81);
  Vec3 r_hat_rotvec = Vec3::Zero();
  Vec3 xi_hat_B = Vec3::Zero();
  Vec3 eta = Vec3::UnitZ();
};

struct TruthInit {
  Vec3 r_rotvec = Vec3::Zero();
  Vec3 xi = Vec3::Zero();
  Vec3 v = Vec3::Zero();  // used by accel profiles only
};

struct RunConfig {
  std::string trajectory = "b";  // "a" or "b"
  double duration = 30.0;
  double truth_dt = 1e-3;
  double sensor_rate = 50.0;
  int n_landmarks = 0;  // 0 = all
  int substeps = 1;
  bool oracle_direction = false;
  bool with_magnetometer = true;
  bool inertial_formulation = false;
  bool with_diagnostics = false;
  double diag_delta = 5.0;
  double diag_dt = 1e-3;
  std::uint64_t seed = 0;
  sim::NoiseSpec noise;
  flow::GdConfig gd;
  riccati::RiccatiConfig ric;
  attitude::AttitudeConfig att;
  InitialEstimates init;
  TruthInit truth_init;

  std::string validate() const {
    if (trajectory != "a" && trajectory != "b") {
      throw std::invalid_argument("RunConfig: trajectory must be 'a' or 'b'");
    }
    if (duration <= 0.0 || truth_dt <= 0.0 || sensor_rate <= 0.0 ||
        substeps < 1 || n_landmarks < 0) {
      throw std::invalid_argument("RunConfig: invalid run geometry field");
    }
    noise.validate();
    gd.validate();
    ric.validate();
    return att.validate();
  }
};

/// Scenario "a" bundle: direction-estimator study. Bearing noise 0.1, flow
/// derivatives clean, gyro exact, kappa 5, N = 20, eta(0) = e3.
inline RunConfig preset_a() {
  RunConfig c;
  c.trajectory = "a";
  c.noise.bearing_std = 0.1;
  c.seed = 1;
  return c;
}

/// Scenario "b" bundle: full cascade Monte Carlo configuration. IMU/mag
/// noise 0.05/0.05/0.2, S = 30 I, D = 5 pi_eta, k_z = 1, k_m = 0.1.
inline RunConfig preset_b() {
  RunConfig c;
  c.trajectory = "b";
  c.noise.gyro_std = 0.05;
  c.noise.accel_std = 0.05;
  c.noise.mag_std = 0.2;
  c.truth_init.v = sim::scenario_b_v0();
  c.seed = 1;
  return c;
}

inline sim::TrajectoryProfile profile_for(const RunConfig& cfg) {
  return cfg.trajectory == "a" ? sim::scenario_a(cfg.duration)
                               : sim::scenario_b(cfg.duration);
}

struct RunResult {
  std::vector<double> t;
  std::vector<std::string> names;           // series names, CSV order
  std::vector<std::vector<double>> series;  // one vector per name
  std::map<std::string, double> summary;
  int skipped_updates = 0;

  std::vector<double>& col(const std::string& name) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return series[i];
    }
    throw std::invalid_argument("RunResult: no column " + name);
  }
  const std::vector<double>& col(const std::string& name) const {
    return const_cast<RunResult*>(this)->col(name);
  }
};

namespace detail {

inline const std::vector<std::string>& run_columns() {
  static const std::vector<std::string> cols = {
      "vB_true_x", "vB_true_y", "vB_true_z", "gB_true_x", "gB_true_y",
      "gB_true_z", "xi_true_x", "xi_true_y", "xi_true_z", "vB_hat_x",
      "vB_hat_y",  "vB_hat_z",  "z_x",       "z_y",       "z_z",
      "xi_hat_x",  "xi_hat_y",  "xi_hat_z",  "err_v",     "err_z",
      "err_att",   "err_gdir",  "err_dir",   "dir_valid"};
  return cols;
}

}  // namespace detail

/// One full simulated run of the cascade. Logs at the sensor rate; row k
/// holds the estimates entering time t_k (after the algebraic direction
/// update at t_k, before the integration to t_{k+1}).
inline RunResult run_single(const RunConfig& cfg) {
  cfg.validate();
  const sim::TrajectoryProfile profile = profile_for(cfg);
  sim::TruthState t0;
  t0.R = exp_so3(cfg.truth_init.r_rotvec);
  t0.xi = cfg.truth_init.xi;
  t0.v = cfg.truth_init.v;
  sim::NoiseSpec noise = cfg.noise;
  noise.seed = cfg.seed;
  sim::Simulator simulator(profile, sim::scenario_landmarks(), noise, t0,
                           cfg.truth_dt);

  attitude::AttitudeConfig att = cfg.att;
  if (!cfg.with_magnetometer) att.k_m = 0.0;

  attitude::BodyCascadeState body;
  attitude::InertialCascadeState inertial;
  body.R_hat = exp_so3(cfg.init.r_hat_rotvec);
  body.vg.v_hat_B = cfg.init.v_hat_B;
  body.vg.z = cfg.init.z;
  body.xi_hat_B = cfg.init.xi_hat_B;
  inertial.R_hat = body.R_hat;
  inertial.v_hat = body.R_hat * body.vg.v_hat_B;
  inertial.z_I = body.R_hat * body.vg.z;
  inertial.xi_hat = body.R_hat * body.xi_hat_B;
  Mat6 P = cfg.ric.P0;

  UnitVec3 eta_prev(cfg.init.eta);
  const double dt = 1.0 / cfg.sensor_rate;
  const int n_frames = static_cast<int>(std::llround(cfg.duration * cfg.sensor_rate));

  RunResult rr;
  rr.names = detail::run_columns();
  rr.series.assign(rr.names.size(), {});
  double max_ortho = 0.0;
  double max_eta_norm = 0.0;

  for (int k = 0; k <= n_frames; ++k) {
    simulator.advance_to(k * dt);
    sim::SensorFrame frame =
        simulator.sample_frame(static_cast<std::size_t>(cfg.n_landmarks));

    const Vec3 vB = simulator.true_v_body();
    const Vec3 gB = simulator.true_g_body();

    std::optional<UnitVec3> eta;
    bool dir_valid = false;
    if (cfg.oracle_direction) {
      if (vB.norm() >= cfg.ric.min_speed) {
        eta = UnitVec3(vB);
        eta_prev = *eta;
        dir_valid = true;
      }
    } else {
      std::vector<flow::FlowSample> samples;
      samples.reserve(frame.flows.size());
      for (const flow::FlowSample& f : frame.flows) {
        samples.push_back(flow::translational_flow(f.b, f.bdot, frame.omega_m,
                                                   cfg.gd.flow_min));
      }
      try {
        const flow::DirectionEstimate est =
            flow::estimate_direction(eta_prev, samples, cfg.gd);
        eta_prev = est.eta;
        eta = est.eta;
        dir_valid = true;
      } catch (const NoValidSamples&) {
        // all flows degenerate; hold the last estimate, skip the update
      }
    }
    if (!dir_valid) ++rr.skipped_updates;

    const Rotation& r_hat =
        cfg.inertial_formulation ? inertial.R_hat : body.R_hat;
    const Vec3 vB_hat = cfg.inertial_formulation
                            ? Vec3(inertial.R_hat.transposed() * inertial.v_hat)
                            : body.vg.v_hat_B;
    const Vec3 z_hat = cfg.inertial_formulation
                           ? Vec3(inertial.R_hat.transposed() * inertial.z_I)
                           : body.vg.z;
    const Vec3 xi_hat = cfg.inertial_formulation
                            ? inertial.xi_hat
                            : Vec3(body.R_hat * body.xi_hat_B);

    rr.t.push_back(k * dt);
    const Vec3 xi_true = simulator.truth().xi;
    const double err_dir = 1.0 - eta_prev.vec().dot(vB.normalized());
    const double row[] = {vB.x(),
                          vB.y(),
                          vB.z(),
                          gB.x(),
                          gB.y(),
                          gB.z(),
                          xi_true.x(),
                          xi_true.y(),
                          xi_true.z(),
                          vB_hat.x(),
                          vB_hat.y(),
                          vB_hat.z(),
                          z_hat.x(),
                          z_hat.y(),
                          z_hat.z(),
                          xi_hat.x(),
                          xi_hat.y(),
                          xi_hat.z(),
                          (vB - vB_hat).norm(),
                          (gB - z_hat).norm(),
                          attitude_error(r_hat, simulator.truth().R),
                          reduced_attitude_error(r_hat, gB,
                                                 simulator.gravity_vec()),
                          cfg.oracle_direction && dir_valid ? 0.0 : err_dir,
                          dir_valid ? 1.0 : 0.0};
    for (std::size_t c = 0; c < rr.series.size(); ++c) {
      rr.series[c].push_back(row[c]);
    }
    max_ortho = std::max({max_ortho, r_hat.orthogonality_error(),
                          simulator.truth().R.orthogonality_error()});
    max_eta_norm = std::max(max_eta_norm,
                            std::abs(eta_prev.vec().norm() - 1.0));

    if (k == n_frames) break;

    attitude::CascadeInputs in;
    in.omega_m = frame.omega_m;
    in.accel_m = frame.accel_m;
    in.mag_m = frame.mag_m;
    in.eta_v = eta;
    if (cfg.inertial_formulation) {
      inertial = attitude::inertial_cascade_step(inertial, in, P, cfg.ric, att,
                                                 dt, cfg.substeps);
    } else {
      body = attitude::body_cascade_step(body, in, P, cfg.ric, att, dt,
                                         cfg.substeps);
    }
    Mat6 A;
    Mat36 C = Mat36::Zero();
    if (eta) {
      std::tie(A, C) = riccati::state_matrices(frame.omega_m, *eta);
    } else {
      A = riccati::state_matrices(frame.omega_m, UnitVec3(Vec3::UnitZ())).first;
    }
    P = riccati::cre_step(P, A, C, cfg.ric, dt);
  }

  rr.summary["max_orthogonality_error"] = max_ortho;
  rr.summary["max_eta_norm_error"] = max_eta_norm;
  rr.summary["skipped_updates"] = rr.skipped_updates;

  if (cfg.with_diagnostics) {
    const double delta = std::min(cfg.diag_delta, cfg.duration);
    try {
      obs::TrajectorySignals sig(profile, t0, 0.0, delta, cfg.diag_dt);
      const obs::GramianReport rep = obs::gramian(sig, delta, cfg.diag_dt);
      rr.summary["gramian_min_eig"] = rep.min_eig;
      rr.summary["pe_metric"] = rep.mu_bar;
      rr.summary["gramian_factorization_gap"] =
          obs::gramian_factorization_check(sig, delta, cfg.diag_dt);
    } catch (const std::invalid_argument&) {
      rr.summary["pe_metric"] = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return rr;
}

/// Gaussian sampling spec for Monte Carlo initial estimates.
struct InitSampling {
  Vec3 v_mean = Vec3(0.8, -1.5, 0.5);
  double v_std = 3.0;
  Vec3 z_mean = Vec3(1.4, 0.8, -8.81);
  double z_std = 1.5;
  double r_std_deg = 15.0;
};

struct MonteCarloSummary {
  std::vector<double> t;
  std::vector<std::string> metrics;  // metric base names
  // bands[m][0] = p5, [1] = p50, [2] = p95 for metrics[m]
  std::vector<std::array<std::vector<double>, 3>> bands;
  int n_runs = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> failures;  // "run <i>: <what>"
};

/// Linear-interpolated percentile of an unsorted sample (copies it).
inline double percentile(std::vector<double> xs, double p) {
  if (xs.empty()) throw std::invalid_argument("percentile: empty sample");
  std::sort(xs.begin(), xs.end());
  const double idx = (p / 100.0) * static_cast<double>(xs.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(idx);
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  const double frac = idx - static_cast<double>(lo);
  return (1.0 - frac) * xs[lo] + frac * xs[hi];
}

/// Runs n_runs independent seeded runs with Gaussian-sampled initial
/// estimates and aggregates 5/50/95 percentile bands per metric. Runs
/// execute in a worker pool; aggregation is ordered by run index, so the
/// summary is a pure function of (cfg, n_runs, sampling).
inline MonteCarloSummary run_monte_carlo(const RunConfig& cfg, int n_runs,
                                         const InitSampling& sampling = {}) {
  if (n_runs < 1) throw std::invalid_argument("run_monte_carlo: n_runs < 1");
  cfg.validate();
  const std::vector<std::string> metrics = {"err_v", "err_z", "err_att",
                                            "err_gdir", "err_dir"};

  std::vector<RunConfig> run_cfgs(n_runs, cfg);
  std::vector<std::uint64_t> seeds(n_runs);
  for (int i = 0; i < n_runs; ++i) {
    seeds[i] = mix_seed(cfg.seed, static_cast<std::uint64_t>(i));
    std::mt19937_64 rng(mix_seed(seeds[i], 0xA11CE5EEDULL));
    std::normal_distribution<double> n01(0.0, 1.0);
    auto draw3 = [&]() {
      const double x = n01(rng);
      const double y = n01(rng);
      const double z = n01(rng);
      return Vec3(x, y, z);
    };
    RunConfig& rc = run_cfgs[i];
    rc.seed = seeds[i];
    rc.with_diagnostics = false;
    rc.init.v_hat_B = sampling.v_mean + sampling.v_std * draw3();
    rc.init.z = sampling.z_mean + sampling.z_std * draw3();
    rc.init.r_hat_rotvec = (sampling.r_std_deg * M_PI / 180.0) * draw3();
  }

  std::vector<std::optional<RunResult>> results(n_runs);
  std::vector<std::string> errors(n_runs);
  const unsigned workers =
      std::max(1u, std::min(std::thread::hardware_concurrency(),
                            static_cast<unsigned>(n_runs)));
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n_runs) return;
      try {
        results[i] = run_single(run_cfgs[i]);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (std::thread& th : pool) th.join();

  MonteCarloSummary out;
  out.n_runs = n_runs;
  out.seeds = seeds;
  out.metrics = metrics;
  for (int i = 0; i < n_runs; ++i) {
    if (!results[i]) {
      out.failures.push_back("run " + std::to_string(i) + ": " + errors[i]);
    }
  }
  const RunResult* first = nullptr;
  for (const auto& r : results) {
    if (r) {
      first = &*r;
      break;
    }
  }
  if (!first) throw std::runtime_error("run_monte_carlo: every run failed");
  out.t = first->t;
  out.bands.resize(metrics.size());
  for (std::size_t m = 0; m < metrics.size(); ++m) {
    for (auto& band : out.bands[m]) band.resize(out.t.size());
  }
  std::vector<double> sample;
  for (std::size_t k = 0; k < out.t.size(); ++k) {
    for (std::size_t m = 0; m < metrics.size(); ++m) {
      sample.clear();
      for (const auto& r : results) {
        if (r) sample.push_back(r->col(metrics[m])[k]);
      }
      out.bands[m][0][k] = percentile(sample, 5.0);
      out.bands[m][1][k] = percentile(sample, 50.0);
      out.bands[m][2][k] = percentile(sample, 95.0);
    }
  }
  return out;
}

inline csv::Table to_table(const RunResult& rr) {
  csv::Table t;
  t.names.push_back("t");
  t.cols.push_back(rr.t);
  for (std::size_t i = 0; i < rr.names.size(); ++i) {
    t.names.push_back(rr.names[i]);
    t.cols.push_back(rr.series[i]);
  }
  return t;
}

inline csv::Table to_table(const MonteCarloSummary& mc) {
  csv::Table t;
  t.names.push_back("t");
  t.cols.push_back(mc.t);
  static const char* suffix[3] = {"_p5", "_p50", "_p95"};
  for (std::size_t m = 0; m < mc.metrics.size(); ++m) {
    for (int b = 0; b < 3; ++b) {
      t.names.push_back(mc.metrics[m] + suffix[b]);
      t.cols.push_back(mc.bands[m][b]);
    }
  }
  return t;
}

inline void export_csv(const RunResult& rr, const std::string& path) {
  csv::write_table(path, to_table(rr));
}

inline void export_csv(const MonteCarloSummary& mc, const std::string& path) {
  csv::write_table(path, to_table(mc));
}

}  // namespace harness
}  // namespace ovio
