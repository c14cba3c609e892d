#pragma once

#include "ovio/flow_direction.hpp"
#include "ovio/geometry.hpp"
#include "ovio/integrate.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

namespace ovio {
namespace sim {

/// Gravity vector in the inertial frame (z-up): g = -9.81 e3.
inline Vec3 gravity(double g = 9.81) { return Vec3(0.0, 0.0, -g); }

struct TruthState {
  Rotation R;
  Vec3 xi = Vec3::Zero();  // position, inertial (m)
  Vec3 v = Vec3::Zero();   // velocity, inertial (m/s)
  double t = 0.0;
};

/// Analytic motion profile. Either a kinematic body-velocity profile
/// (v_body, v_body_dot prescribed) or an acceleration profile driven by an
/// inertial specific-force function, a(t, R) = Rᵀ f_I(t).
class TrajectoryProfile {
 public:
  enum class Kind { BodyVelocity, Accel };

  static TrajectoryProfile body_velocity(std::function<Vec3(double)> omega,
                                         std::function<Vec3(double)> v_body,
                                         std::function<Vec3(double)> v_body_dot,
                                         double duration) {
    TrajectoryProfile p;
    p.kind_ = Kind::BodyVelocity;
    p.omega_ = std::move(omega);
    p.v_body_ = std::move(v_body);
    p.v_body_dot_ = std::move(v_body_dot);
    p.duration_ = duration;
    return p;
  }

  static TrajectoryProfile accel(std::function<Vec3(double)> omega,
                                 std::function<Vec3(double)> specific_force_inertial,
                                 double duration) {
    TrajectoryProfile p;
    p.kind_ = Kind::Accel;
    p.omega_ = std::move(omega);
    p.f_inertial_ = std::move(specific_force_inertial);
    p.duration_ = duration;
    return p;
  }

  Kind kind() const { return kind_; }
  double duration() const { return duration_; }
  Vec3 omega(double t) const { return omega_(t); }
  Vec3 v_body(double t) const { return v_body_(t); }
  Vec3 v_body_dot(double t) const { return v_body_dot_(t); }
  Vec3 specific_force_inertial(double t) const { return f_inertial_(t); }

  /// Specific acceleration read by an ideal accelerometer at (t, R).
  Vec3 body_accel(double t, const Rotation& R, const Vec3& g) const {
    if (kind_ == Kind::Accel) {
      return R.transposed() * f_inertial_(t);
    }
    // d/dt(v^B) = -w x v^B + a + R'g  =>  a = v_dot^B + w x v^B - R'g
    return v_body_dot_(t) + omega_(t).cross(v_body_(t)) - R.transposed() * g;
  }

 private:
  Kind kind_ = Kind::BodyVelocity;
  std::function<Vec3(double)> omega_;
  std::function<Vec3(double)> v_body_;
  std::function<Vec3(double)> v_body_dot_;
  std::function<Vec3(double)> f_inertial_;
  double duration_ = 30.0;
};

/// Scenario "a": kinematic profile with the slow quasi-periodic body
/// velocity and gyro signals used by the direction-estimator study.
inline TrajectoryProfile scenario_a(double duration = 30.0) {
  return TrajectoryProfile::body_velocity(
      [](double t) {
        return Vec3(0.1 * std::cos(0.1 * t), 0.05 * std::sin(0.15 * t),
                    0.05 * std::sin(0.1 * t));
      },
      [](double t) {
        return Vec3(0.4 * std::cos(0.2 * t), -0.4 * std::sin(0.4 * t),
                    -0.5 * std::sin(t));
      },
      [](double t) {
        return Vec3(-0.08 * std::sin(0.2 * t), -0.16 * std::cos(0.4 * t),
                    -0.5 * std::cos(t));
      },
      duration);
}

/// Scenario "b": acceleration profile with strong oscillating specific
/// force; exercises the full observer cascade.
inline TrajectoryProfile scenario_b(double duration = 30.0) {
  return TrajectoryProfile::accel(
      [](double t) {
        return Vec3(0.15 * std::sin(0.8 * t + M_PI), 0.1 * std::sin(t),
                    0.05 * std::sin(0.1 * t + M_PI / 3.0));
      },
      [](double t) {
        return Vec3(-5.0 * std::cos(3.0 * t), -5.0 * std::sin(4.0 * t),
                    9.81 + 5.0 * std::sin(4.0 * t));
      },
      duration);
}

/// Zero-mean-velocity initial condition that keeps the scenario-b vehicle
/// within ~0.6 m of the origin; any other v(0) drifts linearly.
inline Vec3 scenario_b_v0() { return Vec3(0.0, 1.25, -1.25); }

/// Straight-line constant-velocity profile; persistent excitation fails on
/// it by construction.
inline TrajectoryProfile constant_velocity(const Vec3& v_body,
                                           double duration = 30.0) {
  return TrajectoryProfile::body_velocity(
      [](double) { return Vec3::Zero(); }, [v_body](double) { return v_body; },
      [](double) { return Vec3::Zero(); }, duration);
}

/// Hover: zero angular rate, velocity held constant by a = -R'g.
inline TrajectoryProfile hover(double duration = 30.0) {
  return constant_velocity(Vec3::Zero(), duration);
}

struct LandmarkSet {
  std::vector<Vec3> points;
};

/// The eight inertial landmarks shared by both scenarios.
inline LandmarkSet scenario_landmarks() {
  return LandmarkSet{{Vec3(1, 0, 0), Vec3(-1, 0, 0), Vec3(0, 2, 0),
                      Vec3(0, -2, 0), Vec3(1, 1, -0.5), Vec3(-1, 1, -0.5),
                      Vec3(2, 1, 1), Vec3(0, -2, -1)}};
}

struct NoiseSpec {
  double bearing_std = 0.0;
  double flow_std = 0.0;
  double gyro_std = 0.0;
  double accel_std = 0.0;
  double mag_std = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (bearing_std < 0 || flow_std < 0 || gyro_std < 0 || accel_std < 0 ||
        mag_std < 0) {
      throw std::invalid_argument("NoiseSpec: negative standard deviation");
    }
  }
};

struct SensorFrame {
  double t = 0.0;
  Vec3 omega_m = Vec3::Zero();
  Vec3 accel_m = Vec3::Zero();
  UnitVec3 mag_m;
  std::vector<flow::FlowSample> flows;  // b, bdot filled; s derived later
};

/// One RK4 step of the truth kinematics. The attitude advances by the
/// midpoint exponential at every stage, so R never leaves SO(3). For
/// body-velocity profiles v is set to R v^B(t) exactly and only xi is
/// integrated.
inline TruthState propagate_truth(const TruthState& state,
                                  const TrajectoryProfile& profile, double dt,
                                  const Vec3& g = gravity()) {
  if (dt <= 0.0) throw std::invalid_argument("propagate_truth: dt must be > 0");
  const double t = state.t;
  auto omega = [&](double tau) { return profile.omega(tau); };
  const Rotation r_half = rotation_increment(state.R, omega, t, 0.5 * dt);
  const Rotation r_full = rotation_increment(state.R, omega, t, dt);

  TruthState out = state;
  out.t = t + dt;
  out.R = r_full;

  if (profile.kind() == TrajectoryProfile::Kind::BodyVelocity) {
    const Vec3 k1 = state.R * profile.v_body(t);
    const Vec3 k2 = r_half * profile.v_body(t + 0.5 * dt);
    const Vec3 k4 = r_full * profile.v_body(t + dt);
    out.xi = state.xi + (dt / 6.0) * (k1 + 4.0 * k2 + k4);
    out.v = r_full * profile.v_body(t + dt);
    return out;
  }

  // Accel profile: v' = f_I(t) + g (R cancels against R'), xi' = v.
  auto f = [&](double tau) { return profile.specific_force_inertial(tau) + g; };
  const Vec3 a1 = f(t), a2 = f(t + 0.5 * dt), a4 = f(t + dt);
  const Vec3 k1x = state.v;
  const Vec3 k2x = state.v + 0.5 * dt * a1;
  const Vec3 k3x = state.v + 0.5 * dt * a2;
  const Vec3 k4x = state.v + dt * a2;
  out.v = state.v + (dt / 6.0) * (a1 + 4.0 * a2 + a4);
  out.xi = state.xi + (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
  return out;
}

/// Noise-free bearing of one landmark; false when inside min_range.
inline bool bearing_of(const TruthState& state, const Vec3& landmark,
                       UnitVec3& b, double& range, double min_range = 1e-3) {
  const Vec3 yB = state.R.transposed() * (landmark - state.xi);
  range = yB.norm();
  if (range < min_range) return false;
  b = UnitVec3(yB);
  return true;
}

/// Analytic spherical flow (1/|Y|) pi_b v^B - w x b.
inline Vec3 flow_of(const UnitVec3& b, double range, const Vec3& v_body,
                    const Vec3& omega) {
  const Vec3 pv = v_body - b.vec() * b.vec().dot(v_body);
  return pv / range - omega.cross(b.vec());
}

/// Ground-truth propagation plus noisy sensor synthesis. One instance per
/// thread; the RNG stream is owned by the instance and fully determined by
/// NoiseSpec::seed.
class Simulator {
 public:
  Simulator(TrajectoryProfile profile, LandmarkSet landmarks, NoiseSpec noise,
            TruthState initial = {}, double truth_dt = 1e-3,
            double g_mag = 9.81,
            UnitVec3 m_ref = UnitVec3(Vec3(0.0, 1.0, 1.0)))
      : profile_(std::move(profile)),
        landmarks_(std::move(landmarks)),
        noise_(noise),
        state_(initial),
        truth_dt_(truth_dt),
        gravity_(gravity(g_mag)),
        m_ref_(m_ref),
        rng_(noise.seed) {
    noise_.validate();
    if (landmarks_.points.empty()) {
      throw std::invalid_argument("Simulator: empty landmark set");
    }
    if (profile_.kind() == TrajectoryProfile::Kind::BodyVelocity) {
      state_.v = state_.R * profile_.v_body(state_.t);
    }
  }

  const TruthState& truth() const { return state_; }
  const Vec3& gravity_vec() const { return gravity_; }
  const UnitVec3& mag_reference() const { return m_ref_; }
  const LandmarkSet& landmarks() const { return landmarks_; }
  const TrajectoryProfile& profile() const { return profile_; }
  double min_range() const { return min_range_; }

  Vec3 true_v_body() const { return state_.R.transposed() * state_.v; }
  Vec3 true_g_body() const { return state_.R.transposed() * gravity_; }
  Vec3 true_omega() const { return profile_.omega(state_.t); }
  Vec3 true_accel() const {
    return profile_.body_accel(state_.t, state_.R, gravity_);
  }

  /// Advances truth to time t with fixed truth_dt substeps.
  void advance_to(double t) {
    while (state_.t + 0.5 * truth_dt_ < t) {
      const double dt = std::min(truth_dt_, t - state_.t);
      state_ = propagate_truth(state_, profile_, dt, gravity_);
    }
    state_.t = t;
  }

  std::pair<Vec3, Vec3> observe_imu() {
    Vec3 w = true_omega();
    Vec3 a = true_accel();
    if (noise_.gyro_std > 0.0) w += noise_.gyro_std * normal3();
    if (noise_.accel_std > 0.0) a += noise_.accel_std * normal3();
    return {w, a};
  }

  UnitVec3 observe_mag() {
    Vec3 m = state_.R.transposed() * m_ref_.vec();
    if (noise_.mag_std > 0.0) m += noise_.mag_std * normal3();
    return UnitVec3(m);
  }

  /// Unit bearings of landmarks outside min_range, body frame.
  std::vector<UnitVec3> observe_bearings() {
    std::vector<UnitVec3> out;
    out.reserve(landmarks_.points.size());
    for (const Vec3& lm : landmarks_.points) {
      UnitVec3 b;
      double range;
      if (!bearing_of(state_, lm, b, range, min_range_)) continue;
      if (noise_.bearing_std > 0.0) {
        b = UnitVec3(b.vec() + noise_.bearing_std * normal3());
      }
      out.push_back(b);
    }
    return out;
  }

  /// Bearing/flow pairs: the analytic flow of the true geometry, then the
  /// bearing and (optionally) the flow perturbed independently.
  std::vector<flow::FlowSample> observe_flow(std::size_t max_landmarks = 0) {
    const Vec3 vB = true_v_body();
    const Vec3 w = true_omega();
    const std::size_t n = max_landmarks == 0
                              ? landmarks_.points.size()
                              : std::min(max_landmarks, landmarks_.points.size());
    std::vector<flow::FlowSample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      UnitVec3 b;
      double range;
      if (!bearing_of(state_, landmarks_.points[i], b, range, min_range_)) {
        continue;
      }
      flow::FlowSample f;
      f.bdot = flow_of(b, range, vB, w);
      if (noise_.bearing_std > 0.0) {
        b = UnitVec3(b.vec() + noise_.bearing_std * normal3());
      }
      if (noise_.flow_std > 0.0) f.bdot += noise_.flow_std * normal3();
      f.b = b;
      f.valid = true;
      out.push_back(f);
    }
    return out;
  }

  /// Full sensor frame at the current truth time. Draw order per frame:
  /// gyro, accel, mag, then per-landmark bearing/flow.
  SensorFrame sample_frame(std::size_t max_landmarks = 0) {
    SensorFrame fr;
    fr.t = state_.t;
    auto [w, a] = observe_imu();
    fr.omega_m = w;
    fr.accel_m = a;
    fr.mag_m = observe_mag();
    fr.flows = observe_flow(max_landmarks);
    return fr;
  }

 private:
  Vec3 normal3() {
    const double x = normal_(rng_);
    const double y = normal_(rng_);
    const double z = normal_(rng_);
    return Vec3(x, y, z);
  }

  TrajectoryProfile profile_;
  LandmarkSet landmarks_;
  NoiseSpec noise_;
  TruthState state_;
  double truth_dt_;
  Vec3 gravity_;
  UnitVec3 m_ref_;
  double min_range_ = 1e-3;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace sim
}  // namespace ovio
