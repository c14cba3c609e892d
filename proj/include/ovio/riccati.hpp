#pragma once

#include "ovio/geometry.hpp"
#include "ovio/integrate.hpp"

#include <optional>
#include <stdexcept>

namespace ovio {
namespace riccati {

/// Stage-1 state: body-frame velocity estimate and the gravity surrogate z.
struct VelGravState {
  Vec3 v_hat_B = Vec3::Zero();
  Vec3 z = Vec3::Zero();
};

/// Output gain shape D = d0 * pi_eta + d1 * I. d0 = 5, d1 = 0 reproduces the
/// reference configuration; d1 > 0 regularizes the rank-2 projector.
struct DSpec {
  double d0 = 5.0;
  double d1 = 0.0;
};

struct RiccatiConfig {
  Mat6 S = 30.0 * Mat6::Identity();
  DSpec D_spec;
  Mat6 P0 = Mat6::Identity();
  double spd_floor = 1e-9;
  bool cre_rk4 = false;     // default is Euler with symmetrization
  bool state_rk4 = true;    // Euler fallback for the state integration
  double min_speed = 1e-3;  // |v^B| below this skips the measurement update

  void validate() const {
    if (spd_floor <= 0.0 || D_spec.d0 < 0.0 || D_spec.d1 < 0.0 ||
        min_speed < 0.0) {
      throw std::invalid_argument("RiccatiConfig: invalid field");
    }
    if ((S - S.transpose()).norm() > 1e-9 || (P0 - P0.transpose()).norm() > 1e-9) {
      throw std::invalid_argument("RiccatiConfig: S and P0 must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat6> es;
    es.compute(S, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= 0.0) {
      throw std::invalid_argument("RiccatiConfig: S must be positive definite");
    }
    es.compute(P0, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= 0.0) {
      throw std::invalid_argument("RiccatiConfig: P0 must be positive definite");
    }
  }
};

/// Observer output y = -pi_eta v̂^B; equals pi_eta (v^B - v̂^B) when eta is
/// the true direction, since pi_eta v^B = 0.
inline Vec3 output_y(const Vec3& v_hat_B, const UnitVec3& eta_v) {
  return -(v_hat_B - eta_v.vec() * eta_v.vec().dot(v_hat_B));
}

/// LTV pair A = [-w^x I; 0 -w^x], C = [pi_eta 0].
inline std::pair<Mat6, Mat36> state_matrices(const Vec3& omega_m,
                                             const UnitVec3& eta_v) {
  Mat6 A = Mat6::Zero();
  const Mat3 wx = skew(omega_m);
  A.topLeftCorner<3, 3>() = -wx;
  A.topRightCorner<3, 3>() = Mat3::Identity();
  A.bottomRightCorner<3, 3>() = -wx;
  Mat36 C = Mat36::Zero();
  C.leftCols<3>() = proj(eta_v);
  return {A, C};
}

inline Mat3 build_D(const UnitVec3& eta_v, const RiccatiConfig& cfg) {
  return cfg.D_spec.d0 * proj(eta_v) + cfg.D_spec.d1 * Mat3::Identity();
}

/// K = P Cᵀ D, rows [K_v; K_g].
inline Mat63 gain_K(const Mat6& P, const Mat36& C, const Mat3& D) {
  return P * C.transpose() * D;
}

/// One step of the continuous Riccati equation
///   P' = AP + PAᵀ - PCᵀDCP + S,
/// followed by symmetrization and an eigenvalue floor. D is rebuilt from
/// C's projector block per cfg.D_spec, which keeps it consistent with the
/// C actually in use (C = 0 disables the quadratic term entirely).
inline Mat6 cre_step(const Mat6& P, const Mat6& A, const Mat36& C,
                     const RiccatiConfig& cfg, double dt) {
  if (dt <= 0.0) throw std::invalid_argument("cre_step: dt must be > 0");
  const Mat3 D =
      cfg.D_spec.d0 * C.leftCols<3>() + cfg.D_spec.d1 * Mat3::Identity();
  auto pdot = [&](const Mat6& p) -> Mat6 {
    return A * p + p * A.transpose() - p * C.transpose() * D * C * p + cfg.S;
  };
  Mat6 next;
  if (cfg.cre_rk4) {
    next = rk4_step(P, pdot, dt);
  } else {
    next = P + dt * pdot(P);
  }
  next = 0.5 * (next + next.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Mat6> es(next);
  if (es.eigenvalues().minCoeff() < cfg.spd_floor) {
    const Vec6 ev = es.eigenvalues().cwiseMax(cfg.spd_floor);
    next = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    next = 0.5 * (next + next.transpose()).eval();
  }
  return next;
}

/// Observer + Riccati state advanced together.
struct ObserverState {
  VelGravState x;
  Mat6 P = Mat6::Identity();
};

/// One measurement-interval update of the stage-1 observer:
///   v̂' = -w x v̂ + a + z + K_v y,   z' = -w x z + K_g y,
/// with K frozen over the step, y recomputed per integration stage, and the
/// CRE advanced with the same dt. Passing nullopt for eta_v (direction
/// unavailable or |v^B| under min_speed) runs the open-loop prediction; the
/// CRE then sees C = 0.
inline ObserverState observer_step(const ObserverState& state,
                                   const Vec3& omega_m, const Vec3& accel_m,
                                   const std::optional<UnitVec3>& eta_v,
                                   const RiccatiConfig& cfg, double dt) {
  if (dt <= 0.0) throw std::invalid_argument("observer_step: dt must be > 0");
  Mat6 A;
  Mat36 C = Mat36::Zero();
  Mat63 K = Mat63::Zero();
  if (eta_v) {
    auto [a_mat, c_mat] = state_matrices(omega_m, *eta_v);
    A = a_mat;
    C = c_mat;
    K = gain_K(state.P, C, build_D(*eta_v, cfg));
  } else {
    A = state_matrices(omega_m, UnitVec3(Vec3::UnitZ())).first;
  }
  const Mat3 Kv = K.topRows<3>();
  const Mat3 Kg = K.bottomRows<3>();
  const Mat3 pi = C.leftCols<3>();

  auto field = [&](const Vec6& s) -> Vec6 {
    const Vec3 vh = s.head<3>();
    const Vec3 zz = s.tail<3>();
    const Vec3 y = -(pi * vh);
    Vec6 ds;
    ds.head<3>() = -omega_m.cross(vh) + accel_m + zz + Kv * y;
    ds.tail<3>() = -omega_m.cross(zz) + Kg * y;
    return ds;
  };

  Vec6 s;
  s << state.x.v_hat_B, state.x.z;
  s = cfg.state_rk4 ? rk4_step(s, field, dt) : Vec6(s + dt * field(s));

  ObserverState out;
  out.x.v_hat_B = s.head<3>();
  out.x.z = s.tail<3>();
  out.P = cre_step(state.P, A, C, cfg, dt);
  return out;
}

}  // namespace riccati
}  // namespace ovio
