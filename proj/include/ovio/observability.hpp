#pragma once

#include "ovio/geometry.hpp"
#include "ovio/riccati.hpp"
#include "ovio/sim.hpp"

#include <functional>
#include <stdexcept>
#include <vector>

namespace ovio {
namespace obs {

/// Truth signals sampled on a uniform half-step grid over one window, so
/// RK4 stages and trapezoidal quadrature read exact grid values.
class TrajectorySignals {
 public:
  TrajectorySignals(const sim::TrajectoryProfile& profile,
                    sim::TruthState initial, double t0, double t1, double dt)
      : t0_(t0), half_dt_(0.5 * dt) {
    if (t1 <= t0 || dt <= 0.0) {
      throw std::invalid_argument("TrajectorySignals: bad window");
    }
    sim::TruthState s = initial;
    while (s.t + 1e-12 < t0) {
      s = sim::propagate_truth(s, profile, std::min(half_dt_, t0 - s.t));
    }
    const int n = static_cast<int>(std::llround((t1 - t0) / half_dt_));
    omega_.reserve(n + 1);
    eta_body_.reserve(n + 1);
    rot_.reserve(n + 1);
    for (int j = 0; j <= n; ++j) {
      const Vec3 v_body = s.R.transposed() * s.v;
      if (v_body.norm() < 1e-9) {
        throw std::invalid_argument(
            "TrajectorySignals: velocity direction undefined (|v| ~ 0)");
      }
      omega_.push_back(profile.omega(s.t));
      eta_body_.push_back(UnitVec3(v_body));
      rot_.push_back(s.R);
      if (j < n) s = sim::propagate_truth(s, profile, half_dt_);
    }
  }

  // index j counts half steps from t0
  int half_count() const { return static_cast<int>(omega_.size()) - 1; }
  double half_dt() const { return half_dt_; }
  double t0() const { return t0_; }
  const Vec3& omega(int j) const { return omega_[j]; }
  const UnitVec3& eta_body(int j) const { return eta_body_[j]; }
  const Rotation& rot(int j) const { return rot_[j]; }
  UnitVec3 eta_inertial(int j) const {
    return UnitVec3(rot_[j] * eta_body_[j].vec());
  }

 private:
  double t0_;
  double half_dt_;
  std::vector<Vec3> omega_;
  std::vector<UnitVec3> eta_body_;
  std::vector<Rotation> rot_;
};

struct GramianReport {
  double t = 0.0;
  double delta = 0.0;
  Mat6 W = Mat6::Zero();
  double min_eig = 0.0;
  double mu_bar = 0.0;  // persistent-excitation metric over the same window
};

/// Transition matrix of x' = A(t) x by RK4: integrates Phi' = A Phi from
/// Phi(t0, t0) = I.
inline Mat6 transition_matrix(const std::function<Mat6(double)>& A_of_t,
                              double t0, double t1, double dt) {
  if (t1 < t0 || dt <= 0.0) {
    throw std::invalid_argument("transition_matrix: bad window");
  }
  Mat6 phi = Mat6::Identity();
  double t = t0;
  while (t < t1 - 1e-12) {
    const double h = std::min(dt, t1 - t);
    const Mat6 a1 = A_of_t(t);
    const Mat6 a2 = A_of_t(t + 0.5 * h);
    const Mat6 a4 = A_of_t(t + h);
    const Mat6 k1 = a1 * phi;
    const Mat6 k2 = a2 * (phi + 0.5 * h * k1);
    const Mat6 k3 = a2 * (phi + 0.5 * h * k2);
    const Mat6 k4 = a4 * (phi + h * k3);
    phi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += h;
  }
  return phi;
}

namespace detail {

inline Mat6 A_from(const Vec3& omega) {
  Mat6 A = Mat6::Zero();
  const Mat3 wx = skew(omega);
  A.topLeftCorner<3, 3>() = -wx;
  A.topRightCorner<3, 3>() = Mat3::Identity();
  A.bottomRightCorner<3, 3>() = -wx;
  return A;
}

inline Mat36 C_from(const UnitVec3& eta) {
  Mat36 C = Mat36::Zero();
  C.leftCols<3>() = proj(eta);
  return C;
}

}  // namespace detail

/// Observability Gramian W(t, t+delta) = (1/delta) \int Phi' C'C Phi ds by
/// trapezoidal quadrature along the window's true direction signal.
inline GramianReport gramian(const TrajectorySignals& sig, double delta,
                             double dt) {
  if (delta <= 0.0 || dt <= 0.0) {
    throw std::invalid_argument("gramian: bad window");
  }
  const int n = static_cast<int>(std::llround(delta / dt));
  if (2 * n > sig.half_count()) {
    throw std::invalid_argument("gramian: window exceeds sampled signals");
  }
  Mat6 phi = Mat6::Identity();
  Mat6 acc = Mat6::Zero();
  Mat3 pe_acc = Mat3::Zero();
  auto integrand = [&](int j, const Mat6& p) -> Mat6 {
    const Mat36 C = detail::C_from(sig.eta_body(2 * j));
    const Mat36 cphi = C * p;
    return cphi.transpose() * cphi;
  };
  auto pe_term = [&](int j) { return proj(sig.eta_inertial(2 * j)); };
  for (int j = 0; j < n; ++j) {
    const double wgt = (j == 0) ? 0.5 : 1.0;
    acc += wgt * integrand(j, phi);
    pe_acc += wgt * pe_term(j);
    const Mat6 a1 = detail::A_from(sig.omega(2 * j));
    const Mat6 a2 = detail::A_from(sig.omega(2 * j + 1));
    const Mat6 a4 = detail::A_from(sig.omega(2 * j + 2));
    const Mat6 k1 = a1 * phi;
    const Mat6 k2 = a2 * (phi + 0.5 * dt * k1);
    const Mat6 k3 = a2 * (phi + 0.5 * dt * k2);
    const Mat6 k4 = a4 * (phi + dt * k3);
    phi += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  acc += 0.5 * integrand(n, phi);
  pe_acc += 0.5 * pe_term(n);

  GramianReport rep;
  rep.t = sig.t0();
  rep.delta = delta;
  rep.W = (dt / delta) * acc;
  rep.W = 0.5 * (rep.W + rep.W.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Mat6> es(rep.W);
  rep.min_eig = es.eigenvalues().minCoeff();
  Eigen::SelfAdjointEigenSolver<Mat3> es3(0.5 * (dt / delta) *
                                          (pe_acc + pe_acc.transpose()));
  rep.mu_bar = es3.eigenvalues().minCoeff();
  return rep;
}

/// Persistent-excitation metric: smallest eigenvalue of the averaged
/// inertial-direction projector (1/delta) \int pi_{eta^I} dtau.
inline double pe_metric(const TrajectorySignals& sig, double delta, double dt) {
  return gramian(sig, delta, dt).mu_bar;
}

/// Numerical check of the Gramian factorization W = R̄' W̄ R̄ with
/// W̄ built from the constant pair Ā = [0 I; 0 0], C̄ = [pi_{eta^I} 0] and
/// Phī(s, t) = exp(Ā (s-t)); returns the Frobenius discrepancy.
inline double gramian_factorization_check(const TrajectorySignals& sig,
                                          double delta, double dt) {
  const GramianReport rep = gramian(sig, delta, dt);
  const int n = static_cast<int>(std::llround(delta / dt));
  Mat6 acc = Mat6::Zero();
  for (int j = 0; j <= n; ++j) {
    const double s = j * dt;
    Mat6 phib = Mat6::Identity();
    phib.topRightCorner<3, 3>() = s * Mat3::Identity();
    const Mat36 cb = detail::C_from(sig.eta_inertial(2 * j));
    const Mat36 cphi = cb * phib;
    acc += ((j == 0 || j == n) ? 0.5 : 1.0) * (cphi.transpose() * cphi);
  }
  const Mat6 w_bar = (dt / delta) * acc;
  Mat6 r_bar = Mat6::Zero();
  r_bar.topLeftCorner<3, 3>() = sig.rot(0).matrix();
  r_bar.bottomRightCorner<3, 3>() = sig.rot(0).matrix();
  return (rep.W - r_bar.transpose() * w_bar * r_bar).norm();
}

/// Rank of [H; H Ā] for H = [I 0]; Kalman observability of the frozen pair.
inline int kalman_rank() {
  Eigen::Matrix<double, 3, 6> H = Eigen::Matrix<double, 3, 6>::Zero();
  H.leftCols<3>() = Mat3::Identity();
  Mat6 a_bar = Mat6::Zero();
  a_bar.topRightCorner<3, 3>() = Mat3::Identity();
  Eigen::Matrix<double, 6, 6> stacked;
  stacked.topRows<3>() = H;
  stacked.bottomRows<3>() = H * a_bar;
  return static_cast<int>(Eigen::FullPivLU<Mat6>(stacked).rank());
}

}  // namespace obs
}  // namespace ovio
