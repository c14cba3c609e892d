#pragma once

#include "ovio/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace ovio {

/// Thrown when an operation over flow samples finds no valid sample.
class NoValidSamples : public std::runtime_error {
 public:
  NoValidSamples() : std::runtime_error("no valid flow samples") {}
};

namespace flow {

/// One landmark's spherical optical-flow measurement. The simulator fills
/// (b, bdot, valid); translational_flow() derives s once the gyro sample is
/// known.
struct FlowSample {
  UnitVec3 b;
  Vec3 bdot = Vec3::Zero();
  Vec3 s = Vec3::Zero();  // translational flow, 1/s
  bool valid = false;
};

struct GdConfig {
  double kappa = 5.0;     // step size applied to the normalized gradient
  int iterations = 20;    // gradient-descent iterations per time step
  double flow_min = 1e-6;     // |s| below this marks the sample invalid
  double proj_min = 1e-9;     // |pi_b eta| guard for the singular grad term
  double stab_margin = 3.0;   // safety factor in the step normalizer
  double huber_delta = 0.0;   // robust-cost knee; 0 disables
  double early_exit_grad = 0.0;  // stop when |grad|/sum|s|^2 drops below; 0 runs all N

  void validate() const {
    if (kappa <= 0.0 || iterations < 1 || flow_min <= 0.0 || proj_min <= 0.0 ||
        stab_margin < 1.0 || huber_delta < 0.0 || early_exit_grad < 0.0) {
      throw std::invalid_argument("GdConfig: invalid field");
    }
  }
};

struct DirectionEstimate {
  UnitVec3 eta;
  int hemisphere_sign = +1;
  double cost = 0.0;
  int iterations_run = 0;
};

/// Removes the gyro-known rotational component: s = bdot + omega x b.
inline FlowSample translational_flow(const UnitVec3& b, const Vec3& bdot,
                                     const Vec3& omega_m,
                                     double flow_min = 1e-6) {
  FlowSample out;
  out.b = b;
  out.bdot = bdot;
  out.s = bdot + omega_m.cross(b.vec());
  out.valid = out.s.norm() >= flow_min;
  return out;
}

/// Alignment cost of a candidate direction against the translational flows,
/// sum_i (|s_i|^2 eta'pi_b eta - |s_i||pi_b eta| s_i'pi_b eta). Equals half
/// the squared residual sum, so it vanishes exactly at the true direction
/// for noise-free samples.
inline double cost(const UnitVec3& eta_hat,
                   const std::vector<FlowSample>& samples) {
  const Vec3& e = eta_hat.vec();
  double c = 0.0;
  bool any = false;
  for (const FlowSample& f : samples) {
    if (!f.valid) continue;
    any = true;
    const Vec3 pe = e - f.b.vec() * f.b.vec().dot(e);
    const double sn = f.s.norm();
    c += sn * sn * e.dot(pe) - sn * pe.norm() * f.s.dot(pe);
  }
  if (!any) throw NoValidSamples();
  return c;
}

/// Total flow power sum_i |s_i|^2 over valid samples; the step normalizer.
inline double flow_power(const std::vector<FlowSample>& samples) {
  double w = 0.0;
  for (const FlowSample& f : samples) {
    if (f.valid) w += f.s.squaredNorm();
  }
  return w;
}

/// Riemannian gradient of cost() at eta_hat, tangent to S^2.
///
/// Euclidean gradient per valid sample:
///   2|s|^2 pi_b eta - |s| (s'pi_b eta / |pi_b eta|) pi_b eta - |s||pi_b eta| pi_b s
/// The middle term is singular at pi_b eta = 0 and is dropped for samples
/// with |pi_b eta| < proj_min (subgradient-style step); the rest remain.
inline Vec3 riemannian_grad(const UnitVec3& eta_hat,
                            const std::vector<FlowSample>& samples,
                            double proj_min = 1e-9) {
  const Vec3& e = eta_hat.vec();
  Vec3 g = Vec3::Zero();
  bool any = false;
  for (const FlowSample& f : samples) {
    if (!f.valid) continue;
    any = true;
    const Vec3& b = f.b.vec();
    const Vec3 pe = e - b * b.dot(e);
    const Vec3 ps = f.s - b * b.dot(f.s);
    const double npe = pe.norm();
    const double sn = f.s.norm();
    g += 2.0 * sn * sn * pe - sn * npe * ps;
    if (npe >= proj_min) {
      g -= sn * (f.s.dot(pe) / npe) * pe;
    }
  }
  if (!any) throw NoValidSamples();
  return g - e * e.dot(g);
}

/// Hemisphere indicator beta = (1/n) sum_i s_i'pi_b eta / (|s_i||pi_b eta|),
/// in [-1, 1]. Samples with |pi_b eta| < proj_min are skipped; returns 0
/// when all are degenerate (the caller keeps its previous sign).
inline double beta(const UnitVec3& eta_hat,
                   const std::vector<FlowSample>& samples,
                   double proj_min = 1e-9) {
  const Vec3& e = eta_hat.vec();
  double acc = 0.0;
  int n = 0;
  for (const FlowSample& f : samples) {
    if (!f.valid) continue;
    const Vec3 pe = e - f.b.vec() * f.b.vec().dot(e);
    const double npe = pe.norm();
    if (npe < proj_min) continue;
    acc += f.s.dot(pe) / (f.s.norm() * npe);
    ++n;
  }
  return n > 0 ? acc / n : 0.0;
}

/// One sphere-constrained descent iteration:
///   delta = -kappa * eta x grad C(eta) / (stab_margin * sum|s_i|^2)
///   eta  <- sign(beta) * exp(delta^x) * eta
///
/// The flow-power normalizer makes the iterate sequence invariant to a
/// common scaling of the s_i; the margin keeps kappa = 5 inside the linear
/// stability region of the summed cost (its tangent Hessian is bounded by
/// ~0.91 * sum|s_i|^2 on these scenes).
inline DirectionEstimate gd_step(const DirectionEstimate& est,
                                 const std::vector<FlowSample>& samples,
                                 const GdConfig& cfg) {
  const double w = cfg.stab_margin * flow_power(samples);
  if (w <= 0.0) throw NoValidSamples();
  const Vec3 grad = riemannian_grad(est.eta, samples, cfg.proj_min);
  const Vec3 delta = -(cfg.kappa / w) * est.eta.vec().cross(grad);
  const double b = beta(est.eta, samples, cfg.proj_min);

  DirectionEstimate out = est;
  if (b > 0.0) {
    out.hemisphere_sign = +1;
  } else if (b < 0.0) {
    out.hemisphere_sign = -1;
  }  // b == 0 retains the previous sign
  Vec3 e = exp_so3_matrix(delta) * est.eta.vec();
  if (out.hemisphere_sign < 0) e = -e;
  out.eta = UnitVec3(e);
  out.iterations_run = est.iterations_run + 1;
  return out;
}

/// Runs cfg.iterations descent steps warm-started from the previous
/// estimate (e3 at t = 0 by convention of the caller).
inline DirectionEstimate estimate_direction(const UnitVec3& eta_prev,
                                            const std::vector<FlowSample>& samples,
                                            const GdConfig& cfg) {
  DirectionEstimate est;
  est.eta = eta_prev;
  est.hemisphere_sign = +1;
  est.iterations_run = 0;
  const double w = flow_power(samples);
  if (w <= 0.0) throw NoValidSamples();
  for (int k = 0; k < cfg.iterations; ++k) {
    est = gd_step(est, samples, cfg);
    if (cfg.early_exit_grad > 0.0 &&
        riemannian_grad(est.eta, samples, cfg.proj_min).norm() / w <
            cfg.early_exit_grad) {
      break;
    }
  }
  est.cost = cost(est.eta, samples);
  return est;
}

/// Huber-robust variant of cost(): rho applied to each residual
/// r_i = |pi_b eta| s_i - |s_i| pi_b eta. Coincides with cost() when every
/// |r_i| < delta.
inline double robust_cost(const UnitVec3& eta_hat,
                          const std::vector<FlowSample>& samples,
                          double delta) {
  const Vec3& e = eta_hat.vec();
  double c = 0.0;
  bool any = false;
  for (const FlowSample& f : samples) {
    if (!f.valid) continue;
    any = true;
    const Vec3 pe = e - f.b.vec() * f.b.vec().dot(e);
    const double rn = (pe.norm() * f.s - f.s.norm() * pe).norm();
    c += rn <= delta ? 0.5 * rn * rn : delta * (rn - 0.5 * delta);
  }
  if (!any) throw NoValidSamples();
  return c;
}

}  // namespace flow
}  // namespace ovio
