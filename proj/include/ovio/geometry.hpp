#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace ovio {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat36 = Eigen::Matrix<double, 3, 6>;
using Mat63 = Eigen::Matrix<double, 6, 3>;

/// Skew-symmetric matrix of u, so that skew(u) * v == u.cross(v).
inline Mat3 skew(const Vec3& u) {
  Mat3 m;
  m << 0.0, -u.z(), u.y(),
       u.z(), 0.0, -u.x(),
       -u.y(), u.x(), 0.0;
  return m;
}

/// Inverse of skew(). Reads the off-diagonal entries directly, so the
/// round-trip unskew(skew(u)) == u is exact for all finite u.
inline Vec3 unskew(const Mat3& m) {
  return Vec3(m(2, 1), m(0, 2), m(1, 0));
}

namespace detail {

// Rodrigues coefficients sin(t)/t and (1-cos(t))/t^2 with a series branch
// below 1e-6 to avoid cancellation. Second-order Taylor terms keep the
// branch switch smooth to ~1e-24.
inline void rodrigues_coeffs(double theta, double& a, double& b) {
  const double t2 = theta * theta;
  if (theta < 1e-6) {
    a = 1.0 - t2 / 6.0;
    b = 0.5 - t2 / 24.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / t2;
  }
}

}  // namespace detail

inline Mat3 exp_so3_matrix(const Vec3& w) {
  const double theta = w.norm();
  double a, b;
  detail::rodrigues_coeffs(theta, a, b);
  const Mat3 wx = skew(w);
  return Mat3::Identity() + a * wx + b * (wx * wx);
}

/// Rotation matrix constrained to SO(3). The checked constructor verifies
/// orthogonality and det within 1e-9; paths that produce orthonormal output
/// by construction (exp_so3, orthonormalized) use the unchecked factory.
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}

  explicit Rotation(const Mat3& m) : m_(m) {
    if (!is_rotation(m)) {
      throw std::invalid_argument("Rotation: matrix is not in SO(3)");
    }
  }

  static Rotation identity() { return Rotation(); }

  static Rotation from_matrix_unchecked(const Mat3& m) {
    Rotation r;
    r.m_ = m;
    return r;
  }

  const Mat3& matrix() const { return m_; }

  Rotation transposed() const { return from_matrix_unchecked(m_.transpose()); }
  Rotation inverse() const { return transposed(); }

  Vec3 operator*(const Vec3& v) const { return m_ * v; }
  Rotation operator*(const Rotation& o) const {
    return from_matrix_unchecked(m_ * o.m_);
  }

  /// Frobenius distance of RᵀR from the identity.
  double orthogonality_error() const {
    return (m_.transpose() * m_ - Mat3::Identity()).norm();
  }

  /// Closest rotation in the Frobenius sense, via the symmetric polar
  /// factor R(RᵀR)^(-1/2). Fixed-step integrators call this every step.
  Rotation orthonormalized() const {
    Eigen::SelfAdjointEigenSolver<Mat3> es(m_.transpose() * m_);
    const Vec3 inv_sqrt = es.eigenvalues().cwiseSqrt().cwiseInverse();
    const Mat3 b =
        es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose();
    return from_matrix_unchecked(m_ * b);
  }

  static bool is_rotation(const Mat3& m, double tol = 1e-9) {
    return (m.transpose() * m - Mat3::Identity()).norm() <= tol &&
           std::abs(m.determinant() - 1.0) <= tol;
  }

 private:
  Mat3 m_;
};

/// Rodrigues exponential map from a rotation vector.
inline Rotation exp_so3(const Vec3& w) {
  return Rotation::from_matrix_unchecked(exp_so3_matrix(w));
}

/// Unit vector on S^2. Construction normalizes, so the norm invariant holds
/// to 1e-12 after every retraction.
class UnitVec3 {
 public:
  UnitVec3() : v_(Vec3::UnitZ()) {}

  explicit UnitVec3(const Vec3& v) {
    const double n = v.norm();
    if (n < 1e-12) {
      throw std::invalid_argument("UnitVec3: cannot normalize near-zero vector");
    }
    v_ = v / n;
  }

  const Vec3& vec() const { return v_; }
  UnitVec3 negated() const {
    UnitVec3 u;
    u.v_ = -v_;
    return u;
  }

 private:
  Vec3 v_;
};

/// Projector onto the plane orthogonal to u: I - uuᵀ/|u|². Rejects inputs
/// with |u| < 1e-12; use proj_bar for possibly-zero arguments.
inline Mat3 proj(const Vec3& u) {
  const double n2 = u.squaredNorm();
  if (n2 < 1e-24) {
    throw std::invalid_argument("proj: |u| too small, use proj_bar");
  }
  return Mat3::Identity() - (u * u.transpose()) / n2;
}

inline Mat3 proj(const UnitVec3& u) {
  return Mat3::Identity() - u.vec() * u.vec().transpose();
}

/// Scaled projector |u|²I - uuᵀ. Continuous through u = 0, where it
/// vanishes; equals |u|²·proj(u) for nonzero u.
inline Mat3 proj_bar(const Vec3& u) {
  return u.squaredNorm() * Mat3::Identity() - u * u.transpose();
}

/// Tangential component of g at eta: proj(eta) * g.
inline Vec3 tangent_project(const UnitVec3& eta, const Vec3& g) {
  return g - eta.vec() * (eta.vec().dot(g));
}

/// Full attitude error ||I - R̂Rᵀ||_F, in [0, 2√2].
inline double attitude_error(const Rotation& r_hat, const Rotation& r) {
  return (Mat3::Identity() - r_hat.matrix() * r.matrix().transpose()).norm();
}

/// Reduced (gravity direction) attitude error 1 - (R̂ g^B)ᵀ g / |g|², in [0, 2].
inline double reduced_attitude_error(const Rotation& r_hat, const Vec3& g_body,
                                     const Vec3& g) {
  const double g2 = g.squaredNorm();
  if (g2 < 1e-24) {
    throw std::invalid_argument("reduced_attitude_error: |g| too small");
  }
  return 1.0 - (r_hat * g_body).dot(g) / g2;
}

}  // namespace ovio
