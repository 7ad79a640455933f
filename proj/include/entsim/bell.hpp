#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "entsim/channel.hpp"
#include "entsim/qstate.hpp"

namespace entsim {

/// Polarizer ket |beta> = cos(beta)|H> + sin(beta)|V>, beta in degrees.
inline Vector2c polarizer_ket(double beta_deg) {
  const double b = beta_deg * kPi / 180.0;
  return Vector2c(std::cos(b), std::sin(b));
}

/// One polarizer setting per arm, in degrees (interpreted modulo 180).
struct PolarizerPair {
  double beta1;
  double beta2;
};

/// The four CHSH analyzer angles, in degrees.
struct ChshSettings {
  double beta1;
  double beta1_prime;
  double beta2;
  double beta2_prime;
};

/// Canonical optimum for the Bell state (|HH> + |VV>)/sqrt(2).
inline ChshSettings canonical_chsh_settings() { return {0.0, 45.0, 22.5, -22.5}; }

/// Born-rule probability Tr(rho |k1 k2><k1 k2|) for a separable projector.
inline double projector_probability(const DensityMatrix4& rho, const Vector2c& k1,
                                    const Vector2c& k2) {
  if (std::abs(k1.squaredNorm() - 1.0) > 1e-9 || std::abs(k2.squaredNorm() - 1.0) > 1e-9)
    throw DomainError("projector_probability: projector kets must be normalized");
  Vector4c v;
  v << k1(0) * k2(0), k1(0) * k2(1), k1(1) * k2(0), k1(1) * k2(1);
  const double p = (v.adjoint() * rho.matrix() * v)(0, 0).real();
  return std::clamp(p, 0.0, 1.0);
}

inline double projector_probability(const DensityMatrix4& rho, const PolarizerPair& pair) {
  return projector_probability(rho, polarizer_ket(pair.beta1), polarizer_ket(pair.beta2));
}

/// Interferometric visibility from the (45, 45) / (45, -45) settings.
inline double visibility_from_state(const DensityMatrix4& rho) {
  const double p_max = projector_probability(rho, {45.0, 45.0});
  const double p_min = projector_probability(rho, {45.0, -45.0});
  if (p_max + p_min <= 0.0)
    throw NumericalError("visibility_from_state: degenerate state, zero total probability");
  return (p_max - p_min) / (p_max + p_min);
}

/// Polarization correlation E(beta1, beta2) from four projector probabilities.
inline double correlation(const DensityMatrix4& rho, const PolarizerPair& pair) {
  const double b1 = pair.beta1, b2 = pair.beta2;
  return projector_probability(rho, {b1, b2}) +
         projector_probability(rho, {b1 + 90.0, b2 + 90.0}) -
         projector_probability(rho, {b1, b2 + 90.0}) -
         projector_probability(rho, {b1 + 90.0, b2});
}

/// CHSH combination B = |E(b1,b2) + E(b1,b2') + E(b1',b2) - E(b1',b2')|.
inline double chsh(const DensityMatrix4& rho, const ChshSettings& s) {
  return std::abs(correlation(rho, {s.beta1, s.beta2}) +
                  correlation(rho, {s.beta1, s.beta2_prime}) +
                  correlation(rho, {s.beta1_prime, s.beta2}) -
                  correlation(rho, {s.beta1_prime, s.beta2_prime}));
}

/// Maximal CHSH value over all settings (Horodecki criterion):
/// 2 sqrt(m1 + m2), m1 and m2 the two largest eigenvalues of T^T T where
/// T_ij = Tr(rho sigma_i (x) sigma_j).
inline double chsh_max(const DensityMatrix4& rho) {
  Eigen::Matrix2cd sigma[3];
  sigma[0] << 0, 1, 1, 0;
  sigma[1] << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0);
  sigma[2] << 1, 0, 0, -1;
  Eigen::Matrix3d corr;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      Matrix4c op = Matrix4c::Zero();
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          for (int c = 0; c < 2; ++c)
            for (int d = 0; d < 2; ++d)
              op(2 * a + c, 2 * b + d) = sigma[i](a, b) * sigma[j](c, d);
      corr(i, j) = (rho.matrix() * op).trace().real();
    }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(corr.transpose() * corr,
                                                    Eigen::EigenvaluesOnly);
  const double m1 = es.eigenvalues()(2);
  const double m2 = es.eigenvalues()(1);
  return 2.0 * std::sqrt(std::max(0.0, m1 + m2));
}

}  // namespace entsim
