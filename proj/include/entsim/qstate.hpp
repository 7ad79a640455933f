#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>

#include "entsim/errors.hpp"

namespace entsim {

using Complex = std::complex<double>;
using Matrix4c = Eigen::Matrix4cd;
using Vector2c = Eigen::Vector2cd;
using Vector4c = Eigen::Vector4cd;

/// Two-qubit polarization state in the ordered basis {HH, HV, VH, VV}.
/// Hermitian, unit trace, positive semidefinite (up to numerical noise).
class DensityMatrix4 {
public:
  static constexpr double kHermitianTol = 1e-12;
  static constexpr double kTraceTol = 1e-12;
  static constexpr double kPsdTol = -1e-10;

  explicit DensityMatrix4(const Matrix4c& m) : m_(m) { validate(); }

  const Matrix4c& matrix() const { return m_; }

  /// Smallest eigenvalue (diagnostic; may be slightly negative).
  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Matrix4c> es(m_, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

private:
  void validate() const {
    if ((m_ - m_.adjoint()).cwiseAbs().maxCoeff() > kHermitianTol)
      throw DomainError("DensityMatrix4: not Hermitian");
    if (std::abs(m_.trace().real() - 1.0) > kTraceTol || std::abs(m_.trace().imag()) > kTraceTol)
      throw DomainError("DensityMatrix4: trace is not 1");
    if (min_eigenvalue() < kPsdTol)
      throw DomainError("DensityMatrix4: not positive semidefinite");
  }

  Matrix4c m_;
};

/// Channel output state for decoherence factor eps:
/// rho = 1/2 (|HH><HH| + eps |VV><HH| + eps* |HH><VV| + |VV><VV|).
inline DensityMatrix4 channel_state(Complex eps) {
  if (std::abs(eps) > 1.0 + 1e-12)
    throw DomainError("channel_state: |eps| must be <= 1");
  Matrix4c m = Matrix4c::Zero();
  m(0, 0) = 0.5;
  m(3, 3) = 0.5;
  m(3, 0) = 0.5 * eps;
  m(0, 3) = 0.5 * std::conj(eps);
  return DensityMatrix4(m);
}

/// Wootters concurrence from the spin-flipped product rho (sy x sy) rho* (sy x sy).
inline double concurrence_wootters(const DensityMatrix4& rho) {
  Matrix4c flip = Matrix4c::Zero();
  // sigma_y (x) sigma_y in the {HH, HV, VH, VV} basis.
  flip(0, 3) = -1.0;
  flip(1, 2) = 1.0;
  flip(2, 1) = 1.0;
  flip(3, 0) = -1.0;
  const Matrix4c rho_tilde = flip * rho.matrix().conjugate() * flip;
  const Matrix4c product = rho.matrix() * rho_tilde;
  Eigen::ComplexEigenSolver<Matrix4c> es(product, false);
  std::array<double, 4> lambda{};
  for (int i = 0; i < 4; ++i)
    lambda[static_cast<std::size_t>(i)] =
        std::sqrt(std::max(0.0, es.eigenvalues()(i).real()));
  std::sort(lambda.begin(), lambda.end(), std::greater<>());
  return std::max(0.0, lambda[0] - lambda[1] - lambda[2] - lambda[3]);
}

namespace detail {

/// Hermitian principal square root with negative eigenvalues clipped to zero.
inline Matrix4c psd_sqrt(const Matrix4c& m) {
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(m);
  Eigen::Vector4d d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * d.asDiagonal().toDenseMatrix().cast<Complex>() *
         es.eigenvectors().adjoint();
}

}  // namespace detail

/// Uhlmann fidelity F = Tr sqrt( sqrt(a) b sqrt(a) ), in [0, 1].
inline double fidelity(const DensityMatrix4& rho_a, const DensityMatrix4& rho_b) {
  const Matrix4c sa = detail::psd_sqrt(rho_a.matrix());
  const Matrix4c inner = sa * rho_b.matrix() * sa;
  Eigen::SelfAdjointEigenSolver<Matrix4c> es((inner + inner.adjoint()) / 2.0,
                                             Eigen::EigenvaluesOnly);
  double f = 0.0;
  for (int i = 0; i < 4; ++i) f += std::sqrt(std::max(0.0, es.eigenvalues()(i)));
  return std::min(1.0, f);
}

}  // namespace entsim
