#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "entsim/bell.hpp"
#include "entsim/qstate.hpp"
#include "entsim/rng.hpp"

namespace entsim {

/// Statistics of one simulated acquisition window.
struct NoiseModel {
  double pairs_per_setting;          ///< expected detected pairs N per setting
  double background_per_setting = 0; ///< expected accidental counts per setting
  std::uint64_t seed = 0;

  void validate() const {
    if (!(pairs_per_setting >= 0.0))
      throw DomainError("NoiseModel: pairs_per_setting must be >= 0");
    if (!(background_per_setting >= 0.0))
      throw DomainError("NoiseModel: background must be >= 0");
  }
};

/// A separable two-qubit projector, one ket per arm.
struct ProjectorSpec {
  std::string ket1;  ///< label: H, V, D, A, R, L, or "deg:<angle>"
  std::string ket2;
  Vector2c k1;
  Vector2c k2;
};

inline Vector2c named_ket(const std::string& name) {
  const double s = 1.0 / std::sqrt(2.0);
  if (name == "H") return Vector2c(1, 0);
  if (name == "V") return Vector2c(0, 1);
  if (name == "D") return Vector2c(s, s);
  if (name == "A") return Vector2c(s, -s);
  if (name == "R") return Vector2c(Complex(s, 0), Complex(0, s));
  if (name == "L") return Vector2c(Complex(s, 0), Complex(0, -s));
  if (name.rfind("deg:", 0) == 0) return polarizer_ket(std::stod(name.substr(4)));
  throw DomainError("named_ket: unknown ket label '" + name + "'");
}

inline ProjectorSpec make_projector(const std::string& ket1, const std::string& ket2) {
  return {ket1, ket2, named_ket(ket1), named_ket(ket2)};
}

/// One projector setting with its simulated count.
struct CountRecord {
  ProjectorSpec projector;
  long long count = 0;
  double expected = 0.0;
};

/// The 16-projector separable tomographic set {H, V, D, R} x {H, V, D, R}.
/// Informationally complete (the 16x16 measurement map has rank 16).
inline std::vector<ProjectorSpec> tomographic_set() {
  static const char* kets[4] = {"H", "V", "D", "R"};
  std::vector<ProjectorSpec> out;
  out.reserve(16);
  for (const char* a : kets)
    for (const char* b : kets) out.push_back(make_projector(a, b));
  return out;
}

namespace detail {

/// Orthonormal Hermitian operator basis of the two-qubit state space
/// (normalized so Tr(H_a H_b) = delta_ab).
inline std::vector<Matrix4c> hermitian_basis() {
  std::vector<Matrix4c> basis;
  basis.reserve(16);
  const double s = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < 4; ++i) {
    Matrix4c m = Matrix4c::Zero();
    m(i, i) = 1.0;
    basis.push_back(m);
  }
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      Matrix4c re = Matrix4c::Zero();
      re(i, j) = s;
      re(j, i) = s;
      basis.push_back(re);
      Matrix4c im = Matrix4c::Zero();
      im(i, j) = Complex(0, -s);
      im(j, i) = Complex(0, s);
      basis.push_back(im);
    }
  return basis;
}

inline Matrix4c projector_matrix(const ProjectorSpec& p) {
  Vector4c v;
  v << p.k1(0) * p.k2(0), p.k1(0) * p.k2(1), p.k1(1) * p.k2(0), p.k1(1) * p.k2(1);
  return v * v.adjoint();
}

}  // namespace detail

/// Real matrix of the linear map from state coordinates (in the Hermitian
/// operator basis) to projector probabilities; rank 16 iff the set is
/// informationally complete.
inline Eigen::MatrixXd measurement_matrix(const std::vector<ProjectorSpec>& projectors) {
  const auto basis = detail::hermitian_basis();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(projectors.size()), 16);
  for (std::size_t i = 0; i < projectors.size(); ++i) {
    const Matrix4c proj = detail::projector_matrix(projectors[i]);
    for (std::size_t k = 0; k < 16; ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          (proj * basis[k]).trace().real();
  }
  return m;
}

/// Poisson counts for each projector, mean N Tr(rho P) + background.
/// Each record's draw is keyed by (seed, setting index): identical inputs
/// give identical output regardless of evaluation order.
inline std::vector<CountRecord> simulate_counts(const DensityMatrix4& rho,
                                                const std::vector<ProjectorSpec>& projectors,
                                                const NoiseModel& noise) {
  noise.validate();
  std::vector<CountRecord> records;
  records.reserve(projectors.size());
  for (std::size_t i = 0; i < projectors.size(); ++i) {
    const ProjectorSpec& p = projectors[i];
    const double prob = projector_probability(rho, p.k1, p.k2);
    const double mean = noise.pairs_per_setting * prob + noise.background_per_setting;
    CounterRng rng(noise.seed, static_cast<std::uint64_t>(i));
    records.push_back({p, rng.poisson(mean), mean});
  }
  return records;
}

/// Finite-count CHSH estimate with Poisson error propagation.
struct ChshEstimate {
  double b = 0.0;
  double sigma = 0.0;
  double significance = 0.0;  ///< (B - 2) / sigma
};

/// Simulate the four-correlation CHSH measurement: for each correlation
/// setting, four projector outcomes with pairs_per_setting pairs, counts
/// keyed by (seed, correlation index, outcome index).
inline ChshEstimate simulate_chsh(const DensityMatrix4& rho, const ChshSettings& s,
                                  const NoiseModel& noise) {
  noise.validate();
  const double pair_angles[4][2] = {{s.beta1, s.beta2},
                                    {s.beta1, s.beta2_prime},
                                    {s.beta1_prime, s.beta2},
                                    {s.beta1_prime, s.beta2_prime}};
  const double signs[4] = {1.0, 1.0, 1.0, -1.0};
  double b = 0.0;
  double variance = 0.0;
  for (int k = 0; k < 4; ++k) {
    const double b1 = pair_angles[k][0];
    const double b2 = pair_angles[k][1];
    const Vector2c kets1[2] = {polarizer_ket(b1), polarizer_ket(b1 + 90.0)};
    const Vector2c kets2[2] = {polarizer_ket(b2), polarizer_ket(b2 + 90.0)};
    double n[2][2];
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        const double prob = projector_probability(rho, kets1[i], kets2[j]);
        const double mean = noise.pairs_per_setting * prob + noise.background_per_setting;
        CounterRng rng(noise.seed, static_cast<std::uint64_t>(4 * k + 2 * i + j));
        n[i][j] = static_cast<double>(rng.poisson(mean));
      }
    const double total = n[0][0] + n[0][1] + n[1][0] + n[1][1];
    if (total <= 0.0) throw NumericalError("simulate_chsh: no counts collected");
    const double corr = (n[0][0] + n[1][1] - n[0][1] - n[1][0]) / total;
    const double var = ((1.0 - corr) * (1.0 - corr) * (n[0][0] + n[1][1]) +
                        (1.0 + corr) * (1.0 + corr) * (n[0][1] + n[1][0])) /
                       (total * total);
    b += signs[k] * corr;
    variance += var;
  }
  ChshEstimate estimate;
  estimate.b = std::abs(b);
  estimate.sigma = std::sqrt(variance);
  estimate.significance = (estimate.b - 2.0) / estimate.sigma;
  return estimate;
}

/// Simulated visibility measurement: counts at (45, 45) and (45, -45),
/// V = (C_max - C_min) / (C_max + C_min), standard error by Poisson
/// propagation.
inline std::pair<double, double> measure_visibility(const DensityMatrix4& rho,
                                                    const NoiseModel& noise) {
  noise.validate();
  if (!(noise.pairs_per_setting > 0.0))
    throw DomainError("measure_visibility: pairs_per_setting must be > 0");
  const std::vector<ProjectorSpec> settings = {make_projector("deg:45", "deg:45"),
                                               make_projector("deg:45", "deg:-45")};
  const auto records = simulate_counts(rho, settings, noise);
  const double c_max = static_cast<double>(records[0].count);
  const double c_min = static_cast<double>(records[1].count);
  const double total = c_max + c_min;
  if (total <= 0.0)
    throw NumericalError("measure_visibility: no counts collected");
  const double v = (c_max - c_min) / total;
  const double var =
      4.0 * (c_min * c_min * c_max + c_max * c_max * c_min) / (total * total * total * total);
  return {v, std::sqrt(var)};
}

}  // namespace entsim
