#pragma once

#include <Eigen/Dense>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <string>
#include <vector>

#include "entsim/channel.hpp"
#include "entsim/counting.hpp"
#include "entsim/rng.hpp"

namespace entsim {

/// Coincidence counts over a grid of signal/idler slit positions.
struct CoincidenceScan {
  std::vector<double> signal_positions;  ///< rad
  std::vector<double> idler_positions;   ///< rad
  Eigen::MatrixX<long long> counts;      ///< counts(i, j) at (signal i, idler j)
  std::string window_note;

  void validate() const {
    if (counts.rows() != static_cast<Eigen::Index>(signal_positions.size()) ||
        counts.cols() != static_cast<Eigen::Index>(idler_positions.size()))
      throw DomainError("CoincidenceScan: matrix dimensions do not match position lists");
  }
};

/// Simulate a slit-position scan. The generating law is factorized,
/// C(theta, theta') ~ |g(theta)|^2 |g'(theta')|^2, with the peak cell mean
/// equal to pairs_per_setting. Slit positions may lie outside the dynamics
/// aperture, so the raw (untruncated) profile is used.
inline CoincidenceScan coincidence_scan(const AngularSpectrum& signal_profile,
                                        const AngularSpectrum& idler_profile,
                                        const std::vector<double>& signal_positions,
                                        const std::vector<double>& idler_positions,
                                        const NoiseModel& noise) {
  signal_profile.validate();
  idler_profile.validate();
  noise.validate();
  CoincidenceScan scan;
  scan.signal_positions = signal_positions;
  scan.idler_positions = idler_positions;
  scan.counts.resize(static_cast<Eigen::Index>(signal_positions.size()),
                     static_cast<Eigen::Index>(idler_positions.size()));
  scan.window_note = "synthetic factorized scan";
  const double peak = signal_profile.gaussian(signal_profile.center_offset) *
                      idler_profile.gaussian(idler_profile.center_offset);
  for (std::size_t i = 0; i < signal_positions.size(); ++i)
    for (std::size_t j = 0; j < idler_positions.size(); ++j) {
      const double mean = noise.pairs_per_setting *
                              signal_profile.gaussian(signal_positions[i]) *
                              idler_profile.gaussian(idler_positions[j]) / peak +
                          noise.background_per_setting;
      CounterRng rng(noise.seed, i * idler_positions.size() + j);
      scan.counts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rng.poisson(mean);
    }
  return scan;
}

struct Chi2Result {
  double chi2 = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

/// Test the factorization C(theta, theta') = C(theta, 0) C(0, theta') / C(0, 0)
/// with a continuity-corrected Pearson independence statistic on the full
/// count table (expected cells from the marginals, dof = (R-1)(C-1)).
inline Chi2Result factorization_chi2(const CoincidenceScan& scan) {
  scan.validate();
  const auto& c = scan.counts;
  const Eigen::Index rows = c.rows();
  const Eigen::Index cols = c.cols();
  if (rows < 2 || cols < 2)
    throw DomainError("factorization_chi2: need at least a 2x2 grid");

  auto index_of_zero = [](const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i)
      if (std::abs(v[i]) < 1e-12) return static_cast<Eigen::Index>(i);
    throw DomainError("factorization_chi2: scan lacks the zero-position reference");
  };
  const Eigen::Index i0 = index_of_zero(scan.signal_positions);
  const Eigen::Index j0 = index_of_zero(scan.idler_positions);
  if (c(i0, j0) <= 0)
    throw NumericalError("factorization_chi2: zero count at the (0,0) reference cell");

  const double total = static_cast<double>(c.sum());
  Eigen::VectorXd row_sum(rows), col_sum(cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    row_sum(i) = static_cast<double>(c.row(i).sum());
  for (Eigen::Index j = 0; j < cols; ++j)
    col_sum(j) = static_cast<double>(c.col(j).sum());

  double chi2 = 0.0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double expected = row_sum(i) * col_sum(j) / total;
      if (expected <= 0.0) continue;
      const double d = std::max(0.0, std::abs(static_cast<double>(c(i, j)) - expected) - 0.5);
      chi2 += d * d / expected;
    }
  const int dof = static_cast<int>((rows - 1) * (cols - 1));
  boost::math::chi_squared dist(dof);
  const double p = chi2 > 0.0 ? boost::math::cdf(boost::math::complement(dist, chi2)) : 1.0;
  return {chi2, dof, p};
}

/// Gaussian FWHM of a scan marginal by quadratic regression of log counts.
inline double fit_marginal_fwhm(const std::vector<double>& positions,
                                const Eigen::VectorXd& marginal) {
  if (positions.size() < 3)
    throw DomainError("fit_marginal_fwhm: need at least 3 points");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const double m = marginal(static_cast<Eigen::Index>(i));
    if (m > 0.0) {
      xs.push_back(positions[i]);
      ys.push_back(std::log(m));
    }
  }
  if (xs.size() < 3)
    throw NumericalError("fit_marginal_fwhm: too few nonzero cells");
  Eigen::MatrixXd design(static_cast<Eigen::Index>(xs.size()), 3);
  Eigen::VectorXd target(static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    design(r, 0) = 1.0;
    design(r, 1) = xs[i];
    design(r, 2) = xs[i] * xs[i];
    target(r) = ys[i];
  }
  const Eigen::Vector3d coef =
      design.colPivHouseholderQr().solve(target);
  if (!(coef(2) < 0.0))
    throw NumericalError("fit_marginal_fwhm: marginal is not peaked");
  const double sigma = std::sqrt(-1.0 / (2.0 * coef(2)));
  return sigma * 2.0 * std::sqrt(2.0 * std::log(2.0));
}

/// FWHM of the signal-side marginal of a scan.
inline double scan_signal_fwhm(const CoincidenceScan& scan) {
  scan.validate();
  Eigen::VectorXd marginal(scan.counts.rows());
  for (Eigen::Index i = 0; i < scan.counts.rows(); ++i)
    marginal(i) = static_cast<double>(scan.counts.row(i).sum());
  return fit_marginal_fwhm(scan.signal_positions, marginal);
}

}  // namespace entsim
