#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include "entsim/counting.hpp"
#include "entsim/qstate.hpp"

namespace entsim {

/// Real 16-vector parameterizing a lower-triangular complex T with
/// rho(t) = T^dag T / Tr(T^dag T). Any nonzero vector maps to a valid state.
/// Layout: t[0..3] the real diagonal, then (re, im) pairs for the six
/// off-diagonal entries (1,0), (2,0), (2,1), (3,0), (3,1), (3,2).
struct CholeskyParams {
  std::array<double, 16> t{};
};

namespace detail {

inline const std::array<std::pair<int, int>, 6>& lower_entries() {
  static const std::array<std::pair<int, int>, 6> e = {
      {{1, 0}, {2, 0}, {2, 1}, {3, 0}, {3, 1}, {3, 2}}};
  return e;
}

inline Matrix4c params_to_t(const CholeskyParams& p) {
  Matrix4c t = Matrix4c::Zero();
  for (int i = 0; i < 4; ++i) t(i, i) = p.t[static_cast<std::size_t>(i)];
  const auto& entries = lower_entries();
  for (std::size_t k = 0; k < entries.size(); ++k)
    t(entries[k].first, entries[k].second) =
        Complex(p.t[4 + 2 * k], p.t[5 + 2 * k]);
  return t;
}

}  // namespace detail

/// rho = T^dag T / Tr(T^dag T): Hermitian, unit trace, PSD by construction.
inline DensityMatrix4 params_to_state(const CholeskyParams& p) {
  const Matrix4c t = detail::params_to_t(p);
  const Matrix4c s = t.adjoint() * t;
  const double trace = s.trace().real();
  if (!(trace > 0.0))
    throw DomainError("params_to_state: zero parameter vector");
  Matrix4c rho = s / trace;
  rho = (rho + rho.adjoint()) / 2.0;
  return DensityMatrix4(rho);
}

/// Inverse map for a strictly positive state: lower-triangular T with
/// T^dag T proportional to rho. Used for the optimizer warm start.
inline CholeskyParams state_to_params(const Matrix4c& rho) {
  // T^dag T = rho  <=>  (J R J)^dag (J R J) = rho with R = chol(J rho J)^dag,
  // J the index-reversal permutation.
  Matrix4c reversed;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) reversed(i, j) = rho(3 - i, 3 - j);
  Eigen::LLT<Matrix4c> llt(reversed);
  if (llt.info() != Eigen::Success)
    throw NumericalError("state_to_params: state is not positive definite");
  const Matrix4c upper = Matrix4c(llt.matrixL()).adjoint();
  Matrix4c t;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) t(i, j) = upper(3 - i, 3 - j);
  // Rotate each row phase so the diagonal is real and positive.
  for (int i = 0; i < 4; ++i) {
    const Complex d = t(i, i);
    if (std::abs(d) > 0.0) t.row(i) *= std::conj(d) / std::abs(d);
  }
  CholeskyParams p;
  for (int i = 0; i < 4; ++i) p.t[static_cast<std::size_t>(i)] = t(i, i).real();
  const auto& entries = detail::lower_entries();
  for (std::size_t k = 0; k < entries.size(); ++k) {
    p.t[4 + 2 * k] = t(entries[k].first, entries[k].second).real();
    p.t[5 + 2 * k] = t(entries[k].first, entries[k].second).imag();
  }
  return p;
}

/// Linear inversion: the unique Hermitian matrix reproducing the observed
/// frequencies, trace-normalized. May have negative eigenvalues on noisy
/// data; returned raw for diagnostics.
inline Matrix4c linear_inversion(const std::vector<ProjectorSpec>& projectors,
                                 const std::vector<double>& counts, double flux,
                                 double background = 0.0) {
  if (projectors.size() != counts.size() || projectors.size() < 16)
    throw ConfigError("linear_inversion: need >= 16 matched projectors and counts");
  const Eigen::MatrixXd map = measurement_matrix(projectors);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(map, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.singularValues()(15) < 1e-10)
    throw ConfigError("linear_inversion: measurement matrix is singular");
  Eigen::VectorXd freq(static_cast<Eigen::Index>(counts.size()));
  for (std::size_t i = 0; i < counts.size(); ++i)
    freq(static_cast<Eigen::Index>(i)) = (counts[i] - background) / flux;
  const Eigen::VectorXd coords = svd.solve(freq);
  const auto basis = detail::hermitian_basis();
  Matrix4c rho = Matrix4c::Zero();
  for (std::size_t k = 0; k < 16; ++k)
    rho += coords(static_cast<Eigen::Index>(k)) * basis[k];
  rho = (rho + rho.adjoint()) / 2.0;
  const double trace = rho.trace().real();
  if (std::abs(trace) > 1e-12) rho /= trace;
  return rho;
}

struct MleOptions {
  double gradient_tolerance = 1e-8;
  double relative_tolerance = 1e-12;
  int max_iterations = 5000;
  double mu_floor_scale = 1e-12;  ///< mean floor = scale * flux
};

struct ReconstructionResult {
  DensityMatrix4 state;
  double log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;
};

/// Poisson log-likelihood sum_i [n_i ln mu_i - mu_i] with
/// mu_i = flux Tr(rho(t) P_i) + background, and its analytic gradient in t.
inline std::pair<double, Eigen::VectorXd> loglik_and_gradient(
    const CholeskyParams& params, const std::vector<ProjectorSpec>& projectors,
    const std::vector<double>& counts, double flux, double background = 0.0,
    double mu_floor = 1e-8) {
  const Matrix4c t = detail::params_to_t(params);
  const Matrix4c s = t.adjoint() * t;
  const double trace_s = s.trace().real();
  if (!(trace_s > 0.0)) throw DomainError("loglik_and_gradient: zero parameter vector");

  double value = 0.0;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(16);
  const auto& entries = detail::lower_entries();

  for (std::size_t i = 0; i < projectors.size(); ++i) {
    const Matrix4c proj = detail::projector_matrix(projectors[i]);
    const double raw_overlap = (s * proj).trace().real();
    const double prob = raw_overlap / trace_s;
    double mu = flux * prob + background;
    bool floored = false;
    if (mu < mu_floor) {
      mu = mu_floor;
      floored = true;
    }
    value += counts[i] * std::log(mu) - mu;
    if (floored) continue;  // gradient of the floored branch is zero

    const double weight = (counts[i] / mu - 1.0) * flux;
    // d Tr(S P)/dt_k = 2 Re Tr(B_k^dag T P); d Tr(S)/dt_k = 2 t_k.
    const Matrix4c tp = t * proj;
    for (int d = 0; d < 4; ++d) {
      const double d_overlap = 2.0 * tp(d, d).real();
      const double d_trace = 2.0 * t(d, d).real();
      grad(d) += weight * (d_overlap - prob * d_trace) / trace_s;
    }
    for (std::size_t k = 0; k < entries.size(); ++k) {
      const auto [r, c] = entries[k];
      const Complex m = tp(r, c);
      const Complex tc = t(r, c);
      const double d_overlap_re = 2.0 * m.real();
      const double d_overlap_im = 2.0 * m.imag();
      grad(static_cast<Eigen::Index>(4 + 2 * k)) +=
          weight * (d_overlap_re - prob * 2.0 * tc.real()) / trace_s;
      grad(static_cast<Eigen::Index>(5 + 2 * k)) +=
          weight * (d_overlap_im - prob * 2.0 * tc.imag()) / trace_s;
    }
  }
  return {value, grad};
}

/// Warm start: linear inversion projected to the PSD cone (eigenvalues
/// clipped to 1e-6, renormalized), then Cholesky-factored. Falls back to
/// the maximally mixed state.
inline CholeskyParams mle_initializer(const std::vector<ProjectorSpec>& projectors,
                                      const std::vector<double>& counts, double flux,
                                      double background) {
  Matrix4c rho;
  try {
    rho = linear_inversion(projectors, counts, flux, background);
  } catch (const ConfigError&) {
    rho = Matrix4c::Identity() / 4.0;
  }
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(rho);
  Eigen::Vector4d d = es.eigenvalues().cwiseMax(1e-6);
  d /= d.sum();
  const Matrix4c projected = es.eigenvectors() *
                             d.asDiagonal().toDenseMatrix().cast<Complex>() *
                             es.eigenvectors().adjoint();
  return state_to_params(projected);
}

/// Maximum-likelihood reconstruction by BFGS ascent with backtracking line
/// search. The likelihood is monotone non-decreasing across accepted steps.
inline ReconstructionResult mle_reconstruct(const std::vector<ProjectorSpec>& projectors,
                                            const std::vector<double>& counts,
                                            double flux, double background = 0.0,
                                            const MleOptions& options = {}) {
  if (projectors.size() != counts.size() || projectors.size() < 16)
    throw ConfigError("mle_reconstruct: need >= 16 matched projectors and counts");
  for (const double n : counts)
    if (n < 0.0) throw DomainError("mle_reconstruct: negative count");
  {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(measurement_matrix(projectors));
    if (svd.singularValues()(15) < 1e-10)
      throw ConfigError("mle_reconstruct: projector set is not informationally complete");
  }

  const double mu_floor = options.mu_floor_scale * std::max(flux, 1.0);
  auto eval = [&](const CholeskyParams& p) {
    return loglik_and_gradient(p, projectors, counts, flux, background, mu_floor);
  };

  CholeskyParams params = mle_initializer(projectors, counts, flux, background);
  Eigen::VectorXd x = Eigen::Map<Eigen::VectorXd>(params.t.data(), 16);
  auto to_params = [](const Eigen::VectorXd& v) {
    CholeskyParams p;
    Eigen::Map<Eigen::VectorXd>(p.t.data(), 16) = v;
    return p;
  };

  auto [value, grad] = eval(to_params(x));
  Eigen::MatrixXd hessian_inv = Eigen::MatrixXd::Identity(16, 16);
  int iter = 0;
  bool converged = false;
  bool small_change = false;

  for (; iter < options.max_iterations; ++iter) {
    if (grad.norm() < options.gradient_tolerance) {
      converged = true;
      break;
    }
    Eigen::VectorXd direction = hessian_inv * grad;
    if (direction.dot(grad) <= 0.0) {  // reset on loss of ascent direction
      hessian_inv.setIdentity();
      direction = grad;
    }
    double step = 1.0;
    double new_value = value;
    Eigen::VectorXd x_new = x;
    bool accepted = false;
    const double slope = direction.dot(grad);
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + step * direction;
      const double candidate = eval(to_params(x_new)).first;
      if (candidate >= value + 1e-4 * step * slope) {
        new_value = candidate;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    auto [v2, g2] = eval(to_params(x_new));
    new_value = v2;
    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g2 - grad;
    const double sy = s.dot(y);
    if (sy < -1e-12 * s.norm() * y.norm() && std::abs(sy) > 1e-300) {
      // BFGS update for a maximization: curvature s'y < 0; apply the
      // standard update to the negated problem.
      const Eigen::VectorXd yn = -y;
      const double rho_bfgs = 1.0 / s.dot(yn);
      const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(16, 16);
      hessian_inv = (eye - rho_bfgs * s * yn.transpose()) * hessian_inv *
                        (eye - rho_bfgs * yn * s.transpose()) +
                    rho_bfgs * s * s.transpose();
    } else {
      hessian_inv.setIdentity();
    }

    const double rel_change =
        std::abs(new_value - value) / std::max(1.0, std::abs(value));
    x = x_new;
    grad = g2;
    const double old_value = value;
    value = new_value;
    if (rel_change < options.relative_tolerance && new_value >= old_value) {
      small_change = true;
      ++iter;
      break;
    }
  }

  // The Armijo test above bottoms out at the floating-point noise of the
  // likelihood (~|value| * eps), which strands the gradient several orders
  // above its tolerance. Polish by accepting quasi-Newton steps on a
  // gradient-norm decrease; value changes here are at noise level, so the
  // monotonicity contract is preserved.
  if (!converged) {
    for (int polish = 0;
         polish < 200 && grad.norm() > options.gradient_tolerance && iter < options.max_iterations;
         ++polish) {
      Eigen::VectorXd direction = hessian_inv * grad;
      if (direction.dot(grad) <= 0.0) {
        hessian_inv.setIdentity();
        direction = grad;
      }
      double step = 1.0;
      bool improved = false;
      for (int ls = 0; ls < 45; ++ls) {
        const Eigen::VectorXd x_try = x + step * direction;
        auto [v_try, g_try] = eval(to_params(x_try));
        if (g_try.norm() < grad.norm()) {
          const Eigen::VectorXd s = x_try - x;
          const Eigen::VectorXd yn = grad - g_try;
          const double sy = s.dot(yn);
          if (sy > 1e-300) {
            const double rho_bfgs = 1.0 / sy;
            const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(16, 16);
            hessian_inv = (eye - rho_bfgs * s * yn.transpose()) * hessian_inv *
                              (eye - rho_bfgs * yn * s.transpose()) +
                          rho_bfgs * s * s.transpose();
          }
          x = x_try;
          grad = g_try;
          value = v_try;
          improved = true;
          break;
        }
        step *= 0.5;
      }
      ++iter;
      if (!improved) break;
    }
    converged = grad.norm() < options.gradient_tolerance || small_change;
  }

  ReconstructionResult result{params_to_state(to_params(x)), value, iter, converged,
                              grad.norm()};
  return result;
}

/// Convenience overload taking simulated count records.
inline ReconstructionResult mle_reconstruct(const std::vector<CountRecord>& records,
                                            double flux, double background = 0.0,
                                            const MleOptions& options = {}) {
  std::vector<ProjectorSpec> projectors;
  std::vector<double> counts;
  projectors.reserve(records.size());
  counts.reserve(records.size());
  for (const auto& r : records) {
    projectors.push_back(r.projector);
    counts.push_back(static_cast<double>(r.count));
  }
  return mle_reconstruct(projectors, counts, flux, background, options);
}

}  // namespace entsim
