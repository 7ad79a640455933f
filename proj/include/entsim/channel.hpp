#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <utility>
#include <vector>

#include "entsim/errors.hpp"

namespace entsim {

inline constexpr double kPi = 3.141592653589793238462643;

/// FWHM of a Gaussian -> standard deviation.
inline double fwhm_to_sigma(double fwhm) {
  return fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
}

/// Signal-arm angular intensity profile |g(theta)|^2: a Gaussian truncated
/// by the slit aperture. All angles in radians.
struct AngularSpectrum {
  double fwhm;           ///< FWHM of the intensity profile |g|^2
  double aperture;       ///< full slit width Delta, centered on theta = 0
  double center_offset = 0.0;

  void validate() const {
    if (!(fwhm > 0.0)) throw DomainError("AngularSpectrum: fwhm must be > 0");
    if (!(aperture > 0.0)) throw DomainError("AngularSpectrum: aperture must be > 0");
  }

  double sigma() const { return fwhm_to_sigma(fwhm); }

  /// Unnormalized |g(theta)|^2, without aperture truncation.
  double gaussian(double theta) const {
    const double d = theta - center_offset;
    const double s = sigma();
    return std::exp(-d * d / (2.0 * s * s));
  }
};

/// Binary periodic transmission mask m(theta) in {0,1}.
struct GratingMask {
  double period;              ///< angular period delta_theta = delta_x / D
  double open_fraction;       ///< delta_w / delta_x, in (0,1]
  double phase_offset = 0.0;  ///< shift of the pattern; 0 = open region centered at theta = 0

  void validate() const {
    if (!(period > 0.0)) throw DomainError("GratingMask: period must be > 0");
    if (!(open_fraction > 0.0 && open_fraction <= 1.0))
      throw DomainError("GratingMask: open_fraction must be in (0,1]");
  }

  bool is_identity() const { return open_fraction >= 1.0; }

  bool transmits(double theta) const {
    if (is_identity()) return true;
    double u = std::fmod((theta - phase_offset) / period + 0.5, 1.0);
    if (u < 0.0) u += 1.0;
    u -= 0.5;
    return std::abs(u) <= open_fraction / 2.0;
  }
};

/// Physical layout of the channel. Lengths in mm except the pixel pitch (um).
struct ChannelGeometry {
  double slit_distance_D;   ///< crystal-to-slit distance (mm)
  double slm_distance_L;    ///< crystal-to-SLM distance (mm)
  double pixel_pitch_h;     ///< SLM pixel width (um)
  double slit_width;        ///< slit aperture Delta_x (mm)
  std::optional<double> grating_period_dx;  ///< grating period delta_x (mm)
  std::optional<double> grating_open_dw;    ///< grating open width delta_w (mm)

  void validate() const {
    if (!(slit_distance_D > 0.0 && slm_distance_L > 0.0 && pixel_pitch_h > 0.0 &&
          slit_width > 0.0))
      throw DomainError("ChannelGeometry: all lengths must be > 0");
    if (grating_period_dx && !(*grating_period_dx > 0.0))
      throw DomainError("ChannelGeometry: grating period must be > 0");
    if (grating_open_dw && !(*grating_open_dw > 0.0))
      throw DomainError("ChannelGeometry: grating open width must be > 0");
  }

  /// Angular size of one SLM pixel, zeta = h / L (rad per pixel).
  double pixel_angle() const { return pixel_pitch_h * 1e-3 / slm_distance_L; }

  /// Slit aperture Delta = slit_width / D (rad).
  double aperture() const { return slit_width / slit_distance_D; }

  /// Grating angular period delta_theta = delta_x / D (rad).
  double mask_period() const {
    if (!grating_period_dx) throw ConfigError("ChannelGeometry: grating period not set");
    return *grating_period_dx / slit_distance_D;
  }

  double mask_open_fraction() const {
    if (!grating_period_dx || !grating_open_dw)
      throw ConfigError("ChannelGeometry: grating fields not set");
    return *grating_open_dw / *grating_period_dx;
  }
};

/// Closed-form revival location a_rev = (2 pi D / delta_x) (h / L), rad/pixel.
inline double revival_parameter(const ChannelGeometry& geom) {
  geom.validate();
  if (!geom.grating_period_dx)
    throw ConfigError("revival_parameter: grating period not configured");
  return 2.0 * kPi * geom.slit_distance_D / *geom.grating_period_dx * geom.pixel_angle();
}

/// Linear SLM phase applied on the signal arm.
struct SlmPhaseProfile {
  double slope_a;          ///< evolution parameter a (rad/pixel)
  double constant_b = 0.0; ///< constant phase (rad)
  bool discretized = true; ///< phase constant within each pixel-width bin

  void validate() const {
    if (!(std::abs(slope_a) < 2.0 * kPi))
      throw DomainError("SlmPhaseProfile: |slope_a| must be < 2 pi rad/pixel");
  }
};

struct DecoherenceFactor {
  std::complex<double> value;
};

namespace detail {

/// Open (transmitting) sub-intervals of [lo, hi] under an optional mask.
inline std::vector<std::pair<double, double>> open_intervals(
    double lo, double hi, const GratingMask* mask) {
  std::vector<std::pair<double, double>> out;
  if (!mask || mask->is_identity()) {
    out.emplace_back(lo, hi);
    return out;
  }
  const double p = mask->period;
  const double half_open = mask->open_fraction * p / 2.0;
  const long long k0 = static_cast<long long>(std::floor((lo - mask->phase_offset) / p)) - 1;
  const long long k1 = static_cast<long long>(std::ceil((hi - mask->phase_offset) / p)) + 1;
  for (long long k = k0; k <= k1; ++k) {
    const double c = mask->phase_offset + static_cast<double>(k) * p;
    const double a = std::max(lo, c - half_open);
    const double b = std::min(hi, c + half_open);
    if (b > a) out.emplace_back(a, b);
  }
  return out;
}

/// Split open intervals at pixel-bin boundaries (n + 1/2) * zeta so the
/// discretized phase is constant within every piece.
inline std::vector<std::pair<double, double>> smooth_pieces(
    const std::vector<std::pair<double, double>>& intervals, double zeta,
    bool split_pixels) {
  std::vector<std::pair<double, double>> pieces;
  for (const auto& [x0, x1] : intervals) {
    if (!split_pixels) {
      pieces.emplace_back(x0, x1);
      continue;
    }
    const long long n0 = static_cast<long long>(std::floor(x0 / zeta + 0.5));
    const long long n1 = static_cast<long long>(std::floor(x1 / zeta + 0.5));
    double prev = x0;
    for (long long n = n0; n < n1; ++n) {
      const double edge = (static_cast<double>(n) + 0.5) * zeta;
      if (edge > prev && edge < x1) {
        pieces.emplace_back(prev, edge);
        prev = edge;
      }
    }
    if (x1 > prev) pieces.emplace_back(prev, x1);
  }
  return pieces;
}

/// Composite trapezoid of f over the pieces, nodes allocated by length.
/// The integrand is smooth within each piece, so edge-aligned trapezoid
/// converges cleanly under node doubling. f receives the piece index as
/// well as the abscissa, so a piecewise-constant factor (the discretized
/// SLM phase) can be resolved per piece rather than per node; resolving it
/// per node would pick the wrong bin at shared endpoints and leave an O(h)
/// error.
template <typename F>
auto piecewise_trapezoid(const std::vector<std::pair<double, double>>& pieces,
                         std::size_t total_nodes, F&& f) {
  using R = decltype(f(std::size_t{0}, 0.0));
  double total_len = 0.0;
  for (const auto& [a, b] : pieces) total_len += b - a;
  R sum{};
  for (std::size_t piece = 0; piece < pieces.size(); ++piece) {
    const auto& [a, b] = pieces[piece];
    const double len = b - a;
    const std::size_t n = std::max<std::size_t>(
        2, static_cast<std::size_t>(std::llround(static_cast<double>(total_nodes) * len / total_len)));
    const double h = len / static_cast<double>(n);
    R acc = 0.5 * (f(piece, a) + f(piece, b));
    for (std::size_t i = 1; i < n; ++i) acc += f(piece, a + h * static_cast<double>(i));
    sum += acc * h;
  }
  return sum;
}

}  // namespace detail

struct QuadratureOptions {
  std::size_t nodes = std::size_t{1} << 16;  ///< total nodes across the aperture
  double tolerance = 1e-8;                   ///< allowed change under node doubling
  bool check_convergence = false;
};

/// Normalized masked intensity |g(theta) m(theta)|^2 at one angle.
/// Zero outside the aperture; integrates to 1 over the aperture.
inline double intensity(const AngularSpectrum& spectrum,
                        const std::optional<GratingMask>& mask, double theta,
                        const QuadratureOptions& quad = {}) {
  spectrum.validate();
  if (mask) mask->validate();
  const double half = spectrum.aperture / 2.0;
  if (theta < -half || theta > half) return 0.0;
  const GratingMask* m = mask ? &*mask : nullptr;
  if (m && !m->transmits(theta)) return 0.0;
  const auto pieces = detail::open_intervals(-half, half, m);
  const double norm = detail::piecewise_trapezoid(
      pieces, quad.nodes, [&](std::size_t, double t) { return spectrum.gaussian(t); });
  if (!(norm > 0.0)) throw DomainError("intensity: mask blocks the entire aperture");
  return spectrum.gaussian(theta) / norm;
}

/// Decoherence factor: quadrature of the normalized masked intensity against
/// exp(i phi(theta)), phi the SLM phase. With a discretized profile the phase
/// is piecewise constant on pixel-width bins of zeta = h/L.
inline DecoherenceFactor decoherence_factor(const AngularSpectrum& spectrum,
                                            const std::optional<GratingMask>& mask,
                                            const ChannelGeometry& geometry,
                                            const SlmPhaseProfile& slm,
                                            const QuadratureOptions& quad = {}) {
  spectrum.validate();
  if (mask) mask->validate();
  geometry.validate();
  slm.validate();

  const double half = spectrum.aperture / 2.0;
  const double zeta = geometry.pixel_angle();
  const double alpha = slm.slope_a / zeta;
  const GratingMask* m = mask ? &*mask : nullptr;

  const auto intervals = detail::open_intervals(-half, half, m);
  const auto pieces = detail::smooth_pieces(intervals, zeta, slm.discretized);

  // With a discretized profile each piece lies inside one pixel bin; the bin
  // index (and hence the phase) is fixed by the piece midpoint.
  std::vector<double> piece_phase(pieces.size(), 0.0);
  if (slm.discretized)
    for (std::size_t i = 0; i < pieces.size(); ++i)
      piece_phase[i] =
          slm.slope_a * std::round(0.5 * (pieces[i].first + pieces[i].second) / zeta);

  auto evaluate = [&](std::size_t nodes) {
    const std::complex<double> num = detail::piecewise_trapezoid(
        pieces, nodes, [&](std::size_t piece, double t) -> std::complex<double> {
          const double phase = slm.discretized ? piece_phase[piece] : alpha * t;
          return spectrum.gaussian(t) *
                 std::complex<double>(std::cos(phase), std::sin(phase));
        });
    const double den = detail::piecewise_trapezoid(
        pieces, nodes, [&](std::size_t, double t) { return spectrum.gaussian(t); });
    if (!(den > 0.0)) throw DomainError("decoherence_factor: empty spectrum");
    return num / den;
  };

  std::complex<double> eps = evaluate(quad.nodes);
  if (quad.check_convergence) {
    const std::complex<double> eps2 = evaluate(quad.nodes * 2);
    const double residual = std::abs(eps2 - eps);
    if (residual > quad.tolerance)
      throw NumericalError("decoherence_factor: quadrature did not converge", residual);
    eps = eps2;
  }
  if (slm.constant_b != 0.0)
    eps *= std::complex<double>(std::cos(slm.constant_b), std::sin(slm.constant_b));
  return DecoherenceFactor{eps};
}

/// Visibility V = V0 * Re[eps], clamped below at zero.
inline double visibility(const DecoherenceFactor& eps, double ceiling_v0) {
  if (!(ceiling_v0 >= 0.0 && ceiling_v0 <= 1.0))
    throw DomainError("visibility: ceiling_v0 must be in [0,1]");
  return std::max(0.0, ceiling_v0 * eps.value.real());
}

struct SweepPoint {
  double a;
  double v_ideal;
  double v_scaled;
  std::complex<double> eps;
};

/// Deterministic V(a) curve over a grid of evolution-parameter values.
inline std::vector<SweepPoint> sweep_visibility(
    const AngularSpectrum& spectrum, const std::optional<GratingMask>& mask,
    const ChannelGeometry& geometry, const std::vector<double>& a_grid,
    double ceiling_v0, bool discretized = true, const QuadratureOptions& quad = {}) {
  std::vector<SweepPoint> curve;
  curve.reserve(a_grid.size());
  for (const double a : a_grid) {
    const SlmPhaseProfile slm{a, 0.0, discretized};
    const DecoherenceFactor eps = decoherence_factor(spectrum, mask, geometry, slm, quad);
    curve.push_back({a, visibility(eps, 1.0), visibility(eps, ceiling_v0), eps.value});
  }
  return curve;
}

}  // namespace entsim
