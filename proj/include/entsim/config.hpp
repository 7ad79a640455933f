#pragma once

#include <fstream>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <string>

#include "entsim/channel.hpp"
#include "entsim/counting.hpp"

namespace entsim {

/// Full experiment configuration. Units are embedded in the key names;
/// unknown keys are rejected on load.
struct ExperimentConfig {
  // geometry (lengths in mm, pixel pitch in um)
  double slit_distance_D_mm = 500.0;
  double slm_distance_L_mm = 330.0;
  double pixel_pitch_h_um = 100.0;
  double slit_width_mm = 5.0;
  // spectrum (angles in mrad); the fwhm is of the intensity profile |g|^2
  double fwhm_mrad = 6.0811;
  double aperture_mrad = 10.0;
  // grating
  bool grating_enabled = true;
  double grating_period_mm = 2.0;
  double grating_open_fraction = 0.4;
  double grating_phase_offset_mrad = 0.0;
  // slm
  bool slm_discretized = true;
  double a_opt_rad_per_pixel = 0.12;
  // noise
  double pairs_per_setting = 10000.0;
  double background_per_setting = 0.0;
  std::uint64_t seed = 12345;
  // visibility ceiling
  double ceiling_v0 = 0.881;

  ChannelGeometry geometry() const {
    ChannelGeometry g{slit_distance_D_mm, slm_distance_L_mm, pixel_pitch_h_um,
                      slit_width_mm,      std::nullopt,      std::nullopt};
    if (grating_enabled) {
      g.grating_period_dx = grating_period_mm;
      g.grating_open_dw = grating_open_fraction * grating_period_mm;
    }
    g.validate();
    return g;
  }

  AngularSpectrum spectrum() const {
    AngularSpectrum s{fwhm_mrad * 1e-3, aperture_mrad * 1e-3, 0.0};
    s.validate();
    return s;
  }

  std::optional<GratingMask> mask() const {
    if (!grating_enabled) return std::nullopt;
    GratingMask m{grating_period_mm / slit_distance_D_mm, grating_open_fraction,
                  grating_phase_offset_mrad * 1e-3};
    m.validate();
    return m;
  }

  NoiseModel noise() const {
    NoiseModel n{pairs_per_setting, background_per_setting, seed};
    n.validate();
    return n;
  }

  void validate() const {
    geometry();
    spectrum();
    mask();
    noise();
    if (!(ceiling_v0 >= 0.0 && ceiling_v0 <= 1.0))
      throw ConfigError("config: ceiling_v0 must be in [0,1]");
    if (!(std::abs(a_opt_rad_per_pixel) < 2.0 * kPi))
      throw ConfigError("config: a_opt must satisfy |a_opt| < 2 pi");
  }
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, const std::string& where,
                                const std::set<std::string>& allowed) {
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key))
      throw ConfigError("config: unknown key '" + key + "' in " + where);
}

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  detail::reject_unknown_keys(
      j, "root", {"geometry", "spectrum", "grating", "slm", "noise", "ceiling_v0"});
  if (j.contains("geometry")) {
    const auto& g = j.at("geometry");
    detail::reject_unknown_keys(g, "geometry",
                                {"slit_distance_D_mm", "slm_distance_L_mm",
                                 "pixel_pitch_h_um", "slit_width_mm"});
    c.slit_distance_D_mm = g.value("slit_distance_D_mm", c.slit_distance_D_mm);
    c.slm_distance_L_mm = g.value("slm_distance_L_mm", c.slm_distance_L_mm);
    c.pixel_pitch_h_um = g.value("pixel_pitch_h_um", c.pixel_pitch_h_um);
    c.slit_width_mm = g.value("slit_width_mm", c.slit_width_mm);
  }
  if (j.contains("spectrum")) {
    const auto& s = j.at("spectrum");
    detail::reject_unknown_keys(s, "spectrum", {"fwhm_mrad", "aperture_mrad"});
    c.fwhm_mrad = s.value("fwhm_mrad", c.fwhm_mrad);
    c.aperture_mrad = s.value("aperture_mrad", c.aperture_mrad);
  }
  if (j.contains("grating")) {
    const auto& g = j.at("grating");
    detail::reject_unknown_keys(
        g, "grating", {"enabled", "period_mm", "open_fraction", "phase_offset_mrad"});
    c.grating_enabled = g.value("enabled", c.grating_enabled);
    c.grating_period_mm = g.value("period_mm", c.grating_period_mm);
    c.grating_open_fraction = g.value("open_fraction", c.grating_open_fraction);
    c.grating_phase_offset_mrad = g.value("phase_offset_mrad", c.grating_phase_offset_mrad);
  }
  if (j.contains("slm")) {
    const auto& s = j.at("slm");
    detail::reject_unknown_keys(s, "slm", {"discretized", "a_opt_rad_per_pixel"});
    c.slm_discretized = s.value("discretized", c.slm_discretized);
    c.a_opt_rad_per_pixel = s.value("a_opt_rad_per_pixel", c.a_opt_rad_per_pixel);
  }
  if (j.contains("noise")) {
    const auto& n = j.at("noise");
    detail::reject_unknown_keys(
        n, "noise", {"pairs_per_setting", "background_per_setting", "seed"});
    c.pairs_per_setting = n.value("pairs_per_setting", c.pairs_per_setting);
    c.background_per_setting = n.value("background_per_setting", c.background_per_setting);
    c.seed = n.value("seed", c.seed);
  }
  c.ceiling_v0 = j.value("ceiling_v0", c.ceiling_v0);
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: parse error in '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  return nlohmann::json{
      {"geometry",
       {{"slit_distance_D_mm", c.slit_distance_D_mm},
        {"slm_distance_L_mm", c.slm_distance_L_mm},
        {"pixel_pitch_h_um", c.pixel_pitch_h_um},
        {"slit_width_mm", c.slit_width_mm}}},
      {"spectrum", {{"fwhm_mrad", c.fwhm_mrad}, {"aperture_mrad", c.aperture_mrad}}},
      {"grating",
       {{"enabled", c.grating_enabled},
        {"period_mm", c.grating_period_mm},
        {"open_fraction", c.grating_open_fraction},
        {"phase_offset_mrad", c.grating_phase_offset_mrad}}},
      {"slm",
       {{"discretized", c.slm_discretized}, {"a_opt_rad_per_pixel", c.a_opt_rad_per_pixel}}},
      {"noise",
       {{"pairs_per_setting", c.pairs_per_setting},
        {"background_per_setting", c.background_per_setting},
        {"seed", c.seed}}},
      {"ceiling_v0", c.ceiling_v0}};
}

}  // namespace entsim
