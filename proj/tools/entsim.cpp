// Command-line front end: visibility sweeps, synthetic tomography and Bell
// experiments, and coincidence-scan factorization tests, emitting CSV/JSON
// for external plotting.

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "entsim/bell.hpp"
#include "entsim/channel.hpp"
#include "entsim/config.hpp"
#include "entsim/counting.hpp"
#include "entsim/io.hpp"
#include "entsim/qstate.hpp"
#include "entsim/scan.hpp"
#include "entsim/tomography.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

struct GlobalArgs {
  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::string grating;  // "", "on", "off", "both"
};

entsim::ExperimentConfig load(const GlobalArgs& args) {
  entsim::ExperimentConfig config = args.config_path.empty()
                                        ? entsim::ExperimentConfig{}
                                        : entsim::load_config(args.config_path);
  if (args.seed) config.seed = *args.seed;
  if (args.grating == "on") config.grating_enabled = true;
  if (args.grating == "off") config.grating_enabled = false;
  config.validate();
  return config;
}

/// Stream to --out when given, stdout otherwise.
class OutputTarget {
public:
  explicit OutputTarget(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw entsim::ConfigError("cannot open output path '" + path + "'");
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }
  bool to_file() const { return file_.is_open(); }

private:
  std::ofstream file_;
};

std::vector<double> linspace(double lo, double hi, int steps) {
  std::vector<double> grid(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i)
    grid[static_cast<std::size_t>(i)] =
        steps == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (steps - 1);
  return grid;
}

int run_sweep(const GlobalArgs& args, double a_min, double a_max, int steps) {
  if (steps < 2) throw entsim::ConfigError("sweep: steps must be >= 2");
  if (a_max < a_min) throw entsim::ConfigError("sweep: a_max must be >= a_min");
  const entsim::ExperimentConfig config = load(args);
  const auto grid = linspace(a_min, a_max, steps);
  OutputTarget out(args.out_path);
  auto emit = [&](bool grating_on) {
    entsim::ExperimentConfig c = config;
    c.grating_enabled = grating_on;
    const auto curve = entsim::sweep_visibility(c.spectrum(), c.mask(), c.geometry(),
                                                grid, c.ceiling_v0, c.slm_discretized);
    entsim::write_sweep_csv(out.stream(), curve);
  };
  if (args.grating == "both") {
    out.stream() << "# grating=on\n";
    emit(true);
    out.stream() << "# grating=off\n";
    emit(false);
  } else {
    emit(config.grating_enabled);
  }
  return kExitOk;
}

entsim::Complex effective_eps(const entsim::ExperimentConfig& config, double a) {
  const entsim::SlmPhaseProfile slm{a, 0.0, config.slm_discretized};
  const auto eps =
      entsim::decoherence_factor(config.spectrum(), config.mask(), config.geometry(), slm);
  return config.ceiling_v0 * eps.value;
}

int run_tomo(const GlobalArgs& args, double a_value) {
  const entsim::ExperimentConfig config = load(args);
  const entsim::Complex eps = effective_eps(config, a_value);
  const entsim::DensityMatrix4 true_state = entsim::channel_state(eps);
  const auto projectors = entsim::tomographic_set();
  const auto records = entsim::simulate_counts(true_state, projectors, config.noise());
  const auto result =
      entsim::mle_reconstruct(records, config.pairs_per_setting, config.background_per_setting);

  entsim::json counts = entsim::json::array();
  for (std::size_t i = 0; i < records.size(); ++i)
    counts.push_back({{"setting_index", i},
                      {"ket1", records[i].projector.ket1},
                      {"ket2", records[i].projector.ket2},
                      {"count", records[i].count},
                      {"expected", records[i].expected}});
  const entsim::json report{
      {"a", a_value},
      {"eps_effective", {{"re", eps.real()}, {"im", eps.imag()}}},
      {"true_state", entsim::density_matrix_to_json(true_state)},
      {"counts", counts},
      {"reconstructed_state", entsim::density_matrix_to_json(result.state)},
      {"fidelity", entsim::fidelity(true_state, result.state)},
      {"concurrence_true", entsim::concurrence_wootters(true_state)},
      {"concurrence_reconstructed", entsim::concurrence_wootters(result.state)},
      {"diagnostics",
       {{"log_likelihood", result.log_likelihood},
        {"iterations", result.iterations},
        {"converged", result.converged},
        {"gradient_norm", result.gradient_norm}}}};
  OutputTarget out(args.out_path);
  out.stream() << report.dump(2) << '\n';
  return result.converged ? kExitOk : kExitNumerical;
}

int run_bell(const GlobalArgs& args, double a_value,
             const std::vector<double>& settings_deg) {
  const entsim::ExperimentConfig config = load(args);
  const entsim::Complex eps = effective_eps(config, a_value);
  const entsim::DensityMatrix4 state = entsim::channel_state(eps);
  entsim::ChshSettings settings = entsim::canonical_chsh_settings();
  if (!settings_deg.empty()) {
    if (settings_deg.size() != 4)
      throw entsim::ConfigError("bell: --settings needs exactly 4 angles");
    settings = {settings_deg[0], settings_deg[1], settings_deg[2], settings_deg[3]};
  }

  const double analytic_b = entsim::chsh(state, settings);
  const double max_b = entsim::chsh_max(state);
  const entsim::ChshEstimate sim = entsim::simulate_chsh(state, settings, config.noise());

  const entsim::json report{
      {"a", a_value},
      {"eps_effective", {{"re", eps.real()}, {"im", eps.imag()}}},
      {"settings_deg",
       {settings.beta1, settings.beta1_prime, settings.beta2, settings.beta2_prime}},
      {"B_analytic", analytic_b},
      {"B_max", max_b},
      {"B_simulated", sim.b},
      {"B_sigma", sim.sigma},
      {"violation_significance", sim.significance},
      {"violates", sim.b - 2.0 > 2.0 * sim.sigma}};
  OutputTarget out(args.out_path);
  out.stream() << report.dump(2) << '\n';
  return kExitOk;
}

int run_scan(const GlobalArgs& args, int grid_points, double spacing_mrad) {
  if (grid_points < 2) throw entsim::ConfigError("scan: grid must have at least 2 points");
  if (!(spacing_mrad > 0.0)) throw entsim::ConfigError("scan: spacing must be > 0");
  const entsim::ExperimentConfig config = load(args);
  std::vector<double> positions(static_cast<std::size_t>(grid_points));
  for (int i = 0; i < grid_points; ++i)
    positions[static_cast<std::size_t>(i)] =
        (static_cast<double>(i) - (grid_points - 1) / 2.0) * spacing_mrad * 1e-3;
  const auto scan = entsim::coincidence_scan(config.spectrum(), config.spectrum(),
                                             positions, positions, config.noise());
  const auto chi2 = entsim::factorization_chi2(scan);
  const double fwhm_mrad = entsim::scan_signal_fwhm(scan) * 1e3;

  OutputTarget out(args.out_path);
  entsim::write_scan_csv(out.stream(), scan);
  const entsim::json report{{"chi2", chi2.chi2},
                            {"dof", chi2.dof},
                            {"p_value", chi2.p_value},
                            {"marginal_fwhm_mrad", fwhm_mrad}};
  // Count matrix is the primary output; the test report goes to stdout when
  // the CSV went to a file, to stderr otherwise.
  (out.to_file() ? std::cout : std::cerr) << report.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Non-Markovian dephasing channel simulator for polarization-entangled "
               "photon pairs"};
  app.require_subcommand(1);

  GlobalArgs args;
  app.add_option("--config", args.config_path, "JSON configuration file")
      ->check(CLI::ExistingFile);
  app.add_option("--out", args.out_path, "output path (default: stdout)");
  app.add_option("--seed", args.seed, "override the configured RNG seed");
  app.add_option("--grating", args.grating, "grating override: on|off|both")
      ->check(CLI::IsMember({"on", "off", "both"}));

  auto* sweep = app.add_subcommand("sweep", "visibility curve V(a) over a grid");
  double a_min = 0.0, a_max = 0.6;
  int steps = 121;
  sweep->add_option("--a-min", a_min, "grid start (rad/pixel)");
  sweep->add_option("--a-max", a_max, "grid end (rad/pixel)");
  sweep->add_option("--steps", steps, "number of grid points (>= 2)");

  auto* tomo = app.add_subcommand("tomo", "simulate counts and reconstruct the state");
  double tomo_a = 0.0;
  tomo->add_option("--a", tomo_a, "evolution parameter (rad/pixel)");

  auto* bell = app.add_subcommand("bell", "CHSH Bell analysis at one evolution parameter");
  double bell_a = 0.0;
  std::vector<double> settings_deg;
  bell->add_option("--a", bell_a, "evolution parameter (rad/pixel)");
  bell->add_option("--settings", settings_deg,
                   "four analyzer angles in degrees: b1 b1' b2 b2'")
      ->expected(4);

  auto* scan = app.add_subcommand("scan", "coincidence scan and factorization test");
  int grid_points = 5;
  double spacing_mrad = 2.0;
  scan->add_option("--grid", grid_points, "points per axis (>= 2)");
  scan->add_option("--spacing-mrad", spacing_mrad, "grid spacing (mrad)");

  try {
    app.parse(argc, argv);
    if (sweep->parsed()) return run_sweep(args, a_min, a_max, steps);
    if (tomo->parsed()) return run_tomo(args, tomo_a);
    if (bell->parsed()) return run_bell(args, bell_a, settings_deg);
    if (scan->parsed()) return run_scan(args, grid_points, spacing_mrad);
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const entsim::NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const entsim::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const entsim::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}
