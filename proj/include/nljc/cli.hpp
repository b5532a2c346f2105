// cli.hpp - run configuration, result emission and the command-line driver.
//
// Config files use a flat `section.key = value` grammar; `#` starts a
// comment. Every emitted CSV/JSON file embeds the full resolved config so
// that a run can be reproduced from its output alone.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nljc/dynamics.hpp"
#include "nljc/fock.hpp"
#include "nljc/phasespace.hpp"

namespace nljc {

enum class MotionKind { coherent, number, thermal };
enum class ScheduleKind { random, linear };

struct RunConfig {
  // model
  double eta = 0.3;
  double delta_phi = 0.0;
  int k_sideband = 0;
  double delta_omega = 20.0;
  double nu = 5000.0;
  double omega21 = 1e5;
  double kappa_phase = 0.0;
  Complex beta0{100.0, 0.0};

  // motional input
  MotionKind motion = MotionKind::coherent;
  Complex alpha0{2.8284271247461903, 0.0};
  int motion_number = 1;
  double thermal_mean = 1.0;

  // truncation
  int n_max = 64;
  double tail_tol = 1e-10;

  // criteria scan
  double t_start = 0.0;
  double t_end = 0.5;
  int n_points = 200;

  // single-time state for pfunc / measure
  double state_t = 0.2;

  // phase-space grid; center defaults to alpha0
  std::optional<Complex> grid_center;
  double half_extent = 5.0;
  int n_side = 41;

  FilterSpec filter;
  PMethod method = PMethod::series;

  // measurement
  double kappa_prime = 1.0;
  ScheduleKind schedule = ScheduleKind::random;
  std::optional<int> n_schedules;  // empty: oversampling * unknowns
  double oversampling = 1.25;
  double tau_step = 2.0;           // linear family
  std::optional<long> shots;       // empty: ideal statistics
  int replicates = 8;              // shot-noise repetitions for standard errors
  double fd_step = 0.02;
  bool richardson = true;
  double wigner_half_extent = 6.0;
  int wigner_n_side = 49;
  bool p_maps = true;
  int table_stride = 48;         // every n-th Wigner-grid point in the rho_nn table

  // oracle check
  std::optional<int> cavity_dim;
  std::optional<int> motional_dim;
  int oracle_points = 20;
  double oracle_t_end = 1.0;
  double oracle_threshold = 1e-8;
  std::optional<double> oracle_eta;  // negative control: eta used by the oracle only

  std::string out_dir = ".";
  std::uint64_t seed = 0;

  Truncation truncation() const { return Truncation(n_max, tail_tol); }
  ModelParams model_params() const;
  Complex center() const { return grid_center.value_or(alpha0); }
  PhaseGrid grid() const { return PhaseGrid(center(), half_extent, n_side); }

  /// Resolved `key = value` pairs in documentation order; parsing them back
  /// reproduces this config.
  std::vector<std::pair<std::string, std::string>> echo() const;

  /// Cross-field checks; throws ConfigError naming the offending key.
  void validate() const;
};

/// Applies one `key = value` setting. Throws ConfigError on unknown keys or
/// malformed values.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value,
                   int line = 0);

RunConfig parse_config(std::istream& in);
RunConfig parse_config_file(const std::filesystem::path& path);

/// Keys understood by apply_setting, in echo order.
std::vector<std::string> config_keys();

/// %.17g formatting used for every emitted number.
std::string format_number(double x);

/// Subcommands. Each writes its files under config.out_dir and returns the
/// process exit status (0 success, 1 failed check).
int cmd_criteria(const RunConfig& config);
int cmd_pfunc(const RunConfig& config);
int cmd_oracle_check(const RunConfig& config);
int cmd_measure(const RunConfig& config);

/// Full command-line driver: parses arguments, dispatches, and maps
/// exceptions to exit statuses (2 config, 3 ill-conditioned design,
/// 4 truncation/domain).
int run_cli(int argc, const char* const* argv);

}  // namespace nljc
