#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "resostab/optimizer.hpp"
#include "resostab/verify.hpp"

namespace resostab::app {

using json = nlohmann::json;

// Malformed or incomplete configuration. The message names the offending key.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum ExitCode : int { kSuccess = 0, kInfeasible = 1, kConfigError = 2 };

// Doubles are written as JSON numbers when finite and as "inf", "-inf", "nan" otherwise.
json number(double x);
double to_double(const json& j);

// ------------------------------------------------------------------ configs

struct ScheduleConfig {
  QMode mode = QMode::tight;
  bool fixed = false;
  int m = 1;
  double p = 0.3;
  std::array<double, 4> q{0.3, 0.3, 0.3, 0.3};  // planetary uses q[0], q[1]
  double slack = 1e-9;
  int m_cap = 1000;
  std::vector<double> p_grid{0.3, 0.45, 0.6}, q_grid{0.3, 0.45, 0.6};
};

struct PlanetaryRowSpec {
  double log10_eps = 0.0;
  double r_rel = 0.0, s = 0.0, beta = 1.0;
};

struct PlanetaryConfig {
  double G = 0.0;  // defaults to 4 pi^2 (AU, yr, solar masses)
  double m0 = 1.0;
  double log10_eps = 0.0;  // -inf encodes eps = 0
  bool eps_given = false;
  std::optional<std::array<double, 2>> masses;  // explicit (m1, m2) instead of log10_eps
  double m2_over_m1 = 0.0;
  double a1 = 5.2038;
  int p_int = 5, q_int = 2;
  std::array<double, 2> e_init{0.04838624, 0.05386179};
  XiMode xi_mode = XiMode::per_body;
  double xi0 = 0.0;
  double rho_rel = 0.0, R_rel = 0.0;
  HPModel hp;
  std::optional<std::array<double, 3>> widths;  // r / max Lambda, s, beta
  ScheduleConfig schedule;
  SearchSpace search;
  std::vector<double> sweep_log10_eps;
  std::vector<PlanetaryRowSpec> sweep_rows;
  double Rf_cap_rel = 0.0;
  double time_unit_years = 1.0;
  std::optional<PlanetaryRowSpec> calibrate_at;
  int calibrate_m = 0;
  std::uint64_t seed = 1;

  bool eps_zero() const;
  PlanetaryProblem problem(double log10_eps_override) const;
  PlanetaryProblem problem() const { return problem(log10_eps); }
};

struct VerifyConfig {
  double periods = 1e6;  // of the fast angle
  int steps_per_period = 8;
  std::size_t sample_every = 64;
  double drift_tol = 1e-10;
  double g_slack = 1e-12;
  bool write_trajectory = true;
  std::array<double, 4> initial{NAN, NAN, 0.0, 0.0};  // (L, G, l, g); NaN picks the default
};

struct RestrictedConfig {
  std::string harmonic_file;
  RestrictedParams params;
  double log10_eps = 0.0;
  bool eps_given = false;
  std::optional<std::array<double, 4>> widths;  // r_L, r_G, s_l, s_g
  double rho_L = 0.0, rho_G = 0.0;
  double L_init = 0.0, G_init = 0.0;
  std::optional<double> e0;
  RestrictedBoundOptions estimator;
  int preliminary_averaging = 0;
  Caps caps{4, 12};
  ScheduleConfig schedule;
  SearchSpace search;
  std::size_t real_sup_points = 20000;
  std::optional<double> discard_threshold;
  VerifyConfig verify;
  std::vector<double> sweep_log10_eps;
  std::vector<int> sweep_N{0, 1};
  double sweep_min_years = 0.0;

  bool eps_zero() const;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> preliminary_averaging;
};

// base_dir resolves relative file names inside the config.
PlanetaryConfig parse_planetary_config(const json& cfg, const Overrides& ov = {});
RestrictedConfig parse_restricted_config(const json& cfg, const std::string& base_dir, const Overrides& ov = {});

json load_config_file(const std::string& path);

// ------------------------------------------------------------------ commands

struct OutputFile {
  std::string name;
  std::string content;
};

struct CommandResult {
  int exit_code = kSuccess;
  std::string message;  // one line for the terminal
  json report;
  std::vector<OutputFile> files;
};

CommandResult cmd_planetary(const PlanetaryConfig& c);
CommandResult cmd_restricted(const RestrictedConfig& c);
CommandResult cmd_scan_planetary(const PlanetaryConfig& c);
CommandResult cmd_scan_restricted(const RestrictedConfig& c);
CommandResult cmd_verify(const RestrictedConfig& c);
CommandResult cmd_tables_planetary(const PlanetaryConfig& c);
CommandResult cmd_tables_restricted(const RestrictedConfig& c);

// Parses the config, dispatches on command and config "kind", and maps errors to exit codes.
CommandResult run(const std::string& command, const json& cfg, const std::string& base_dir,
                  const Overrides& ov = {});

// ------------------------------------------------------------------ serialization

json to_json(const PlanetaryPoint& pt, double time_unit_years);
json to_json(const RestrictedPoint& pt);
json to_json(const ScanResult& scan, const std::vector<std::string>& axis_names,
             const std::vector<std::string>& aux_names);

std::string stability_csv(const std::vector<TableRow>& rows);
std::string widths_csv(const std::vector<TableRow>& rows);

struct AveragingRow {
  int N = 0;
  double log_eps = 0.0;
  bool feasible = false;
  bool unbounded = false;
  std::string failing;
  int m = 0;
  double t_bar_years = 0.0, t_bar_internal = 0.0;
  double log10_t_bar_years = -INFINITY;
};
AveragingRow averaging_row(int N, double log_eps, const RestrictedPoint& pt);
std::string averaging_csv(const std::vector<AveragingRow>& rows);

std::string trace_csv(const ScanResult& scan, const std::vector<std::string>& axis_names,
                      const std::vector<std::string>& aux_names);

int cli_main(int argc, char** argv);

}  // namespace resostab::app
