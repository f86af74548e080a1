#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "resostab/planetary.hpp"
#include "resostab/restricted.hpp"
#include "resostab/stability_planetary.hpp"

namespace resostab {

struct Axis {
  std::string name;
  double lo = 0.0, hi = 0.0;
  bool log_scale = true;
  int coarse = 9;  // points of the initial sweep along this axis
};

struct SearchSpace {
  std::vector<Axis> axes;
  int rounds = 3;
  double shrink = 4.0;
  int refine_points = 9;
  unsigned n_threads = 0;  // 0: hardware concurrency
  void validate() const;
};

struct PointEval {
  bool feasible = false;
  double objective = 0.0;  // larger is better; only meaningful when feasible
  double violation = 0.0;  // >= 0, how far an infeasible point is from feasibility
  std::string failing;
  std::vector<double> aux;  // problem-specific values kept in the trace
};

using Objective = std::function<PointEval(const std::vector<double>&)>;

struct TracePoint {
  int round = 0;  // 0: coarse sweep, k: k-th refinement round
  std::vector<double> x;
  PointEval eval;
};

struct ScanResult {
  bool found = false;
  std::vector<double> best_x;
  PointEval best;
  std::vector<TracePoint> trace;
  std::string tightest_failure;  // set when nothing is feasible
  std::vector<std::size_t> pareto;  // trace indices, see pareto_slice
};

// Coarse sweep over the product grid, then coordinate descent with shrinking windows.
// Deterministic: ties resolve to the earliest trace index.
ScanResult optimize(const SearchSpace& space, const Objective& objective);

// Non-dominated feasible trace points for (maximise objective, minimise aux[k]).
std::vector<std::size_t> pareto_slice(const std::vector<TracePoint>& trace, std::size_t aux_index);

// ---------------------------------------------------------------- planetary problem

enum class QMode { tight, grid };

// HP_norm4 = hp_scale * |H_K(Lambda^0)| * exp(hp_lambda_s * 4 s)
struct HPModel {
  double hp_scale = 0.1;
  double hp_lambda_s = 0.0;
  double operator()(double HK_abs, double s) const;
};

struct PlanetaryProblem {
  MassConfig mass{1.0, 1e-3, 1e-3, 1.0};
  ResonanceSpec res;
  HPModel hp;
  double rho = 0.0, R = 0.0;
  XiMode xi_mode = XiMode::per_body;
  std::array<double, 2> e_init{0.0, 0.0};  // per-body initial eccentricities
  double xi0_common = 0.0;
  QMode q_mode = QMode::tight;
  std::optional<Schedule> fixed_schedule;  // overrides q_mode when set
  double slack = 1e-9;
  int m_cap = 1000;
  std::vector<double> p_grid{0.3, 0.45, 0.6}, q_grid{0.3, 0.45, 0.6};
  double Rf_cap = 0.0;  // relative to max Lambda; 0 disables the cap
  double lambda_max() const { return std::max(res.Lambda0[0], res.Lambda0[1]); }
};

// eps sets m1 = eps m0 and m2 = eps m0 * ratio2 (ratio2 = m2/m1 of the reference system).
PlanetaryProblem make_planetary_problem(double log10_eps, double G_N, double m0, double ratio2, double a1,
                                        int p_int, int q_int);

struct PlanetaryPoint {
  bool feasible = false;
  std::string failing;
  double violation = 0.0;
  WidthSet widths{0, 1, 1, 0, 1};
  FieldBounds bounds;
  Schedule schedule;
  PlanetaryStabilityInput input;
  StabilityReport report;
};

// Widths from (r / max Lambda, s, beta); xi is set to the smallest value passing the
// cartesian conditions. In tight mode every valid m is tried and the best t_bar kept.
PlanetaryPoint evaluate_planetary_point(const PlanetaryProblem& pb, double r_rel, double s, double beta);

// Scale of the HP model for which the best m at fixed widths equals target_m, by bisection
// on log(scale) (best m decreases with the scale). Returns the scale and the attained m.
struct Calibration {
  double hp_scale = 0.0;
  int m = 0;
  bool exact = false;
};
Calibration calibrate_hp_scale(PlanetaryProblem pb, double r_rel, double s, double beta, int target_m,
                               double lo = 1e-6, double hi = 1e3);

struct PlanetaryScan {
  ScanResult scan;
  PlanetaryPoint best;
  bool reverified = false;
};
// Axes: r_rel, s, beta. aux = {m, t_bar, Rf/maxLambda, e1, e2, xi}.
PlanetaryScan optimize_planetary(const PlanetaryProblem& pb, const SearchSpace& space);

struct TableRow {
  double log_eps = 0.0;
  bool feasible = false;
  bool unbounded = false;
  std::string failing;
  int m = 0;
  double t_bar_years = 0.0, t_bar_internal = 0.0;
  double log10_t_bar_years = -INFINITY;  // finite where t_bar itself overflows
  double Rf_rel = 0.0;
  std::array<double, 2> e_bar{};
  double r_rel = 0.0, s = 0.0, one_minus_beta = 0.0, xi = 0.0;
};
TableRow planetary_row(double log_eps, const PlanetaryPoint& pt, double time_unit_years);

// Rows ordered by increasing log eps; infeasible rows are kept and marked.
// A log eps of -inf (eps = 0) yields the unbounded sentinel row.
std::vector<TableRow> epsilon_sweep(const std::vector<double>& log_eps_grid,
                                    const std::function<PlanetaryProblem(double)>& make_problem,
                                    const SearchSpace& space, double time_unit_years);

// ---------------------------------------------------------------- restricted problem

struct RestrictedProblem {
  RestrictedSetup base;
  PreparedPerturbation prepared;
  RestrictedBoundOptions estimator;
  double rho_L = 0.0, rho_G = 0.0;
  double L_init = 0.0, G_init = 0.0, e0 = 0.1;
  QMode q_mode = QMode::tight;
  std::optional<RestrictedSchedule> fixed_schedule;
  double slack = 1e-9;
  int m_cap = 1000;
  std::vector<double> p_grid{0.3, 0.45, 0.6}, q_grid{0.3, 0.45, 0.6};
  std::size_t real_sup_points = 20000;
  std::uint64_t seed = 1;
};

RestrictedProblem make_restricted_problem(const RestrictedSetup& base, int N, Caps caps = {4, 12});

struct RestrictedPoint {
  bool feasible = false;
  std::string failing;
  double violation = 0.0;
  RestrictedSetup setup;
  RestrictedBoundsReport bounds;
  RestrictedSchedule schedule;
  RestrictedInput input;
  RestrictedReport report;
};

// widths = (r_L, r_G, s_l, s_g). With full = true the real sup of H1 is sampled for the
// eccentricity band; otherwise the band is left at its trivial value.
RestrictedPoint evaluate_restricted_point(const RestrictedProblem& pb, std::array<double, 4> widths,
                                          bool full = false);

struct RestrictedScan {
  ScanResult scan;
  RestrictedPoint best;
  bool reverified = false;
};
// Axes: r_L, r_G, s_l, s_g. aux = {m, t_bar (internal), Lf(t_bar)}.
RestrictedScan optimize_restricted(const RestrictedProblem& pb, const SearchSpace& space);

}  // namespace resostab
