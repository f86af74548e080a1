#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "resostab/averaging.hpp"
#include "resostab/core.hpp"
#include "resostab/tfseries.hpp"

namespace resostab {

// Physical input of the restricted problem. Units: G_N m0 = 1 is customary but not required.
struct RestrictedParams {
  double Gm0 = 1.0;
  double omega_g = 1.0;  // angular speed of the perturbing body
  int p_int = 3, q_int = 1;
  double eps = 0.0;
  double time_unit_years = 1.0;
};

struct RestrictedSetup {
  double Gm0 = 1.0;
  double mu = 1.0;  // (G_N m0)^(-2/3)
  double omega_g = 1.0;
  double L0 = 0.0, G0 = 0.0;
  std::array<double, 2> omega{};  // (omega_l, omega_g)
  int p_int = 3, q_int = 1;
  double T = 0.0;
  RestrictedWidthSet widths{0, 0, 1, 1, 1, 1};
  TaylorFourierSeries H1;
  double eps = 0.0;
  double kappa = 0.0, K = 0.0;
  double time_unit_years = 1.0;

  // Frequencies of (l, g) under H0: dl/dt = 1/L^3, dg/dt = -omega_g.
  std::array<double, 2> flow_frequencies() const { return {omega[0], -omega[1]}; }
};

// Builds the setup; H1's base point must sit at the resonant L0 (G0 is read from it).
RestrictedSetup make_restricted_setup(const RestrictedParams& par, const RestrictedWidthSet& widths,
                                      const TaylorFourierSeries& H1);
RestrictedSetup with_widths(const RestrictedSetup& s, const RestrictedWidthSet& widths);

// H0(L, G) = -mu^3 (G_N m0)^2 / (2 L^2) - omega_g G.
double restricted_H0(const RestrictedSetup& s, double L, double G);

// |d^2 H0/dL^2| = 3/L^4 over the disk of radius rho_L + 4 r_L around L0.
std::array<double, 2> restricted_convexity(double L0, const RestrictedWidthSet& w);

// sup_{|z| <= rho_L + 3 r_L} |1/(L0+z)^3 - 1/L0^3| / s_l.
double restricted_delta(double L0, const RestrictedWidthSet& w);

// Taylor polynomial of the order-two remainder of -1/(2L^2) at L0, degrees 2..cap.
TaylorFourierSeries remainder_taylor(const RestrictedSetup& s, Caps caps);

// Non-resonant and resonant parts of the perturbation after N preliminary averaging steps
// (N = 0 or 1), with their vector-field components precomputed.
struct PreparedPerturbation {
  int preliminary_steps = 0;
  TaylorFourierSeries phi1;   // generating function of the averaging step (empty for N = 0)
  TaylorFourierSeries f;      // non-resonant part
  TaylorFourierSeries g_res;  // resonant part without the remainder of H0
  std::array<TaylorFourierSeries, 4> f_field, g_field;  // indexed by Comp
  double averaging_discarded = 0.0;
  bool cap_overflow = false;
  bool nonresonant_empty = false;
};
PreparedPerturbation prepare_perturbation(const RestrictedSetup& s, int N, Caps caps = {4, 12},
                                          int order = 2);

enum class Estimator { majorant, sampled };

struct RestrictedBoundOptions {
  Estimator estimator = Estimator::majorant;
  std::size_t n_points = 0;  // sampling is skipped when zero
  std::uint64_t seed = 1;
};

struct RestrictedBoundsReport {
  RestrictedFieldBounds bounds;
  std::array<ComponentSup, 4> f_field{}, g_field{};  // raw sups before dividing by the widths
  ComponentSup f_fun{}, g_fun{};
  bool nonresonant_empty = false;
};

RestrictedBoundsReport restricted_field_bounds(const RestrictedSetup& s, const PreparedPerturbation& pp,
                                               const RestrictedBoundOptions& opt = {});
RestrictedBoundsReport restricted_field_bounds(const RestrictedSetup& s);

// sup |H1| on the complex domain D_1 and on the real box of the confinement domain.
double h1_sup_complex(const RestrictedSetup& s, const RestrictedBoundOptions& opt = {});
double h1_sup_real(const RestrictedSetup& s, std::size_t n_points, std::uint64_t seed);

struct RestrictedBoundFunctions {
  double T = 0.0;
  RestrictedFieldBounds b;
  RestrictedWidthSet w{0, 0, 1, 1, 1, 1};
  double chi0() const;
  double Theta0() const;
};

double upsilon0_component(Comp j, double x, const RestrictedBoundFunctions& bf);
double restricted_zeta0(double x, const RestrictedBoundFunctions& bf);

struct RestrictedScheduleVerdict {
  bool valid = false;
  std::array<double, 4> margin_q{};  // q_j - 2 upsilon0^j(m)
  double margin_p = 0.0;
  double margin_step = 0.0;  // 1 - (T m / 2) max_j eta0^j
  std::string failing;
};
RestrictedScheduleVerdict validate_restricted_schedule(const RestrictedBoundFunctions& bf,
                                                       const RestrictedSchedule& s);
int max_valid_m_restricted(const RestrictedBoundFunctions& bf, double p, std::array<double, 4> q, int m_cap);
bool tight_restricted_schedule(const RestrictedBoundFunctions& bf, int m, double slack, RestrictedSchedule& out);

struct RestrictedNFState {
  std::array<double, 4> eta{}, gamma{};
  double f_norm = 0, g_norm = 0;
  std::array<double, 4> Delta{};  // (T eta0^j / 2)(1 - q_j^m)/(1 - q_j)
};
struct RestrictedNFResult {
  RestrictedNFState loop, closed;
};
RestrictedNFResult restricted_nf_recursion(const RestrictedBoundFunctions& bf, const RestrictedSchedule& s);
RestrictedNFState restricted_nf_closed_form(const RestrictedBoundFunctions& bf, const RestrictedSchedule& s);

struct RestrictedInput {
  RestrictedSetup setup;
  RestrictedFieldBounds bounds;
  RestrictedSchedule schedule;
  double L_init = 0.0, G_init = 0.0;
  double e0 = 0.1;
  double H1_sup_complex = 0.0;
  double H1_sup_real = 0.0;
  // Bound on the L-displacement of the preliminary averaging map; the stability estimates control the
  // averaged action, the original one may differ by this amount at each end.
  double transform_shift_L = 0.0;
};

// sup |d phi1 / dl| on D_1 (majorant), zero when there was no averaging step.
double averaging_shift_L(const RestrictedSetup& s, const PreparedPerturbation& pp);

double restricted_Delta(const RestrictedInput& in, Comp j);
std::array<double, 2> c3_c4(const RestrictedInput& in);
double restricted_L_tilde(const RestrictedInput& in);
double restricted_b(const RestrictedInput& in, double t);
double restricted_Lf(const RestrictedInput& in, double t);
double restricted_Lf_at_tbar(const RestrictedInput& in);
double restricted_V(const RestrictedInput& in);
double restricted_W(const RestrictedInput& in);

struct GCheck {
  bool ok = false;
  double margin = 0.0;  // rhs - lhs
  double lhs = 0.0, rhs = 0.0;
};
GCheck g_confinement_check(const RestrictedInput& in);

// Worst-case |1/(2L(t)^2) - 1/(2L(0)^2)| + 2 eps sup|H1| for |L(t) - L_start| <= Lf.
double b_bound(const RestrictedSetup& s, double L_start, double Lf, double H1_sup_real);

struct EccentricityBand {
  double e_lo = 0.0, e_hi = 1.0;
  double A_plus = 0.0, A_minus = 0.0;
  bool clamped = false;
};
// Band for e(t) given L(0) = L_start, |L(t) - L(0)| <= Lf and the bound B; the semi-major
// axis a(t) is taken at its least favourable value in the allowed L range.
EccentricityBand eccentricity_band(const RestrictedSetup& s, double L_start, double Lf, double e0, double B);

struct RestrictedReport {
  double C3 = 0, C4 = 0, t_bar = 0, log10_t_bar = -INFINITY;
  bool unbounded = false;
  double V = 0, W = 0;
  std::array<double, 4> Delta{};
  double L_tilde = 0, Lf_0 = 0, Lf_tbar = 0;
  GCheck g_check;
  EccentricityBand band_0, band_tbar;
  bool c3_positive = false;
  bool all() const { return c3_positive && g_check.ok; }
  std::string first_failure() const;
};
RestrictedReport evaluate_restricted(const RestrictedInput& in);

}  // namespace resostab
