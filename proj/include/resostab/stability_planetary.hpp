#pragma once

#include <array>
#include <cmath>
#include <string>

#include "resostab/averaging.hpp"
#include "resostab/core.hpp"
#include "resostab/planetary.hpp"

namespace resostab {

// How the initial cartesian radius enters the eccentricity bounds.
//  common:   one xi0 for both planets, e_j(0) evaluated with Lambda_1^0 - R for both.
//  per_body: each planet has its own xi0_j and uses its own Lambda_j^0 - R.
enum class XiMode { common, per_body };

struct PlanetaryStabilityInput {
  WidthSet widths{0.0, 1.0, 1.0, 0.0, 1.0};
  FieldBounds bounds;
  Schedule schedule;
  ConvexityConstants convexity;
  ResonanceSpec resonance;
  double R = 0.0;
  XiMode xi_mode = XiMode::common;
  double xi0 = 0.0;
  std::array<double, 2> xi0_body{0.0, 0.0};
  double T() const { return resonance.T; }
  double effective_xi0() const;
};

// xi0 that corresponds to eccentricity e for action Lambda (inverse of the max-eccentricity map).
double xi0_from_eccentricity(double Lambda, double R, double e);

double c1(const PlanetaryStabilityInput& in);
double c2(const PlanetaryStabilityInput& in);
double r_tilde(const PlanetaryStabilityInput& in);

struct StabilityTime {
  double t_bar = 0.0;
  double log10_t_bar = -INFINITY;  // finite even when t_bar overflows
  bool unbounded = false;  // eta0 = 0
};
StabilityTime stability_time(const PlanetaryStabilityInput& in);

double a_of_t(const PlanetaryStabilityInput& in, double t);
double confinement_radius(const PlanetaryStabilityInput& in, double t);
// R_f at t_bar (R_f(0) when t_bar is infinite or zero), evaluated without forming q1^-m.
double confinement_radius_at_tbar(const PlanetaryStabilityInput& in);

struct EccentricityEnvelope {
  std::array<double, 2> e_initial{};  // maximal initial eccentricities compatible with xi0
  double N_minus = 0.0;
  std::array<double, 2> e_bar{};
  std::array<bool, 2> saturated{false, false};
};
EccentricityEnvelope eccentricity_envelopes(const PlanetaryStabilityInput& in, double t);
EccentricityEnvelope eccentricity_envelopes_for_radius(const PlanetaryStabilityInput& in, double Rf);

struct ConditionFlags {
  bool c1_positive = false;
  double c1_margin = 0.0;
  bool xi_cover = false;  // xi + (1 - Delta_cart) u > xi0
  double xi_cover_margin = 0.0;
  bool momentum = false;  // ... >= sqrt(L1 + L2 + 2 (rho + r + Delta_aa r) - N-)
  double momentum_margin = 0.0;
  bool momentum_rf = false;  // ... >= sqrt(L1 + L2 + 2 R_f(t_bar) - N-)
  double momentum_rf_margin = 0.0;
  bool all() const { return c1_positive && xi_cover && momentum && momentum_rf; }
  std::string first_failure() const;
};
ConditionFlags check_conditions(const PlanetaryStabilityInput& in);

// Smallest xi satisfying both cartesian conditions (with a relative cushion).
double minimal_xi(const PlanetaryStabilityInput& in, double cushion = 1e-9);

struct StabilityReport {
  double C1 = 0, C2 = 0, t_bar = 0, log10_t_bar = -INFINITY;
  bool unbounded = false;
  double R_tilde = 0, Delta_aa = 0, Delta_cart = 0;
  double Rf_tbar = 0, Rf_0 = 0;
  double N_minus = 0;
  std::array<double, 2> e_bar0{}, e_bar_tbar{};
  ConditionFlags flags;
};
StabilityReport evaluate_planetary(const PlanetaryStabilityInput& in);

}  // namespace resostab
