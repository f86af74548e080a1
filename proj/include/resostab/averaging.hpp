#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "resostab/core.hpp"
#include "resostab/tfseries.hpp"

namespace resostab {

// Raised by upsilon0 when eta0 = 0: there is nothing to normalise.
struct NoIterationNeeded : std::runtime_error {
  NoIterationNeeded() : std::runtime_error("eta0 = 0: no iteration needed") {}
};
// Raised by Upsilon0 when Xi0 = 0: the problem has no cartesian part.
struct CartesianAbsent : std::runtime_error {
  CartesianAbsent() : std::runtime_error("Xi0 = 0: cartesian part absent") {}
};

struct BoundFunctions {
  double T = 0.0;
  FieldBounds b;
  double beta = 1.0;
  double chi0() const;
  double Theta0() const;
};

double upsilon0(double x, const BoundFunctions& bf);
double Upsilon0(double x, const BoundFunctions& bf);
double zeta0(double x, const BoundFunctions& bf);

struct ScheduleVerdict {
  bool valid = false;
  double margin_q1 = 0.0;    // q1 - 2 upsilon0(m)
  double margin_q2 = 0.0;    // q2 - 2 Upsilon0(m)
  double margin_p = 0.0;     // p - 2 zeta0(m)
  double margin_step = 0.0;  // 1 - T m eta0 / 2
  std::string failing;       // empty when valid
};

ScheduleVerdict validate_schedule(const BoundFunctions& bf, const Schedule& s);

// Largest m <= m_cap for which (p, q1, q2) validate, or 0 if none does.
int max_valid_m(const BoundFunctions& bf, double p, double q1, double q2, int m_cap);

// Smallest admissible factors for m: q1 = 2 upsilon0(m) (1 + slack) and so on.
// Returns false when one of them would reach 2/3 or the step condition fails.
bool tight_schedule(const BoundFunctions& bf, int m, double slack, Schedule& out);

struct StepTrace {
  int l = 0;
  double eta = 0, gamma = 0, Xi = 0, Gamma = 0, f = 0, g = 0;
  double upsilon_l = 0, Upsilon_l = 0, zeta_l = 0;  // sharp per-step values at x = m
};

struct NormalFormState {
  double eta = 0, gamma = 0, Xi = 0, Gamma = 0, f_norm = 0, g_norm = 0;
  double Delta_aa = 0, Delta_cart = 0;
};

struct NormalFormResult {
  Schedule schedule;
  NormalFormState loop;
  NormalFormState closed;
  double inverse_Delta_aa = 0, inverse_Delta_cart = 0;
  std::vector<StepTrace> trace;
};

struct InvalidSchedule : std::runtime_error {
  using std::runtime_error::runtime_error;
};

NormalFormResult nf_recursion(const BoundFunctions& bf, const Schedule& s);
NormalFormState nf_closed_form(const BoundFunctions& bf, const Schedule& s);

struct StepMatrixBound {
  std::array<std::array<double, 8>, 8> M{};  // order I1 I2 x1 x2 t1 t2 y1 y2
  std::array<double, 8> w{};
  std::array<double, 8> bound{};
  double action_ratio = 0.0;  // max_j bound[I_j] / (2 upsilon0(1/alpha) eta0 r)
};

StepMatrixBound step_matrix_bound(const BoundFunctions& bf, double alpha, const WidthSet& w);

// phi_1 with coefficient c / (i k.omega); refuses resonant harmonics.
TaylorFourierSeries homological_solve(const TaylorFourierSeries& f0, std::array<double, 2> omega, double T);

struct FirstOrderAverage {
  TaylorFourierSeries phi1, g0, f0, r1, g1, f1;
  double discarded_mass = 0.0;
  bool cap_overflow = false;
};

// One Lie-series step; r1 is truncated at `order` nested brackets.
FirstOrderAverage first_order_average(const TaylorFourierSeries& H_pert, std::array<double, 2> omega, double T,
                                      Caps caps, int order = 2, double overflow_threshold = 1e-12);

}  // namespace resostab
