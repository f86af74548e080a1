#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "resostab/restricted.hpp"

namespace resostab {

using State4 = std::array<double, 4>;  // (L, G, l, g)

// Equations of motion of H0 + eps H1 for the restricted problem.
class RestrictedFlow {
 public:
  explicit RestrictedFlow(const RestrictedSetup& s);
  void rhs(const State4& y, State4& dy) const;
  double energy(const State4& y) const;
  double H1(const State4& y) const;
  std::size_t evaluations() const { return evals_; }

 private:
  struct Harmonic {
    int k1, k2;
    double weight;  // 2 for a conjugate pair folded into one term, 1 for k = 0
    std::vector<std::array<int, 2>> mono;
    std::vector<cplx> coef;
  };
  // value, dH1/dL, dH1/dG, dH1/dl, dH1/dg at y
  std::array<double, 5> eval(const State4& y) const;

  double c_kepler_, omega_g_, eps_;
  std::array<double, 2> base_;
  int max_deg_ = 0, max_k_ = 0;
  std::vector<Harmonic> harm_;
  mutable std::size_t evals_ = 0;
};

// One step of the extrapolated modified midpoint rule with substeps 2, 4, 6, 8 (order 8).
State4 gbs_step(const RestrictedFlow& flow, const State4& y, double h);
// The same step returned as the increment y(t + h) - y(t).
State4 gbs_increment(const RestrictedFlow& flow, const State4& y, double h);

struct TrajectorySample {
  std::vector<double> t, L, G, l, g, e, a, H, drift;
  bool aborted = false;
  std::string abort_reason;
  double max_drift = 0.0;
  std::size_t steps = 0;
  std::size_t e_clamped = 0;  // samples with G > L clamped to e = 0
};

// Fixed-step integration; a sample is stored every `sample_every` steps and at the end.
TrajectorySample integrate(const RestrictedSetup& s, const State4& y0, double t_end, double step,
                           std::size_t sample_every = 1);

// Eccentricity and semi-major axis from (L, G).
double eccentricity_of(double L, double G, bool* clamped = nullptr);
double axis_of(const RestrictedSetup& s, double L);

struct EnvelopeVerdict {
  bool ok = true;
  std::size_t samples_checked = 0, samples_beyond_tbar = 0;
  std::size_t violations_L = 0, violations_e = 0;
  double worst_L_margin = INFINITY;  // min over samples of L_f(t) - |L(t) - L(0)|
  double worst_e_margin = INFINITY;  // min distance of e(t) to the band edges (negative: outside)
};

// Lf_scale multiplies L_f(t) and exists to exercise the check on purpose-built violations.
EnvelopeVerdict check_envelopes(const TrajectorySample& traj, const RestrictedInput& in, const RestrictedReport& rep,
                                double Lf_scale = 1.0);

// Pointwise energy-conservation bound for G:
// |G(t) - G(0)| <= (|1/(2L(t)^2) - 1/(2L(0)^2)| + eps |H1(t) - H1(0)| + |H(t) - H(0)|) / omega_g + slack,
// where the last term is the measured numerical energy error of the trajectory.
std::size_t g_energy_bound_violations(const RestrictedSetup& s, const TrajectorySample& traj, double slack);

std::string trajectory_csv(const TrajectorySample& traj);

}  // namespace resostab
