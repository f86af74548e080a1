#pragma once

#include <array>

#include "resostab/core.hpp"

namespace resostab {

class MassConfig {
 public:
  MassConfig(double m0, double m1, double m2, double G_N);

  double m0() const { return m0_; }
  double m1() const { return m1_; }
  double m2() const { return m2_; }
  double G() const { return G_; }
  double sigma0() const { return m0_ / (m0_ + m1_); }
  double sigma1() const { return m1_ / (m0_ + m1_); }
  double mu(int j) const;  // j = 0 -> mu_1, j = 1 -> mu_2
  double M(int j) const;
  double eps() const;
  // G^2 M_j^2 mu_j^3, the constant in front of -1/(2 Lambda_j^2).
  double kepler_coeff(int j) const;

 private:
  double m0_, m1_, m2_, G_;
};

double lambda_from_axis(const MassConfig& mass, int j, double a_j);
double kepler_hamiltonian(const MassConfig& mass, std::array<double, 2> Lambda);
std::array<double, 2> mean_motions(const MassConfig& mass, std::array<double, 2> Lambda);

struct ResonanceSpec {
  int p_int = 1, q_int = 1;
  std::array<double, 2> Lambda0{};
  std::array<double, 2> omega{};
  double T = 0.0;
};

ResonanceSpec locate_resonance(const MassConfig& mass, double Lambda1_0, int p_int, int q_int);

struct ConvexityConstants {
  double kappa = 0.0;
  double K = 0.0;
};

// Hessian of H_K is diagonal with entries 3 c_j / Lambda_j^4, decreasing in Lambda_j.
ConvexityConstants convexity_constants(const MassConfig& mass, std::array<double, 2> Lambda0, double extent);

// Action extent used for kappa and K: the hessian bounds are taken over rho + 4r.
double convexity_extent(const WidthSet& w);

// max_j sup_{|I| <= radius} |c_j/(Lambda_j^0 + I)^3 - omega_j| (not yet divided by s).
double frequency_shift_sup(const MassConfig& mass, const ResonanceSpec& res, double radius);
// delta on the disk of radius rho + 3r, divided by s.
double delta_bound(const MassConfig& mass, const ResonanceSpec& res, const WidthSet& w);

FieldBounds cauchy_initial_bounds(double HP_norm4, double eps, const WidthSet& w, double delta);

// Sup of |F| on the circle |z - z0| = radius by angular sampling plus local refinement.
template <class F>
double circle_sup(F&& f, double radius, int n_samples = 4096);

}  // namespace resostab

#include <cmath>
#include <numbers>

namespace resostab {

template <class F>
double circle_sup(F&& f, double radius, int n_samples) {
  const double two_pi = 2.0 * std::numbers::pi;
  double best = 0.0, best_phase = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const double ph = two_pi * i / n_samples;
    const double v = f(radius * std::cos(ph), radius * std::sin(ph));
    if (v > best) {
      best = v;
      best_phase = ph;
    }
  }
  // refine the best cell by repeated ternary search on the phase
  double lo = best_phase - two_pi / n_samples, hi = best_phase + two_pi / n_samples;
  for (int it = 0; it < 80; ++it) {
    const double a = lo + (hi - lo) / 3.0, b = hi - (hi - lo) / 3.0;
    const double fa = f(radius * std::cos(a), radius * std::sin(a));
    const double fb = f(radius * std::cos(b), radius * std::sin(b));
    if (fa < fb)
      lo = a;
    else
      hi = b;
  }
  const double mid = 0.5 * (lo + hi);
  return std::max(best, f(radius * std::cos(mid), radius * std::sin(mid)));
}

}  // namespace resostab
