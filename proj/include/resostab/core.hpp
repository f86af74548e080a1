#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>

namespace resostab {

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct StructuralError : std::logic_error {
  using std::logic_error::logic_error;
};

// Real ball radius rho, complex widths r (actions), s (angles), u (cartesian),
// real cartesian radius xi. beta is always recomputed from r, s, u.
class WidthSet {
 public:
  WidthSet(double rho, double r, double s, double xi, double u);
  static WidthSet with_beta(double rho, double r, double s, double xi, double beta);

  double rho() const { return rho_; }
  double r() const { return r_; }
  double s() const { return s_; }
  double xi() const { return xi_; }
  double u() const { return u_; }
  double beta() const;

  // D_{alpha,gamma}: (r, s) scaled by alpha, u scaled by gamma; rho and xi kept.
  WidthSet scaled(double alpha, double gamma) const;
  WidthSet scaled(double alpha) const { return scaled(alpha, alpha); }

 private:
  double rho_, r_, s_, xi_, u_;
};

enum class Comp : int { L = 0, G = 1, l = 2, g = 3 };
const char* comp_name(Comp c);

class RestrictedWidthSet {
 public:
  RestrictedWidthSet(double rho_L, double rho_G, double r_L, double r_G, double s_l, double s_g);

  double rho_L() const { return rho_L_; }
  double rho_G() const { return rho_G_; }
  double r_L() const { return r_L_; }
  double r_G() const { return r_G_; }
  double s_l() const { return s_l_; }
  double s_g() const { return s_g_; }
  double sigma(Comp c) const;

 private:
  double rho_L_, rho_G_, r_L_, r_G_, s_l_, s_g_;
};

struct FieldBounds {
  double eta0 = 0, gamma0 = 0, delta = 0, Xi0 = 0, Gamma0 = 0;
  double f0_norm = 0, g0_norm = 0;
  void validate() const;
};

struct RestrictedFieldBounds {
  std::array<double, 4> eta0{};    // indexed by Comp
  std::array<double, 4> gamma0{};
  double delta = 0;
  double f0_norm = 0, g0_norm = 0;
  double eta(Comp c) const { return eta0[static_cast<int>(c)]; }
  double gamma(Comp c) const { return gamma0[static_cast<int>(c)]; }
  void validate() const;
};

inline constexpr double kContractionCap = 2.0 / 3.0;

// Throws DomainError unless 0 < x < 2/3 (strict at both ends).
void check_contraction(double x, const char* name);

struct Schedule {
  int m = 1;
  double p = 0.3, q1 = 0.3, q2 = 0.3;
  void validate() const;
};

struct RestrictedSchedule {
  int m = 1;
  double p = 0.3;
  std::array<double, 4> q{0.3, 0.3, 0.3, 0.3};
  double qj(Comp c) const { return q[static_cast<int>(c)]; }
  void validate() const;
};

double anisotropic_norm_aa(std::span<const double> action_sups, std::span<const double> angle_sups,
                           const WidthSet& w);
double anisotropic_norm_cart(std::span<const double> x_sups, std::span<const double> y_sups,
                             const WidthSet& w);
double per_component_norm(Comp c, double sup_value, const RestrictedWidthSet& w);

// (1 - q^m)/(1 - q) for 0 < q < 1.
double geometric_factor(double q, int m);

}  // namespace resostab
