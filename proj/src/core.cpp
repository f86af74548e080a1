#include "resostab/core.hpp"

#include <algorithm>
#include <cmath>

namespace resostab {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(name) + " must be strictly positive");
}

void require_nonneg(double v, const char* name) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError(std::string(name) + " must be nonnegative");
}

}  // namespace

WidthSet::WidthSet(double rho, double r, double s, double xi, double u)
    : rho_(rho), r_(r), s_(s), xi_(xi), u_(u) {
  require_nonneg(rho, "rho");
  require_positive(r, "r");
  require_positive(s, "s");
  require_nonneg(xi, "xi");
  require_positive(u, "u");
}

WidthSet WidthSet::with_beta(double rho, double r, double s, double xi, double beta) {
  require_positive(beta, "beta");
  return WidthSet(rho, r, s, xi, std::sqrt(r * s) / beta);
}

double WidthSet::beta() const { return std::sqrt(r_ * s_) / u_; }

WidthSet WidthSet::scaled(double alpha, double gamma) const {
  require_positive(alpha, "alpha");
  require_positive(gamma, "gamma");
  return WidthSet(rho_, alpha * r_, alpha * s_, xi_, gamma * u_);
}

const char* comp_name(Comp c) {
  switch (c) {
    case Comp::L: return "L";
    case Comp::G: return "G";
    case Comp::l: return "l";
    case Comp::g: return "g";
  }
  return "?";
}

RestrictedWidthSet::RestrictedWidthSet(double rho_L, double rho_G, double r_L, double r_G, double s_l,
                                       double s_g)
    : rho_L_(rho_L), rho_G_(rho_G), r_L_(r_L), r_G_(r_G), s_l_(s_l), s_g_(s_g) {
  require_nonneg(rho_L, "rho_L");
  require_nonneg(rho_G, "rho_G");
  require_positive(r_L, "r_L");
  require_positive(r_G, "r_G");
  require_positive(s_l, "s_l");
  require_positive(s_g, "s_g");
}

double RestrictedWidthSet::sigma(Comp c) const {
  switch (c) {
    case Comp::L: return r_L_;
    case Comp::G: return r_G_;
    case Comp::l: return s_l_;
    case Comp::g: return s_g_;
  }
  return 0.0;
}

void FieldBounds::validate() const {
  for (double v : {eta0, gamma0, delta, Xi0, Gamma0, f0_norm, g0_norm}) require_nonneg(v, "field bound");
}

void RestrictedFieldBounds::validate() const {
  for (double v : eta0) require_nonneg(v, "eta0");
  for (double v : gamma0) require_nonneg(v, "gamma0");
  for (double v : {delta, f0_norm, g0_norm}) require_nonneg(v, "field bound");
}

void check_contraction(double x, const char* name) {
  if (!(x > 0.0 && x < kContractionCap))
    throw DomainError(std::string(name) + " must lie in the open interval (0, 2/3)");
}

void Schedule::validate() const {
  if (m < 1) throw DomainError("m must be >= 1");
  check_contraction(p, "p");
  check_contraction(q1, "q1");
  check_contraction(q2, "q2");
}

void RestrictedSchedule::validate() const {
  if (m < 1) throw DomainError("m must be >= 1");
  check_contraction(p, "p");
  for (int j = 0; j < 4; ++j) check_contraction(q[j], comp_name(static_cast<Comp>(j)));
}

double anisotropic_norm_aa(std::span<const double> action_sups, std::span<const double> angle_sups,
                           const WidthSet& w) {
  double out = 0.0;
  for (double v : action_sups) out = std::max(out, std::abs(v) / w.r());
  for (double v : angle_sups) out = std::max(out, std::abs(v) / w.s());
  return out;
}

double anisotropic_norm_cart(std::span<const double> x_sups, std::span<const double> y_sups,
                             const WidthSet& w) {
  double out = 0.0;
  for (double v : x_sups) out = std::max(out, std::abs(v) / w.u());
  for (double v : y_sups) out = std::max(out, std::abs(v) / w.u());
  return out;
}

double per_component_norm(Comp c, double sup_value, const RestrictedWidthSet& w) {
  return std::abs(sup_value) / w.sigma(c);
}

double geometric_factor(double q, int m) {
  if (!(q > 0.0 && q < 1.0)) throw DomainError("geometric_factor needs 0 < q < 1");
  if (m < 0) throw DomainError("geometric_factor needs m >= 0");
  // expm1/log keep the ratio accurate when q is close to 1
  return -std::expm1(m * std::log(q)) / (1.0 - q);
}

}  // namespace resostab
