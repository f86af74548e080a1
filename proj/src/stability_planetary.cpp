#include "resostab/stability_planetary.hpp"

#include <algorithm>
#include <cmath>

namespace resostab {

namespace {

double delta_aa(const PlanetaryStabilityInput& in) {
  return in.T() * in.bounds.eta0 / 2 * geometric_factor(in.schedule.q1, in.schedule.m);
}

double delta_cart(const PlanetaryStabilityInput& in) {
  return in.T() * in.bounds.Xi0 / 2 * geometric_factor(in.schedule.q2, in.schedule.m);
}

double function_terms(const PlanetaryStabilityInput& in) {
  const auto& s = in.schedule;
  return (s.p * geometric_factor(s.p, s.m) + 2 * std::pow(s.p, s.m)) * in.bounds.f0_norm + 2 * in.bounds.g0_norm;
}

double initial_ecc(double Lambda, double R, double xi0) {
  const double v = 1 - xi0 * xi0 / (2 * (Lambda - R));
  return std::sqrt(std::max(0.0, 1 - v * v));
}

}  // namespace

double PlanetaryStabilityInput::effective_xi0() const {
  return xi_mode == XiMode::common ? xi0 : std::max(xi0_body[0], xi0_body[1]);
}

double xi0_from_eccentricity(double Lambda, double R, double e) {
  if (!(e >= 0 && e < 1)) throw DomainError("eccentricity must lie in [0, 1)");
  return std::sqrt(2 * (Lambda - R) * (1 - std::sqrt(1 - e * e)));
}

double r_tilde(const PlanetaryStabilityInput& in) { return in.R + delta_aa(in) * in.widths.r(); }

double c1(const PlanetaryStabilityInput& in) {
  const double k = in.convexity.kappa, K = in.convexity.K;
  const double Rt = r_tilde(in);
  const double outer = in.widths.rho() + in.widths.r() - (K / k + 1) * Rt;
  const double inner = K / k * Rt;
  return k / 2 * (outer * outer - inner * inner) - function_terms(in);
}

double c2(const PlanetaryStabilityInput& in) {
  return in.widths.r() * std::abs(in.resonance.omega[0] + in.resonance.omega[1]) * in.bounds.eta0;
}

StabilityTime stability_time(const PlanetaryStabilityInput& in) {
  StabilityTime st;
  const double C2 = c2(in);
  if (C2 == 0.0) {
    st.unbounded = true;
    st.t_bar = INFINITY;
    st.log10_t_bar = INFINITY;
    return st;
  }
  const double C1 = c1(in);
  if (C1 > 0) {
    st.log10_t_bar = std::log10(C1 / C2) - in.schedule.m * std::log10(in.schedule.q1);
    st.t_bar = C1 / C2 * std::pow(in.schedule.q1, -in.schedule.m);
  }
  return st;
}

double a_of_t(const PlanetaryStabilityInput& in, double t) {
  return 2 / in.convexity.kappa *
         (function_terms(in) + c2(in) * std::pow(in.schedule.q1, in.schedule.m) * std::abs(t));
}

namespace {

double radius_from_a(const PlanetaryStabilityInput& in, double a) {
  const double KR = in.convexity.K / in.convexity.kappa * r_tilde(in);
  return KR + std::sqrt(KR * KR + a) + delta_aa(in) * in.widths.r();
}

}  // namespace

double confinement_radius(const PlanetaryStabilityInput& in, double t) { return radius_from_a(in, a_of_t(in, t)); }

double confinement_radius_at_tbar(const PlanetaryStabilityInput& in) {
  const double C1 = c1(in);
  if (c2(in) == 0.0 || !(C1 > 0)) return confinement_radius(in, 0.0);
  // C2 q1^m t_bar = C1, so a(t_bar) needs no overflow-prone power
  return radius_from_a(in, 2 / in.convexity.kappa * (function_terms(in) + C1));
}

EccentricityEnvelope eccentricity_envelopes(const PlanetaryStabilityInput& in, double t) {
  return eccentricity_envelopes_for_radius(in, confinement_radius(in, t));
}

EccentricityEnvelope eccentricity_envelopes_for_radius(const PlanetaryStabilityInput& in, double Rf) {
  EccentricityEnvelope env;
  const auto& L = in.resonance.Lambda0;
  for (int j = 0; j < 2; ++j) {
    env.e_initial[j] = in.xi_mode == XiMode::common ? initial_ecc(L[0], in.R, in.xi0)
                                                    : initial_ecc(L[j], in.R, in.xi0_body[j]);
  }
  env.N_minus = (L[0] - in.R) * std::sqrt(1 - env.e_initial[0] * env.e_initial[0]) +
                (L[1] - in.R) * std::sqrt(1 - env.e_initial[1] * env.e_initial[1]);
  for (int j = 0; j < 2; ++j) {
    const double ratio = (env.N_minus - L[1 - j] - Rf) / (L[j] + Rf);
    const double rad = 1 - ratio * ratio;
    env.saturated[j] = !(rad >= 0) || ratio < 0;
    env.e_bar[j] = env.saturated[j] ? 1.0 : std::sqrt(rad);
  }
  return env;
}

std::string ConditionFlags::first_failure() const {
  if (!c1_positive) return "C1(R) > 0";
  if (!xi_cover) return "xi + (1 - Delta_cart) u > xi0";
  if (!momentum) return "angular-momentum cover with rho + r + Delta_aa r";
  if (!momentum_rf) return "angular-momentum cover with R_f(t_bar)";
  return "";
}

ConditionFlags check_conditions(const PlanetaryStabilityInput& in) {
  ConditionFlags f;
  f.c1_margin = c1(in);
  f.c1_positive = f.c1_margin > 0;
  const double lhs = in.widths.xi() + (1 - delta_cart(in)) * in.widths.u();
  f.xi_cover_margin = lhs - in.effective_xi0();
  f.xi_cover = f.xi_cover_margin > 0;
  const auto& L = in.resonance.Lambda0;
  const auto env = eccentricity_envelopes(in, 0.0);
  const double big = L[0] + L[1] - env.N_minus;
  const double rad1 = big + 2 * (in.widths.rho() + in.widths.r() + delta_aa(in) * in.widths.r());
  f.momentum_margin = lhs - std::sqrt(std::max(0.0, rad1));
  f.momentum = f.momentum_margin >= 0;
  const double Rf = confinement_radius_at_tbar(in);
  f.momentum_rf_margin = lhs - std::sqrt(std::max(0.0, big + 2 * Rf));
  f.momentum_rf = f.momentum_rf_margin >= 0;
  return f;
}

double minimal_xi(const PlanetaryStabilityInput& in, double cushion) {
  const auto& L = in.resonance.Lambda0;
  const auto env = eccentricity_envelopes(in, 0.0);
  const double big = L[0] + L[1] - env.N_minus;
  const double Rf = confinement_radius_at_tbar(in);
  const double need = std::max({in.effective_xi0() * (1 + cushion),
                                std::sqrt(std::max(0.0, big + 2 * (in.widths.rho() + in.widths.r() +
                                                                   delta_aa(in) * in.widths.r()))),
                                std::sqrt(std::max(0.0, big + 2 * Rf))});
  return std::max(0.0, need * (1 + cushion) - (1 - delta_cart(in)) * in.widths.u());
}

StabilityReport evaluate_planetary(const PlanetaryStabilityInput& in) {
  StabilityReport rep;
  rep.C1 = c1(in);
  rep.C2 = c2(in);
  const auto st = stability_time(in);
  rep.t_bar = st.t_bar;
  rep.log10_t_bar = st.log10_t_bar;
  rep.unbounded = st.unbounded;
  rep.R_tilde = r_tilde(in);
  rep.Delta_aa = delta_aa(in);
  rep.Delta_cart = delta_cart(in);
  rep.Rf_0 = confinement_radius(in, 0.0);
  rep.Rf_tbar = confinement_radius_at_tbar(in);
  const auto env0 = eccentricity_envelopes(in, 0.0);
  rep.N_minus = env0.N_minus;
  rep.e_bar0 = env0.e_initial;
  rep.e_bar_tbar = eccentricity_envelopes_for_radius(in, rep.Rf_tbar).e_bar;
  rep.flags = check_conditions(in);
  return rep;
}

}  // namespace resostab
