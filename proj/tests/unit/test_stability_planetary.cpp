#include <doctest.h>

#include <cmath>
#include <numbers>

#include "resostab/stability_planetary.hpp"

using namespace resostab;

namespace {

PlanetaryStabilityInput toy_input() {
  PlanetaryStabilityInput in;
  in.widths = WidthSet(0.5, 0.5, 0.1, 0.0, 2.0);
  in.convexity = {2.0, 4.0};
  in.resonance.Lambda0 = {10.0, 12.0};
  in.resonance.omega = {0.5, 0.2};
  in.resonance.T = 2 * std::numbers::pi * 5 / 0.5;
  in.schedule = Schedule{10, 0.5, 0.5, 0.5};
  in.R = 0.1;
  return in;
}

}  // namespace

TEST_CASE("C1 by substitution") {
  auto in = toy_input();
  CHECK(r_tilde(in) == doctest::Approx(0.1));
  CHECK(c1(in) == doctest::Approx(0.45).epsilon(1e-14));

  in.R = 0.3;  // outer bracket becomes 0.1 while the inner one is 0.6
  CHECK(c1(in) < 0.0);
  in.bounds.eta0 = 1e-6;
  const auto st = stability_time(in);
  CHECK(st.t_bar == 0.0);
  CHECK_FALSE(st.unbounded);
  CHECK_FALSE(check_conditions(in).c1_positive);
}

TEST_CASE("C1 zero crossing matches the analytic threshold") {
  auto in = toy_input();
  const auto& s = in.schedule;
  const double outer = 1.0 - 3 * 0.1, inner = 2 * 0.1;
  const double geo = s.p * (1 - std::pow(s.p, s.m)) / (1 - s.p) + 2 * std::pow(s.p, s.m) + 1.0;
  const double analytic = (outer * outer - inner * inner) / geo;  // kappa / 2 = 1
  auto with_norm = [&](double N) {
    auto x = in;
    x.bounds.f0_norm = N;
    x.bounds.g0_norm = N / 2;
    return c1(x);
  };
  double lo = 0.0, hi = 10.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (with_norm(mid) > 0 ? lo : hi) = mid;
  }
  CHECK(std::abs(0.5 * (lo + hi) - analytic) <= 1e-10 * analytic);
}

TEST_CASE("stability time") {
  auto in = toy_input();
  in.bounds.eta0 = 1e-7;
  const double C2 = in.widths.r() * (0.5 + 0.2) * 1e-7;
  CHECK(c2(in) == doctest::Approx(C2).epsilon(1e-14));
  const auto st = stability_time(in);
  CHECK(st.t_bar == doctest::Approx(c1(in) / C2 * std::pow(0.5, -10)).epsilon(1e-13));
  CHECK(st.log10_t_bar == doctest::Approx(std::log10(st.t_bar)).epsilon(1e-13));

  auto quarter = in;
  quarter.schedule.q1 = 0.25;
  // R_tilde depends on q1 through Delta_aa; compare at equal C1 by removing that dependence
  const double ratio = stability_time(quarter).t_bar / c1(quarter) / (st.t_bar / c1(in));
  CHECK(ratio == doctest::Approx(std::pow(2.0, 10)).epsilon(1e-12));

  auto zero = toy_input();
  const auto u = stability_time(zero);
  CHECK(u.unbounded);
  CHECK(std::isinf(u.t_bar));

  // t_bar stays representable as a logarithm when q1^-m overflows
  auto deep = in;
  deep.schedule = Schedule{2000, 0.5, 0.01, 0.5};
  const auto d = stability_time(deep);
  CHECK(std::isinf(d.t_bar));
  CHECK(std::isfinite(d.log10_t_bar));
  CHECK(d.log10_t_bar == doctest::Approx(std::log10(c1(deep) / c2(deep)) + 4000).epsilon(1e-14));
}

TEST_CASE("confinement radius") {
  auto in = toy_input();
  in.R = 0.0;
  CHECK(confinement_radius(in, 0.0) == 0.0);
  CHECK(confinement_radius(in, 1e6) == 0.0);

  in = toy_input();
  in.bounds = FieldBounds{1e-4, 5e-5, 0.0, 1e-4, 5e-5, 1e-4, 5e-5};
  double prev = confinement_radius(in, 0.0);
  for (int i = 1; i <= 50; ++i) {
    const double v = confinement_radius(in, 1e3 * i);
    CHECK(v >= prev);
    prev = v;
  }
  CHECK(confinement_radius(in, -5e3) == confinement_radius(in, 5e3));

  // plug-back: y = R_f - Delta_aa r solves y^2 - 2 (K/kappa) R_tilde y - a(t) = 0
  const double t = 3e4;
  const double Daa = in.T() * in.bounds.eta0 / 2 * geometric_factor(in.schedule.q1, in.schedule.m);
  const double y = confinement_radius(in, t) - Daa * in.widths.r();
  const double KR = in.convexity.K / in.convexity.kappa * r_tilde(in);
  const double a = a_of_t(in, t);
  CHECK(std::abs(y * y - 2 * KR * y - a) <= 1e-10 * (y * y + a));

  // value at t_bar without forming q1^-m
  const auto st = stability_time(in);
  REQUIRE(std::isfinite(st.t_bar));
  CHECK(confinement_radius_at_tbar(in) == doctest::Approx(confinement_radius(in, st.t_bar)).epsilon(1e-12));
}

TEST_CASE("eccentricity envelopes") {
  auto in = toy_input();
  in.R = 0.0;
  in.xi_mode = XiMode::per_body;
  in.xi0_body = {0.0, 0.0};
  auto env = eccentricity_envelopes_for_radius(in, 0.0);
  CHECK(env.e_initial[0] == 0.0);
  CHECK(env.e_initial[1] == 0.0);
  CHECK(env.N_minus == doctest::Approx(22.0).epsilon(1e-15));
  CHECK(env.e_bar[0] == 0.0);
  CHECK(env.e_bar[1] == 0.0);

  // xi0 built from a target eccentricity maps back to it
  const double e = 0.05;
  in.xi0_body = {xi0_from_eccentricity(10.0, 0.0, e), xi0_from_eccentricity(12.0, 0.0, 2 * e)};
  env = eccentricity_envelopes_for_radius(in, 0.0);
  CHECK(env.e_initial[0] == doctest::Approx(e).epsilon(1e-12));
  CHECK(env.e_initial[1] == doctest::Approx(2 * e).epsilon(1e-12));

  double prev1 = 0.0, prev2 = 0.0;
  for (int i = 0; i <= 40; ++i) {
    const auto ev = eccentricity_envelopes_for_radius(in, 1e-3 * i);
    CHECK(ev.e_bar[0] >= prev1);
    CHECK(ev.e_bar[1] >= prev2);
    prev1 = ev.e_bar[0];
    prev2 = ev.e_bar[1];
  }

  // total angular momentum of a state with e_j = e_bar_j and Lambda_j = Lambda_j^0 + R_f stays >= N-
  const double Rf = 0.02;
  const auto ev = eccentricity_envelopes_for_radius(in, Rf);
  for (int j = 0; j < 2; ++j) {
    const double other = in.resonance.Lambda0[1 - j] + Rf;
    const double mine = (in.resonance.Lambda0[j] + Rf) * std::sqrt(1 - ev.e_bar[j] * ev.e_bar[j]);
    CHECK(mine + other >= ev.N_minus * (1 - 1e-14));
  }

  const auto sat = eccentricity_envelopes_for_radius(in, 50.0);
  CHECK((sat.saturated[0] || sat.e_bar[0] <= 1.0));
  CHECK(sat.e_bar[0] <= 1.0);
}

TEST_CASE("condition flags") {
  auto in = toy_input();
  in.R = 0.0;
  in.widths = WidthSet(0.0, 1e-4, 0.1, 0.0, 0.1);
  in.xi_mode = XiMode::common;
  in.xi0 = 0.0;
  auto f = check_conditions(in);
  CHECK(f.c1_positive);
  CHECK(f.xi_cover);
  CHECK(f.momentum);
  CHECK(f.momentum_rf);
  CHECK(f.all());
  CHECK(f.first_failure().empty());

  in.xi0 = in.widths.xi() + in.widths.u();  // equals the left-hand side
  f = check_conditions(in);
  CHECK_FALSE(f.xi_cover);
  CHECK(f.xi_cover_margin == 0.0);

  // minimal_xi produces a cover that passes
  in.xi0 = 0.3;
  const double xi = minimal_xi(in);
  in.widths = WidthSet(in.widths.rho(), in.widths.r(), in.widths.s(), xi, in.widths.u());
  f = check_conditions(in);
  CHECK(f.xi_cover);
  CHECK(f.momentum);
  CHECK(f.momentum_rf);
}

TEST_CASE("time-unit rescaling leaves the theorem consistent") {
  auto in = toy_input();
  in.bounds = FieldBounds{1e-4, 5e-5, 1e-5, 1e-4, 5e-5, 1e-4, 5e-5};
  const double lam = 7.3;  // new time unit is lam old units
  auto sc = in;
  sc.resonance.omega = {in.resonance.omega[0] * lam, in.resonance.omega[1] * lam};
  sc.resonance.T = in.resonance.T / lam;
  sc.convexity = {in.convexity.kappa * lam, in.convexity.K * lam};
  auto& b = sc.bounds;
  b.eta0 *= lam;
  b.gamma0 *= lam;
  b.delta *= lam;
  b.Xi0 *= lam;
  b.Gamma0 *= lam;
  b.f0_norm *= lam;
  b.g0_norm *= lam;
  const auto r0 = evaluate_planetary(in), r1 = evaluate_planetary(sc);
  CHECK(r1.t_bar * lam == doctest::Approx(r0.t_bar).epsilon(1e-12));
  CHECK(r1.Rf_tbar == doctest::Approx(r0.Rf_tbar).epsilon(1e-12));
  CHECK(r1.Delta_aa == doctest::Approx(r0.Delta_aa).epsilon(1e-12));
  CHECK(r1.e_bar_tbar[0] == doctest::Approx(r0.e_bar_tbar[0]).epsilon(1e-12));
  CHECK(r1.C1 == doctest::Approx(r0.C1 * lam).epsilon(1e-12));
}
