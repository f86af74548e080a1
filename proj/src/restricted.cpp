#include "resostab/restricted.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "resostab/planetary.hpp"

namespace resostab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

int idx(Comp c) { return static_cast<int>(c); }

SeriesDomain domain_at(const RestrictedWidthSet& w, double scale) {
  SeriesDomain d;
  d.rho = {w.rho_L(), w.rho_G()};
  d.r = {scale * w.r_L(), scale * w.r_G()};
  d.s = {scale * w.s_l(), scale * w.s_g()};
  return d;
}

double function_terms(const RestrictedInput& in) {
  const auto& s = in.schedule;
  return (s.p * geometric_factor(s.p, s.m) + 2 * std::pow(s.p, s.m)) * in.bounds.f0_norm + 2 * in.bounds.g0_norm;
}

}  // namespace

RestrictedSetup make_restricted_setup(const RestrictedParams& par, const RestrictedWidthSet& widths,
                                      const TaylorFourierSeries& H1) {
  if (!(par.Gm0 > 0) || !(par.omega_g > 0)) throw DomainError("G m0 and omega_g must be positive");
  if (par.p_int <= 0 || par.q_int <= 0) throw DomainError("resonance integers must be positive");
  if (!(par.eps >= 0)) throw DomainError("eps must be nonnegative");
  RestrictedSetup s;
  s.Gm0 = par.Gm0;
  s.mu = std::pow(par.Gm0, -2.0 / 3.0);
  s.omega_g = par.omega_g;
  s.p_int = par.p_int;
  s.q_int = par.q_int;
  s.eps = par.eps;
  s.time_unit_years = par.time_unit_years;
  // omega_l = mu^3 (G m0)^2 / L^3 = 1/L^3 with the normalisation of mu
  const double omega_l = par.omega_g * par.p_int / par.q_int;
  s.L0 = std::cbrt(1.0 / omega_l);
  s.omega = {omega_l, par.omega_g};
  s.T = kTwoPi * par.q_int / par.omega_g;
  s.H1 = H1;
  const auto base = H1.base_point();
  if (std::abs(base[0] - s.L0) > 1e-10 * s.L0)
    throw DomainError("harmonic file base point L = " + std::to_string(base[0]) +
                      " does not match the resonant action " + std::to_string(s.L0));
  s.G0 = base[1];
  if (!(s.G0 > 0 && s.G0 <= s.L0)) throw DomainError("base point G0 must lie in (0, L0]");
  return with_widths(s, widths);
}

RestrictedSetup with_widths(const RestrictedSetup& s, const RestrictedWidthSet& widths) {
  RestrictedSetup out = s;
  out.widths = widths;
  const auto kk = restricted_convexity(s.L0, widths);
  out.kappa = kk[0];
  out.K = kk[1];
  return out;
}

double restricted_H0(const RestrictedSetup& s, double L, double G) {
  const double c = std::pow(s.mu, 3) * s.Gm0 * s.Gm0;
  return -c / (2 * L * L) - s.omega_g * G;
}

std::array<double, 2> restricted_convexity(double L0, const RestrictedWidthSet& w) {
  const double ext = w.rho_L() + 4 * w.r_L();
  if (!(ext < L0)) throw DomainError("action domain reaches L = 0");
  return {3.0 / std::pow(L0 + ext, 4), 3.0 / std::pow(L0 - ext, 4)};
}

double restricted_delta(double L0, const RestrictedWidthSet& w) {
  const double radius = w.rho_L() + 3 * w.r_L();
  if (!(radius < L0)) throw DomainError("action domain reaches L = 0");
  const double w0 = 1.0 / (L0 * L0 * L0);
  auto shift = [&](double re, double im) { return std::abs(1.0 / std::pow(cplx(L0 + re, im), 3) - w0); };
  return std::max(shift(-radius, 0.0), circle_sup(shift, radius)) / w.s_l();
}

TaylorFourierSeries remainder_taylor(const RestrictedSetup& s, Caps caps) {
  // -1/(2L^2) = -sum_n (n+1)(-1)^n z^n / (2 L0^(n+2)), z = L - L0
  TaylorFourierSeries out(s.H1.base_point(), caps);
  const double c = std::pow(s.mu, 3) * s.Gm0 * s.Gm0;
  for (int n = 2; n <= caps.degree; ++n) {
    const double coef = -c * (n + 1) * (n % 2 == 0 ? 1.0 : -1.0) / (2 * std::pow(s.L0, n + 2));
    out.add_term({0, 0, n, 0}, coef);
  }
  return out;
}

PreparedPerturbation prepare_perturbation(const RestrictedSetup& s, int N, Caps caps, int order) {
  if (N != 0 && N != 1) throw DomainError("only N = 0 or N = 1 preliminary averaging steps are supported");
  PreparedPerturbation pp;
  pp.preliminary_steps = N;
  const auto eH1 = s.H1.scaled(s.eps);
  const auto omega = s.flow_frequencies();
  if (N == 0) {
    auto split = resonant_split(eH1, omega, s.T);
    pp.f = split.f_part;
    pp.g_res = split.g_part;
  } else {
    const auto Gt = remainder_taylor(s, caps);
    const auto H = add(eH1.with_caps(caps), Gt);
    auto avg = first_order_average(H, omega, s.T, caps, order);
    pp.f = avg.f1;
    pp.g_res = subtract(avg.g1, Gt);
    pp.phi1 = avg.phi1;
    pp.averaging_discarded = avg.discarded_mass;
    pp.cap_overflow = avg.cap_overflow;
  }
  pp.f.prune(0.0);
  pp.g_res.prune(0.0);
  pp.nonresonant_empty = pp.f.empty();
  auto fields = [](const TaylorFourierSeries& a) {
    return std::array<TaylorFourierSeries, 4>{a.d_angle(0), a.d_angle(1), a.d_action(0), a.d_action(1)};
  };
  pp.f_field = fields(pp.f);
  pp.g_field = fields(pp.g_res);
  return pp;
}

namespace {

ComponentSup sup_of(const TaylorFourierSeries& a, const SeriesDomain& dom, const RestrictedBoundOptions& opt,
                    std::uint64_t stream) {
  ComponentSup c;
  c.majorant = majorant_norm(a, dom);
  if (opt.n_points > 0) c.sampled = sample_norm(a, dom, opt.n_points, opt.seed * 1000003ULL + stream);
  return c;
}

double pick(const ComponentSup& c, Estimator e) { return e == Estimator::majorant ? c.majorant : c.sampled; }

}  // namespace

RestrictedBoundsReport restricted_field_bounds(const RestrictedSetup& s, const PreparedPerturbation& pp,
                                               const RestrictedBoundOptions& opt) {
  if (opt.estimator == Estimator::sampled && opt.n_points == 0)
    throw DomainError("sampled estimator needs n_points > 0");
  RestrictedBoundsReport rep;
  const auto dom = domain_at(s.widths, 3.0);
  for (int j = 0; j < 4; ++j) {
    rep.f_field[j] = sup_of(pp.f_field[j], dom, opt, 10 + j);
    rep.g_field[j] = sup_of(pp.g_field[j], dom, opt, 20 + j);
    const double sigma = s.widths.sigma(static_cast<Comp>(j));
    rep.bounds.eta0[j] = pick(rep.f_field[j], opt.estimator) / sigma;
    rep.bounds.gamma0[j] = pick(rep.g_field[j], opt.estimator) / sigma;
  }
  rep.f_fun = sup_of(pp.f, dom, opt, 30);
  rep.g_fun = sup_of(pp.g_res, dom, opt, 31);
  rep.bounds.f0_norm = pick(rep.f_fun, opt.estimator);
  rep.bounds.g0_norm = pick(rep.g_fun, opt.estimator);
  rep.bounds.delta = restricted_delta(s.L0, s.widths);
  rep.nonresonant_empty = pp.nonresonant_empty;
  return rep;
}

RestrictedBoundsReport restricted_field_bounds(const RestrictedSetup& s) {
  return restricted_field_bounds(s, prepare_perturbation(s, 0));
}

double h1_sup_complex(const RestrictedSetup& s, const RestrictedBoundOptions& opt) {
  const auto dom = domain_at(s.widths, 1.0);
  if (opt.estimator == Estimator::majorant) return majorant_norm(s.H1, dom);
  return sample_norm(s.H1, dom, opt.n_points, opt.seed * 1000003ULL + 40);
}

double h1_sup_real(const RestrictedSetup& s, std::size_t n_points, std::uint64_t seed) {
  if (n_points == 0) throw DomainError("n_points must be >= 1");
  const SeriesEvaluator ev(s.H1);
  const double aL = s.widths.rho_L() + s.widths.r_L(), aG = s.widths.rho_G() + s.widths.r_G();
  double best = 0.0;
  for (std::size_t i = 0; i < n_points; ++i) {
    const double L = s.L0 + aL * (2 * counter_uniform(seed, 50, i) - 1);
    const double G = s.G0 + aG * (2 * counter_uniform(seed, 51, i) - 1);
    const double l = kTwoPi * counter_uniform(seed, 52, i), g = kTwoPi * counter_uniform(seed, 53, i);
    best = std::max(best, std::abs(ev({L, G}, {l, g}).value));
  }
  return best;
}

double averaging_shift_L(const RestrictedSetup& s, const PreparedPerturbation& pp) {
  if (pp.phi1.empty()) return 0.0;
  return majorant_norm(pp.phi1.d_angle(0), domain_at(s.widths, 1.0));
}

double RestrictedBoundFunctions::chi0() const {
  return std::max({b.eta(Comp::L) + b.gamma(Comp::L), b.eta(Comp::G) + b.gamma(Comp::G),
                   b.eta(Comp::l) + b.gamma(Comp::l) + b.delta, b.eta(Comp::g) + b.gamma(Comp::g)});
}

double RestrictedBoundFunctions::Theta0() const {
  return T / 2 * *std::max_element(b.eta0.begin(), b.eta0.end());
}

double upsilon0_component(Comp j, double x, const RestrictedBoundFunctions& bf) {
  const auto& b = bf.b;
  if (b.eta(j) == 0.0)
    throw DomainError(std::string("eta0^") + comp_name(j) + " = 0: no iteration needed for this component");
  const double T = bf.T, chi = bf.chi0(), Th = bf.Theta0(), d = b.delta;
  const double eL = b.eta(Comp::L), eG = b.eta(Comp::G), el = b.eta(Comp::l), eg = b.eta(Comp::g);
  const double gL = b.gamma(Comp::L), gG = b.gamma(Comp::G), gl = b.gamma(Comp::l), gg = b.gamma(Comp::g);
  // (s2/s1)(r2/r1) with r1 -> r_L, r2 -> r_G, s1 -> s_l, s2 -> s_g
  const double ratio = (bf.w.s_g() / bf.w.s_l()) * (bf.w.r_G() / bf.w.r_L());
  const double Tx = T * x, Tx2h = T * x * x / 2;
  switch (j) {
    case Comp::L:
      return Tx * Tx * el / 2 * chi + Tx / 2 * chi + (1 + gL / eL) * x * Th +
             ratio * Tx2h / eL * (T * eg * eG * chi + (eg * (eG + gG) + eG * (eg + gg)) * Th) +
             Tx2h * (el * (1 + gL / eL) + el + gl + d) * Th;
    case Comp::G:
      return Tx * Tx * eg / 2 * chi + Tx / 2 * chi + (1 + gG / eG) * x * Th +
             Tx2h / (ratio * eG) * (T * el * eL * chi + (el * (eL + gL) + eL * (el + gl + d)) * Th) +
             Tx2h * (eg * (1 + gG / eG) + eg + gg) * Th;
    case Comp::l:
      return Tx * Tx * eL / 2 * chi + Tx / 2 * chi + (1 + gl / el + d / el) * x * Th +
             ratio * Tx2h / el * (T * eg * eG * chi + (eg * (eG + gG) + eG * (eg + gg)) * Th) +
             Tx2h * (eL * (1 + gl / el + d / el) + eL + gL) * Th;
    case Comp::g:
      return Tx * Tx * eG / 2 * chi + Tx / 2 * chi + (1 + gg / eg) * x * Th +
             Tx2h / (ratio * eg) * (T * el * eL * chi + (el * (eL + gL) + eL * (el + gl + d)) * Th) +
             Tx2h * (eG * (1 + gg / eg) + eG + gG) * Th;
  }
  return 0.0;
}

double restricted_zeta0(double x, const RestrictedBoundFunctions& bf) { return bf.T * x / 2 * bf.chi0(); }

RestrictedScheduleVerdict validate_restricted_schedule(const RestrictedBoundFunctions& bf,
                                                       const RestrictedSchedule& s) {
  RestrictedScheduleVerdict v;
  auto in_range = [](double x) { return x > 0.0 && x < kContractionCap; };
  const double m = s.m;
  const double eta_max = *std::max_element(bf.b.eta0.begin(), bf.b.eta0.end());
  v.margin_p = s.p - 2 * restricted_zeta0(m, bf);
  v.margin_step = 1.0 - bf.T * m * eta_max / 2;
  std::string zero;
  for (int j = 0; j < 4; ++j) {
    const Comp c = static_cast<Comp>(j);
    if (bf.b.eta(c) == 0.0) {
      v.margin_q[j] = s.q[j];
      if (eta_max > 0 && zero.empty()) zero = std::string("eta0^") + comp_name(c) + " > 0";
    } else {
      v.margin_q[j] = s.q[j] - 2 * upsilon0_component(c, m, bf);
    }
  }
  if (s.m < 1) {
    v.failing = "m >= 1";
  } else if (!in_range(s.p) || !std::all_of(s.q.begin(), s.q.end(), in_range)) {
    v.failing = "contraction factors in (0, 2/3)";
  } else if (eta_max == 0.0) {
    v.failing.clear();
  } else if (!zero.empty()) {
    v.failing = zero;
  } else {
    for (int j = 0; j < 4 && v.failing.empty(); ++j)
      if (!(v.margin_q[j] > 0))
        v.failing = std::string("2 upsilon0^") + comp_name(static_cast<Comp>(j)) + "(m) < q_" +
                    comp_name(static_cast<Comp>(j));
    if (v.failing.empty() && !(v.margin_p > 0)) v.failing = "2 zeta0(m) < p";
    if (v.failing.empty() && !(v.margin_step > 0)) v.failing = "(T m / 2) max eta0^j < 1";
  }
  v.valid = v.failing.empty();
  return v;
}

int max_valid_m_restricted(const RestrictedBoundFunctions& bf, double p, std::array<double, 4> q, int m_cap) {
  int best = 0;
  for (int m = 1; m <= m_cap; ++m) {
    if (!validate_restricted_schedule(bf, RestrictedSchedule{m, p, q}).valid) break;
    best = m;
  }
  return best;
}

bool tight_restricted_schedule(const RestrictedBoundFunctions& bf, int m, double slack, RestrictedSchedule& out) {
  const double k = 1.0 + slack, floor = 1e-300;
  RestrictedSchedule s;
  s.m = m;
  s.p = std::max(2 * restricted_zeta0(m, bf) * k, floor);
  for (int j = 0; j < 4; ++j) {
    const Comp c = static_cast<Comp>(j);
    s.q[j] = bf.b.eta(c) == 0.0 ? floor : std::max(2 * upsilon0_component(c, m, bf) * k, floor);
  }
  if (!(s.p < kContractionCap) || !std::all_of(s.q.begin(), s.q.end(), [](double q) { return q < kContractionCap; }))
    return false;
  if (!validate_restricted_schedule(bf, s).valid) return false;
  out = s;
  return true;
}

RestrictedNFState restricted_nf_closed_form(const RestrictedBoundFunctions& bf, const RestrictedSchedule& s) {
  RestrictedNFState c;
  for (int j = 0; j < 4; ++j) {
    const double G = geometric_factor(s.q[j], s.m);
    c.eta[j] = std::pow(s.q[j], s.m) * bf.b.eta0[j];
    c.gamma[j] = bf.b.gamma0[j] + s.q[j] / 2 * G * bf.b.eta0[j];
    c.Delta[j] = bf.T * bf.b.eta0[j] / 2 * G;
  }
  c.f_norm = std::pow(s.p, s.m) * bf.b.f0_norm;
  c.g_norm = bf.b.g0_norm + s.p / 2 * geometric_factor(s.p, s.m) * bf.b.f0_norm;
  return c;
}

RestrictedNFResult restricted_nf_recursion(const RestrictedBoundFunctions& bf, const RestrictedSchedule& s) {
  const auto verdict = validate_restricted_schedule(bf, s);
  if (!verdict.valid) throw InvalidSchedule("schedule refused: " + verdict.failing);
  RestrictedNFResult out;
  RestrictedNFState st;
  st.eta = bf.b.eta0;
  st.gamma = bf.b.gamma0;
  st.f_norm = bf.b.f0_norm;
  st.g_norm = bf.b.g0_norm;
  for (int l = 0; l < s.m; ++l) {
    for (int j = 0; j < 4; ++j) {
      st.Delta[j] += bf.T * st.eta[j] / 2;
      st.gamma[j] += s.q[j] / 2 * st.eta[j];
      st.eta[j] *= s.q[j];
    }
    st.g_norm += s.p / 2 * st.f_norm;
    st.f_norm *= s.p;
  }
  out.loop = st;
  out.closed = restricted_nf_closed_form(bf, s);
  return out;
}

double restricted_Delta(const RestrictedInput& in, Comp j) {
  return in.setup.T * in.bounds.eta(j) / 2 * geometric_factor(in.schedule.qj(j), in.schedule.m);
}

double restricted_L_tilde(const RestrictedInput& in) {
  return in.L_init + restricted_Delta(in, Comp::L) * in.setup.widths.r_L();
}

std::array<double, 2> c3_c4(const RestrictedInput& in) {
  const auto& s = in.setup;
  const double k = s.kappa, K = s.K, Lt = restricted_L_tilde(in);
  const double outer = s.widths.rho_L() + s.widths.r_L() - (K / k + 1) * Lt;
  const double inner = K / k * Lt;
  const double C3 = k / 2 * (outer * outer - inner * inner) - function_terms(in);
  const double ratio = std::pow(in.schedule.qj(Comp::G) / in.schedule.qj(Comp::L), in.schedule.m);
  const double C4 = std::abs(s.omega[0] * in.bounds.eta(Comp::L) * s.widths.r_L() +
                             ratio * s.omega[1] * in.bounds.eta(Comp::G) * s.widths.r_G());
  return {C3, C4};
}

double restricted_b(const RestrictedInput& in, double t) {
  const auto cc = c3_c4(in);
  return 2 / in.setup.kappa *
         (function_terms(in) + cc[1] * std::pow(in.schedule.qj(Comp::L), in.schedule.m) * std::abs(t));
}

namespace {

double lf_from_b(const RestrictedInput& in, double b) {
  const double KL = in.setup.K / in.setup.kappa * restricted_L_tilde(in);
  return KL + std::sqrt(KL * KL + b) + restricted_Delta(in, Comp::L) * in.setup.widths.r_L();
}

}  // namespace

double restricted_Lf(const RestrictedInput& in, double t) { return lf_from_b(in, restricted_b(in, t)); }

double restricted_Lf_at_tbar(const RestrictedInput& in) {
  const auto cc = c3_c4(in);
  if (cc[1] == 0.0 || !(cc[0] > 0)) return restricted_Lf(in, 0.0);
  // C4 q_L^m t_bar = C3
  return lf_from_b(in, 2 / in.setup.kappa * (function_terms(in) + cc[0]));
}

double restricted_V(const RestrictedInput& in) {
  const auto& w = in.setup.widths;
  return w.rho_L() + w.r_L() - restricted_Delta(in, Comp::L) * w.r_L();
}

double restricted_W(const RestrictedInput& in) {
  const double V = restricted_V(in), L0 = in.setup.L0, Li = in.L_init;
  return (Li + V) * (Li + 2 * L0 + V) / (2 * (L0 - V) * (L0 - V) * (L0 - Li) * (L0 - Li));
}

GCheck g_confinement_check(const RestrictedInput& in) {
  const auto& w = in.setup.widths;
  GCheck g;
  g.lhs = std::abs(in.G_init) + (restricted_W(in) + 2 * in.setup.eps * in.H1_sup_complex) / in.setup.omega_g;
  g.rhs = w.rho_G() + w.r_G() - restricted_Delta(in, Comp::G) * w.r_G();
  g.margin = g.rhs - g.lhs;
  g.ok = g.margin >= 0;
  return g;
}

double b_bound(const RestrictedSetup& s, double L_start, double Lf, double H1_sup_real) {
  const double c = std::pow(s.mu, 3) * s.Gm0 * s.Gm0;
  const double Lmin = L_start - Lf;
  if (!(Lmin > 0)) return INFINITY;
  // 1/(2L^2) is decreasing, so the largest change is towards smaller L
  return c / (2 * Lmin * Lmin) - c / (2 * L_start * L_start) + 2 * s.eps * H1_sup_real;
}

EccentricityBand eccentricity_band(const RestrictedSetup& s, double L_start, double Lf, double e0, double B) {
  if (!(e0 >= 0 && e0 < 1)) throw DomainError("e0 must lie in [0, 1)");
  EccentricityBand band;
  auto axis = [&](double L) { return L * L / (s.mu * s.mu * s.Gm0); };
  const double a0 = axis(L_start);
  const double a_lo = axis(std::max(L_start - Lf, 0.0)), a_hi = axis(L_start + Lf);
  const double y0 = 1 - e0 * e0;
  const double Bn = B / (s.mu * s.omega_g * std::sqrt(s.Gm0));
  const double root = std::sqrt(a0 * y0);
  // A_-(t) a(t) = (sqrt(a0 y0) - Bn)^2 and A_+(t) a(t) = (sqrt(a0 y0) + Bn)^2
  band.A_minus = (root - Bn) * (root - Bn) / a_hi;
  band.A_plus = a_lo > 0 ? (root + Bn) * (root + Bn) / a_lo : INFINITY;
  band.clamped = band.A_plus > 1 || band.A_minus < 0 || !std::isfinite(B);
  band.e_hi = std::isfinite(B) ? std::sqrt(std::clamp(1 - band.A_minus, 0.0, 1.0)) : 1.0;
  band.e_lo = std::isfinite(B) ? std::sqrt(std::clamp(1 - band.A_plus, 0.0, 1.0)) : 0.0;
  return band;
}

std::string RestrictedReport::first_failure() const {
  if (!c3_positive) return "C3(L_init) > 0";
  if (!g_check.ok) return "G confinement by energy conservation";
  return "";
}

RestrictedReport evaluate_restricted(const RestrictedInput& in) {
  RestrictedReport rep;
  const auto cc = c3_c4(in);
  rep.C3 = cc[0];
  rep.C4 = cc[1];
  rep.c3_positive = rep.C3 > 0;
  if (rep.C4 == 0.0) {
    rep.unbounded = true;
    rep.t_bar = INFINITY;
    rep.log10_t_bar = INFINITY;
  } else if (rep.C3 > 0) {
    const double qL = in.schedule.qj(Comp::L);
    rep.t_bar = rep.C3 / rep.C4 * std::pow(qL, -in.schedule.m);
    rep.log10_t_bar = std::log10(rep.C3 / rep.C4) - in.schedule.m * std::log10(qL);
  }
  rep.V = restricted_V(in);
  rep.W = restricted_W(in);
  for (int j = 0; j < 4; ++j) rep.Delta[j] = restricted_Delta(in, static_cast<Comp>(j));
  rep.L_tilde = restricted_L_tilde(in);
  rep.Lf_0 = restricted_Lf(in, 0.0);
  rep.Lf_tbar = restricted_Lf_at_tbar(in);
  rep.g_check = g_confinement_check(in);
  const double L_start = in.setup.L0 - in.L_init;
  rep.band_0 = eccentricity_band(in.setup, L_start, rep.Lf_0, in.e0,
                                 b_bound(in.setup, L_start, rep.Lf_0, in.H1_sup_real));
  rep.band_tbar = eccentricity_band(in.setup, L_start, rep.Lf_tbar, in.e0,
                                    b_bound(in.setup, L_start, rep.Lf_tbar, in.H1_sup_real));
  return rep;
}

}  // namespace resostab
