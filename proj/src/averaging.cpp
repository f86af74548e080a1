#include "resostab/averaging.hpp"

#include <algorithm>
#include <cmath>

namespace resostab {

double BoundFunctions::chi0() const { return std::max(b.Xi0 + b.Gamma0, b.eta0 + b.gamma0 + b.delta); }

double BoundFunctions::Theta0() const { return std::max(T * b.Xi0 / 2.0, T * b.eta0 / 2.0); }

double upsilon0(double x, const BoundFunctions& bf) {
  const auto& b = bf.b;
  if (b.eta0 == 0.0) throw NoIterationNeeded();
  const double T = bf.T, chi = bf.chi0(), Th = bf.Theta0(), be2 = bf.beta * bf.beta;
  const double Tx = T * x;
  return Tx * Tx * b.eta0 * chi + T * x * x * Th * (2 * b.eta0 + 2 * b.gamma0 + b.delta) + Tx / 2 * chi +
         Th * x * (1 + b.gamma0 / b.eta0 + b.delta / b.eta0) +
         (Tx * b.Xi0 / bf.beta) * (Tx * b.Xi0 / bf.beta) * chi / b.eta0 +
         2 * T * x * x * b.Xi0 * Th * (b.Xi0 / b.eta0 + b.Gamma0 / b.eta0) / be2;
}

double Upsilon0(double x, const BoundFunctions& bf) {
  const auto& b = bf.b;
  if (b.Xi0 == 0.0) throw CartesianAbsent();
  const double T = bf.T, chi = bf.chi0(), Th = bf.Theta0(), be2 = bf.beta * bf.beta;
  const double Tx = T * x;
  return be2 * (Tx * b.eta0) * (Tx * b.eta0) * chi / b.Xi0 +
         be2 * T * x * x * b.eta0 * Th * (2 * b.eta0 / b.Xi0 + 2 * b.gamma0 / b.Xi0 + b.delta / b.Xi0) +
         Tx / 2 * chi + Th * x * (1 + b.Gamma0 / b.Xi0) + (Tx * b.Xi0) * (Tx * b.Xi0) * chi / b.Xi0 +
         2 * T * x * x * Th * (b.Xi0 + b.Gamma0);
}

double zeta0(double x, const BoundFunctions& bf) {
  const auto& b = bf.b;
  return bf.T * x / 2 * std::max(b.gamma0 + b.delta, b.Gamma0) + bf.Theta0() * x;
}

ScheduleVerdict validate_schedule(const BoundFunctions& bf, const Schedule& s) {
  ScheduleVerdict v;
  const double m = s.m;
  const double ups = bf.b.eta0 == 0.0 ? 0.0 : upsilon0(m, bf);
  const double Ups = bf.b.Xi0 == 0.0 ? 0.0 : Upsilon0(m, bf);
  v.margin_q1 = s.q1 - 2 * ups;
  v.margin_q2 = s.q2 - 2 * Ups;
  v.margin_p = s.p - 2 * zeta0(m, bf);
  v.margin_step = 1.0 - bf.T * m * bf.b.eta0 / 2.0;
  auto in_range = [](double x) { return x > 0.0 && x < kContractionCap; };
  if (s.m < 1)
    v.failing = "m >= 1";
  else if (!in_range(s.p) || !in_range(s.q1) || !in_range(s.q2))
    v.failing = "contraction factors in (0, 2/3)";
  else if (bf.b.eta0 == 0.0 && bf.b.Xi0 == 0.0)
    v.failing.clear();  // nothing to normalise
  else if (!(v.margin_q1 > 0))
    v.failing = "2 upsilon0(m) < q1";
  else if (!(v.margin_q2 > 0))
    v.failing = "2 Upsilon0(m) < q2";
  else if (!(v.margin_p > 0))
    v.failing = "2 zeta0(m) < p";
  else if (!(v.margin_step > 0))
    v.failing = "T m eta0 / 2 < 1";
  v.valid = v.failing.empty();
  return v;
}

int max_valid_m(const BoundFunctions& bf, double p, double q1, double q2, int m_cap) {
  int best = 0;
  for (int m = 1; m <= m_cap; ++m) {
    if (!validate_schedule(bf, Schedule{m, p, q1, q2}).valid) break;
    best = m;
  }
  return best;
}

bool tight_schedule(const BoundFunctions& bf, int m, double slack, Schedule& out) {
  const double k = 1.0 + slack;
  const double ups = bf.b.eta0 == 0.0 ? 0.0 : upsilon0(m, bf);
  const double Ups = bf.b.Xi0 == 0.0 ? 0.0 : Upsilon0(m, bf);
  // a vanishing factor is replaced by a tiny positive one so the schedule stays in (0, 2/3)
  const double floor = 1e-300;
  Schedule s{m, std::max(2 * zeta0(m, bf) * k, floor), std::max(2 * ups * k, floor), std::max(2 * Ups * k, floor)};
  if (!(s.p < kContractionCap && s.q1 < kContractionCap && s.q2 < kContractionCap)) return false;
  if (!validate_schedule(bf, s).valid) return false;
  out = s;
  return true;
}

NormalFormState nf_closed_form(const BoundFunctions& bf, const Schedule& s) {
  const auto& b = bf.b;
  const int m = s.m;
  const double G1 = geometric_factor(s.q1, m), G2 = geometric_factor(s.q2, m), Gp = geometric_factor(s.p, m);
  NormalFormState c;
  c.eta = std::pow(s.q1, m) * b.eta0;
  c.gamma = b.gamma0 + s.q1 / 2 * G1 * b.eta0;
  c.Xi = std::pow(s.q2, m) * b.Xi0;
  c.Gamma = b.Gamma0 + s.q2 / 2 * G2 * b.Xi0;
  c.f_norm = std::pow(s.p, m) * b.f0_norm;
  c.g_norm = s.p / 2 * Gp * b.f0_norm + b.g0_norm;
  c.Delta_aa = bf.T * b.eta0 / 2 * G1;
  c.Delta_cart = bf.T * b.Xi0 / 2 * G2;
  return c;
}

NormalFormResult nf_recursion(const BoundFunctions& bf, const Schedule& s) {
  const auto verdict = validate_schedule(bf, s);
  if (!verdict.valid) throw InvalidSchedule("schedule refused: " + verdict.failing);
  NormalFormResult out;
  out.schedule = s;
  NormalFormState st{bf.b.eta0, bf.b.gamma0, bf.b.Xi0, bf.b.Gamma0, bf.b.f0_norm, bf.b.g0_norm, 0.0, 0.0};
  for (int l = 0; l < s.m; ++l) {
    BoundFunctions step = bf;
    step.b.eta0 = st.eta;
    step.b.gamma0 = st.gamma;
    step.b.Xi0 = st.Xi;
    step.b.Gamma0 = st.Gamma;
    StepTrace tr{l, st.eta, st.gamma, st.Xi, st.Gamma, st.f_norm, st.g_norm, 0.0, 0.0, 0.0};
    tr.upsilon_l = st.eta > 0 ? upsilon0(s.m, step) : 0.0;
    tr.Upsilon_l = st.Xi > 0 ? Upsilon0(s.m, step) : 0.0;
    tr.zeta_l = zeta0(s.m, step);
    out.trace.push_back(tr);

    st.Delta_aa += bf.T * st.eta / 2;
    st.Delta_cart += bf.T * st.Xi / 2;
    st.gamma += s.q1 / 2 * st.eta;
    st.eta *= s.q1;
    st.Gamma += s.q2 / 2 * st.Xi;
    st.Xi *= s.q2;
    st.g_norm += s.p / 2 * st.f_norm;
    st.f_norm *= s.p;
  }
  out.loop = st;
  out.closed = nf_closed_form(bf, s);
  out.inverse_Delta_aa = out.closed.Delta_aa;
  out.inverse_Delta_cart = out.closed.Delta_cart;
  return out;
}

StepMatrixBound step_matrix_bound(const BoundFunctions& bf, double alpha, const WidthSet& w) {
  const auto& b = bf.b;
  if (!(alpha > 0 && alpha < 0.5)) throw DomainError("alpha must lie in (0, 1/2)");
  const double a = bf.T * b.eta0 / (2 * alpha), c = bf.T * b.Xi0 / (2 * alpha);
  if (!(a < 1.0 && c < 1.0)) throw DomainError("step condition T eta0/(2 alpha) < 1 violated");
  const double r = w.r(), s = w.s(), u = w.u(), be = w.beta();
  const double rs = std::sqrt(r / s), sr = std::sqrt(s / r);

  StepMatrixBound out;
  auto& M = out.M;
  // rows and columns ordered I1 I2 x1 x2 t1 t2 y1 y2
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double d = i == j ? 1.0 : 0.0;
      // block A
      M[i][j] = a + d;
      M[i][2 + j] = rs * c / be;
      M[2 + i][j] = be * sr * a;
      M[2 + i][2 + j] = c + d;
      // block B
      M[i][4 + j] = r / s * a;
      M[i][6 + j] = rs * c / be;
      M[2 + i][4 + j] = be * rs * a;
      M[2 + i][6 + j] = c;
      // block C
      M[4 + i][j] = s / r * a;
      M[4 + i][2 + j] = sr * c / be;
      M[6 + i][j] = be * sr * a;
      M[6 + i][2 + j] = c;
      // block D
      M[4 + i][4 + j] = a + d;
      M[4 + i][6 + j] = sr * c / be;
      M[6 + i][4 + j] = be * rs * a;
      M[6 + i][6 + j] = c + d;
    }
  }

  const double chi = bf.chi0(), Th = bf.Theta0(), T = bf.T;
  const double wI = (r * T * b.eta0 / 2 * chi + Th * (r * b.eta0 + r * b.gamma0)) / alpha;
  const double wx = (u * T * b.Xi0 / 2 * chi + Th * (u * b.Xi0 + u * b.Gamma0)) / alpha;
  const double wt = (s * T * b.eta0 / 2 * chi + Th * (s * b.eta0 + s * b.gamma0 + s * b.delta)) / alpha;
  out.w = {wI, wI, wx, wx, wt, wt, wx, wx};
  for (int i = 0; i < 8; ++i) {
    double acc = 0.0;
    for (int k = 0; k < 8; ++k) acc += M[i][k] * out.w[k];
    out.bound[i] = acc;
  }
  if (b.eta0 > 0) {
    const double ref = 2 * upsilon0(1.0 / alpha, bf) * b.eta0 * r;
    out.action_ratio = std::max(out.bound[0], out.bound[1]) / ref;
  }
  return out;
}

TaylorFourierSeries homological_solve(const TaylorFourierSeries& f0, std::array<double, 2> omega, double T) {
  if (!(T > 0)) throw DomainError("period must be positive");
  TaylorFourierSeries phi(f0.base_point(), f0.caps());
  for (const auto& [k, c] : f0.terms()) {
    if ((k.k1 == 0 && k.k2 == 0) || is_resonant_harmonic(k.k1, k.k2, omega)) {
      throw DomainError("resonant harmonic (" + std::to_string(k.k1) + ", " + std::to_string(k.k2) +
                        ") present in f0");
    }
    const double kw = k.k1 * omega[0] + k.k2 * omega[1];
    phi.add_term(k, c / cplx(0.0, kw));
  }
  return phi;
}

FirstOrderAverage first_order_average(const TaylorFourierSeries& H_pert, std::array<double, 2> omega, double T,
                                      Caps caps, int order, double overflow_threshold) {
  if (order < 1) throw DomainError("bracket order must be >= 1");
  FirstOrderAverage out;
  auto split = resonant_split(H_pert, omega, T);
  out.g0 = split.g_part.with_caps(caps);
  out.f0 = split.f_part.with_caps(caps);
  out.phi1 = homological_solve(out.f0, omega, T);

  TaylorFourierSeries r1(H_pert.base_point(), caps);
  TaylorFourierSeries Lg = out.g0, Lf = out.f0;
  double fact = 1.0;
  for (int n = 1; n <= order; ++n) {
    fact *= n;
    auto bg = poisson_bracket(out.phi1, Lg, caps);
    auto bfz = poisson_bracket(out.phi1, Lf, caps);
    out.discarded_mass += bg.discarded_mass + bfz.discarded_mass;
    Lg = bg.series;
    Lf = bfz.series;
    // L^n g0 / n!  +  n/(n+1)! L^n f0
    r1 = add(r1, add(Lg.scaled(1.0 / fact), Lf.scaled(n / (fact * (n + 1)))));
  }
  out.r1 = r1;
  auto rs = resonant_split(r1, omega, T);
  out.g1 = add(out.g0, rs.g_part);
  out.f1 = rs.f_part;
  out.cap_overflow = out.discarded_mass > overflow_threshold;
  return out;
}

}  // namespace resostab
