#include "resostab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace resostab {

RestrictedFlow::RestrictedFlow(const RestrictedSetup& s)
    : c_kepler_(std::pow(s.mu, 3) * s.Gm0 * s.Gm0), omega_g_(s.omega_g), eps_(s.eps), base_(s.H1.base_point()) {
  if (!s.H1.conjugate_symmetric(1e-9)) throw DomainError("H1 must be real (conjugate-symmetric coefficients)");
  // keep one representative of each conjugate pair (k, -k): the series is real
  std::map<std::pair<int, int>, Harmonic> groups;
  for (const auto& [k, c] : s.H1.terms()) {
    const bool rep = k.k1 > 0 || (k.k1 == 0 && k.k2 >= 0);
    if (!rep) continue;
    auto& h = groups[{k.k1, k.k2}];
    h.k1 = k.k1;
    h.k2 = k.k2;
    h.weight = (k.k1 == 0 && k.k2 == 0) ? 1.0 : 2.0;
    h.mono.push_back({k.a1, k.a2});
    h.coef.push_back(c);
    max_deg_ = std::max({max_deg_, k.a1, k.a2});
    max_k_ = std::max({max_k_, std::abs(k.k1), std::abs(k.k2)});
  }
  if (max_deg_ >= 16 || max_k_ >= 32) throw DomainError("H1 exceeds the integrator's degree or harmonic limits");
  for (auto& [key, h] : groups) harm_.push_back(std::move(h));
}

std::array<double, 5> RestrictedFlow::eval(const State4& y) const {
  ++evals_;
  const int n = max_deg_ + 1, nk = max_k_;
  double z1[16], z2[16];
  cplx e1[64], e2[64];  // e_j[k + nk] = exp(i k angle_j)
  const double d1 = y[0] - base_[0], d2 = y[1] - base_[1];
  z1[0] = z2[0] = 1.0;
  for (int i = 1; i < n; ++i) {
    z1[i] = z1[i - 1] * d1;
    z2[i] = z2[i - 1] * d2;
  }
  const cplx u1(std::cos(y[2]), std::sin(y[2])), u2(std::cos(y[3]), std::sin(y[3]));
  e1[nk] = e2[nk] = 1.0;
  for (int k = 1; k <= nk; ++k) {
    e1[nk + k] = e1[nk + k - 1] * u1;
    e2[nk + k] = e2[nk + k - 1] * u2;
    e1[nk - k] = std::conj(e1[nk + k]);
    e2[nk - k] = std::conj(e2[nk + k]);
  }
  double v = 0, dL = 0, dG = 0, dl = 0, dg = 0;
  for (const auto& h : harm_) {
    cplx p = 0, pL = 0, pG = 0;
    for (std::size_t i = 0; i < h.mono.size(); ++i) {
      const int a1 = h.mono[i][0], a2 = h.mono[i][1];
      p += h.coef[i] * (z1[a1] * z2[a2]);
      if (a1 > 0) pL += h.coef[i] * (a1 * z1[a1 - 1] * z2[a2]);
      if (a2 > 0) pG += h.coef[i] * (a2 * z1[a1] * z2[a2 - 1]);
    }
    const cplx e = e1[h.k1 + nk] * e2[h.k2 + nk];
    const cplx pe = p * e;
    v += h.weight * pe.real();
    dL += h.weight * (pL * e).real();
    dG += h.weight * (pG * e).real();
    // d/dangle of Re(c e^{ik.t}) = -k Im(c e^{ik.t})
    dl -= h.weight * h.k1 * pe.imag();
    dg -= h.weight * h.k2 * pe.imag();
  }
  return {v, dL, dG, dl, dg};
}

void RestrictedFlow::rhs(const State4& y, State4& dy) const {
  const auto d = eval(y);
  const double L = y[0];
  dy[0] = -eps_ * d[3];
  dy[1] = -eps_ * d[4];
  dy[2] = c_kepler_ / (L * L * L) + eps_ * d[1];
  dy[3] = -omega_g_ + eps_ * d[2];
}

double RestrictedFlow::H1(const State4& y) const { return eval(y)[0]; }

double RestrictedFlow::energy(const State4& y) const {
  return -c_kepler_ / (2 * y[0] * y[0]) - omega_g_ * y[1] + eps_ * eval(y)[0];
}

State4 gbs_increment(const RestrictedFlow& flow, const State4& y, double h) {
  // Works on offsets from y so that the result is not polluted by the rounding of y itself.
  constexpr int kLevels = 4;
  constexpr int nseq[kLevels] = {2, 4, 6, 8};
  State4 f0;
  flow.rhs(y, f0);
  State4 tab[kLevels];
  auto at = [&](const State4& off) {
    State4 p;
    for (int c = 0; c < 4; ++c) p[c] = y[c] + off[c];
    return p;
  };
  for (int i = 0; i < kLevels; ++i) {
    const int n = nseq[i];
    const double hs = h / n;
    State4 zm{}, z, f;
    for (int c = 0; c < 4; ++c) z[c] = hs * f0[c];
    for (int k = 1; k < n; ++k) {
      flow.rhs(at(z), f);
      for (int c = 0; c < 4; ++c) {
        const double zn = zm[c] + 2 * hs * f[c];
        zm[c] = z[c];
        z[c] = zn;
      }
    }
    flow.rhs(at(z), f);
    for (int c = 0; c < 4; ++c) tab[i][c] = 0.5 * (zm[c] + z[c] + hs * f[c]);
    // Neville-Aitken extrapolation in (h/n)^2
    for (int k = i - 1; k >= 0; --k) {
      const double ratio = static_cast<double>(nseq[i]) / nseq[k];
      const double den = ratio * ratio - 1.0;
      for (int c = 0; c < 4; ++c) tab[k][c] = tab[k + 1][c] + (tab[k + 1][c] - tab[k][c]) / den;
    }
  }
  return tab[0];
}

State4 gbs_step(const RestrictedFlow& flow, const State4& y, double h) {
  const State4 d = gbs_increment(flow, y, h);
  return {y[0] + d[0], y[1] + d[1], y[2] + d[2], y[3] + d[3]};
}

double eccentricity_of(double L, double G, bool* clamped) {
  const double ratio = G / L;
  if (std::abs(ratio) >= 1.0) {
    if (clamped) *clamped = true;
    return 0.0;
  }
  if (clamped) *clamped = false;
  return std::sqrt(1.0 - ratio * ratio);
}

double axis_of(const RestrictedSetup& s, double L) { return L * L / (s.mu * s.mu * s.Gm0); }

TrajectorySample integrate(const RestrictedSetup& s, const State4& y0, double t_end, double step,
                           std::size_t sample_every) {
  if (!(y0[0] > 0)) throw DomainError("initial L must be positive");
  if (step == 0.0 || !std::isfinite(step)) throw DomainError("step must be nonzero and finite");
  if (sample_every == 0) sample_every = 1;
  const RestrictedFlow flow(s);
  TrajectorySample tr;
  const double H0 = flow.energy(y0);
  const double scale = std::abs(H0) > 0 ? std::abs(H0) : 1.0;
  auto push = [&](double t, const State4& y) {
    bool cl = false;
    tr.t.push_back(t);
    tr.L.push_back(y[0]);
    tr.G.push_back(y[1]);
    tr.l.push_back(y[2]);
    tr.g.push_back(y[3]);
    tr.e.push_back(eccentricity_of(y[0], y[1], &cl));
    if (cl) ++tr.e_clamped;
    tr.a.push_back(axis_of(s, y[0]));
    const double H = flow.energy(y);
    tr.H.push_back(H);
    const double d = std::abs(H - H0) / scale;
    tr.drift.push_back(d);
    tr.max_drift = std::max(tr.max_drift, d);
  };
  const double dir = t_end >= 0 ? 1.0 : -1.0;
  const double h = dir * std::abs(step);
  const auto n_steps = static_cast<std::size_t>(std::floor(std::abs(t_end) / std::abs(step) + 1e-9));
  State4 y = y0, carry{};
  // compensated accumulation of the increments; without it the rounding of a nearly
  // stationary state repeats identically every step and the error grows linearly
  auto advance = [&](double dt) {
    const State4 d = gbs_increment(flow, y, dt);
    for (int c = 0; c < 4; ++c) {
      const double inc = d[c] - carry[c];
      const double next = y[c] + inc;
      carry[c] = (next - y[c]) - inc;
      y[c] = next;
    }
  };
  push(0.0, y);
  for (std::size_t i = 1; i <= n_steps; ++i) {
    advance(h);
    ++tr.steps;
    if (!(y[0] > 0) || !std::isfinite(y[0])) {
      tr.aborted = true;
      tr.abort_reason = "L crossed zero";
      return tr;
    }
    if (i % sample_every == 0 || i == n_steps) push(static_cast<double>(i) * h, y);
  }
  const double rest = t_end - static_cast<double>(n_steps) * h;
  if (std::abs(rest) > 1e-12 * std::abs(step)) {
    advance(rest);
    ++tr.steps;
    push(t_end, y);
  }
  return tr;
}

EnvelopeVerdict check_envelopes(const TrajectorySample& traj, const RestrictedInput& in, const RestrictedReport& rep,
                                double Lf_scale) {
  EnvelopeVerdict v;
  if (traj.t.empty()) return v;
  const double L_start = traj.L.front(), e_start = traj.e.front();
  for (std::size_t i = 0; i < traj.t.size(); ++i) {
    const double t = traj.t[i];
    if (!rep.unbounded && std::abs(t) > rep.t_bar) {
      ++v.samples_beyond_tbar;
      continue;
    }
    ++v.samples_checked;
    const double Lf = Lf_scale * restricted_Lf(in, t) + 2 * in.transform_shift_L;
    const double mL = Lf - std::abs(traj.L[i] - L_start);
    v.worst_L_margin = std::min(v.worst_L_margin, mL);
    if (mL < 0) ++v.violations_L;
    const double B = b_bound(in.setup, L_start, Lf, in.H1_sup_real);
    const auto band = eccentricity_band(in.setup, L_start, Lf, e_start, B);
    const double me = std::min(traj.e[i] - band.e_lo, band.e_hi - traj.e[i]);
    v.worst_e_margin = std::min(v.worst_e_margin, me);
    if (me < 0) ++v.violations_e;
  }
  v.ok = v.violations_L == 0 && v.violations_e == 0;
  return v;
}

std::size_t g_energy_bound_violations(const RestrictedSetup& s, const TrajectorySample& traj, double slack) {
  if (traj.t.empty()) return 0;
  const RestrictedFlow flow(s);
  const double c = std::pow(s.mu, 3) * s.Gm0 * s.Gm0;
  const State4 y0{traj.L[0], traj.G[0], traj.l[0], traj.g[0]};
  const double H1_0 = flow.H1(y0);
  std::size_t bad = 0;
  for (std::size_t i = 0; i < traj.t.size(); ++i) {
    const State4 y{traj.L[i], traj.G[i], traj.l[i], traj.g[i]};
    const double kin = std::abs(c / (2 * y[0] * y[0]) - c / (2 * y0[0] * y0[0]));
    const double numerical = std::abs(traj.H[i] - traj.H[0]);
    const double bound = (kin + s.eps * std::abs(flow.H1(y) - H1_0) + numerical) / s.omega_g;
    if (std::abs(y[1] - y0[1]) > bound + slack) ++bad;
  }
  return bad;
}

std::string trajectory_csv(const TrajectorySample& traj) {
  std::ostringstream out;
  out.precision(17);
  out << "t,L,G,l,g,e,H,drift\n";
  for (std::size_t i = 0; i < traj.t.size(); ++i)
    out << traj.t[i] << "," << traj.L[i] << "," << traj.G[i] << "," << traj.l[i] << "," << traj.g[i] << ","
        << traj.e[i] << "," << traj.H[i] << "," << traj.drift[i] << "\n";
  return out.str();
}

}  // namespace resostab
