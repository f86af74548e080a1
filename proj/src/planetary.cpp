#include "resostab/planetary.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace resostab {

MassConfig::MassConfig(double m0, double m1, double m2, double G_N) : m0_(m0), m1_(m1), m2_(m2), G_(G_N) {
  if (!(m0 > 0.0)) throw DomainError("m0 must be positive");
  if (!(m1 >= 0.0 && m1 < m0)) throw DomainError("need 0 <= m1 < m0");
  if (!(m2 >= 0.0 && m2 < m0)) throw DomainError("need 0 <= m2 < m0");
  if (!(G_N > 0.0)) throw DomainError("G_N must be positive");
}

double MassConfig::mu(int j) const {
  return j == 0 ? m0_ * m1_ / (m0_ + m1_) : (m0_ + m1_) * m2_ / (m0_ + m1_ + m2_);
}

double MassConfig::M(int j) const { return j == 0 ? m0_ + m1_ : m0_ + m1_ + m2_; }

double MassConfig::eps() const { return std::max(m1_ / m0_, m2_ / m0_); }

double MassConfig::kepler_coeff(int j) const {
  const double Mj = M(j), mj = mu(j);
  return G_ * G_ * Mj * Mj * mj * mj * mj;
}

double lambda_from_axis(const MassConfig& mass, int j, double a_j) {
  if (!(a_j > 0.0)) throw DomainError("semi-major axis must be positive");
  return mass.mu(j) * std::sqrt(mass.G() * mass.M(j) * a_j);
}

double kepler_hamiltonian(const MassConfig& mass, std::array<double, 2> Lambda) {
  double h = 0.0;
  for (int j = 0; j < 2; ++j) {
    if (!(Lambda[j] > 0.0)) throw DomainError("Lambda must be positive");
    h -= mass.kepler_coeff(j) / (2.0 * Lambda[j] * Lambda[j]);
  }
  return h;
}

std::array<double, 2> mean_motions(const MassConfig& mass, std::array<double, 2> Lambda) {
  std::array<double, 2> w{};
  for (int j = 0; j < 2; ++j) {
    if (!(Lambda[j] > 0.0)) throw DomainError("Lambda must be positive");
    w[j] = mass.kepler_coeff(j) / (Lambda[j] * Lambda[j] * Lambda[j]);
  }
  return w;
}

ResonanceSpec locate_resonance(const MassConfig& mass, double Lambda1_0, int p_int, int q_int) {
  if (!(Lambda1_0 > 0.0)) throw DomainError("Lambda1_0 must be positive");
  if (p_int <= 0 || q_int <= 0) throw DomainError("resonance integers must be positive");
  if (mass.kepler_coeff(1) <= 0.0 || mass.kepler_coeff(0) <= 0.0)
    throw DomainError("both planets need positive mass");
  ResonanceSpec res;
  res.p_int = p_int;
  res.q_int = q_int;
  const double w1 = mass.kepler_coeff(0) / std::pow(Lambda1_0, 3);
  const double w2 = w1 * q_int / p_int;
  res.Lambda0 = {Lambda1_0, std::cbrt(mass.kepler_coeff(1) / w2)};
  res.omega = mean_motions(mass, res.Lambda0);
  res.T = 2.0 * std::numbers::pi * p_int / res.omega[0];
  return res;
}

ConvexityConstants convexity_constants(const MassConfig& mass, std::array<double, 2> Lambda0, double extent) {
  if (!(extent >= 0.0)) throw DomainError("extent must be nonnegative");
  if (!(extent < std::min(Lambda0[0], Lambda0[1]))) throw DomainError("extent reaches Lambda = 0");
  ConvexityConstants c;
  c.kappa = INFINITY;
  c.K = 0.0;
  for (int j = 0; j < 2; ++j) {
    const double cj = 3.0 * mass.kepler_coeff(j);
    c.kappa = std::min(c.kappa, cj / std::pow(Lambda0[j] + extent, 4));
    c.K += cj / std::pow(Lambda0[j] - extent, 4);
  }
  return c;
}

double convexity_extent(const WidthSet& w) { return w.rho() + 4.0 * w.r(); }

double frequency_shift_sup(const MassConfig& mass, const ResonanceSpec& res, double radius) {
  double out = 0.0;
  for (int j = 0; j < 2; ++j) {
    const double L0 = res.Lambda0[j];
    if (!(radius < L0)) throw DomainError("delta disk touches Lambda = 0");
    const double c = mass.kepler_coeff(j), w = res.omega[j];
    auto f = [&](double re, double im) {
      const std::complex<double> L(L0 + re, im);
      return std::abs(c / (L * L * L) - w);
    };
    // the point closest to the pole maximises |(L0+I)^-3 - L0^-3| since every
    // Taylor coefficient of (1-v)^-3 - 1 is positive
    const double direct = f(-radius, 0.0);
    out = std::max({out, direct, circle_sup(f, radius)});
  }
  return out;
}

double delta_bound(const MassConfig& mass, const ResonanceSpec& res, const WidthSet& w) {
  return frequency_shift_sup(mass, res, w.rho() + 3.0 * w.r()) / w.s();
}

FieldBounds cauchy_initial_bounds(double HP_norm4, double eps, const WidthSet& w, double delta) {
  if (!(HP_norm4 >= 0.0)) throw DomainError("HP_norm4 must be nonnegative");
  if (!(eps >= 0.0)) throw DomainError("eps must be nonnegative");
  FieldBounds b;
  b.f0_norm = 2.0 * eps * HP_norm4;
  b.g0_norm = eps * HP_norm4;
  const double rs = w.r() * w.s(), u2 = w.u() * w.u();
  b.eta0 = b.f0_norm / rs;
  b.Xi0 = b.f0_norm / u2;
  b.gamma0 = b.g0_norm / rs;
  b.Gamma0 = b.g0_norm / u2;
  b.delta = delta;
  return b;
}

}  // namespace resostab
