#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "resostab/planetary.hpp"

using namespace resostab;

namespace {

const double kG = 4 * std::numbers::pi * std::numbers::pi;

MassConfig jupiter_saturn() { return MassConfig(1.0, 1.0 / 1047.348644, 1.0 / 3497.901768, kG); }

}  // namespace

TEST_CASE("mass configuration derived quantities") {
  const double m0 = 1.0, m1 = 1e-3, m2 = 3e-4;
  const MassConfig mc(m0, m1, m2, 2.5);
  CHECK(mc.mu(0) == doctest::Approx(m0 * m1 / (m0 + m1)).epsilon(1e-14));
  CHECK(mc.mu(1) == doctest::Approx((m0 + m1) * m2 / (m0 + m1 + m2)).epsilon(1e-14));
  CHECK(mc.M(0) == doctest::Approx(m0 + m1).epsilon(1e-14));
  CHECK(mc.M(1) == doctest::Approx(m0 + m1 + m2).epsilon(1e-14));
  CHECK(mc.eps() == doctest::Approx(1e-3).epsilon(1e-14));
  CHECK(mc.sigma0() + mc.sigma1() == doctest::Approx(1.0).epsilon(1e-15));

  CHECK_THROWS_AS(MassConfig(1.0, 1.0, 0.0, 1.0), DomainError);
  CHECK_THROWS_AS(MassConfig(1.0, -1e-3, 0.0, 1.0), DomainError);
  CHECK_THROWS_AS(MassConfig(1.0, 1e-3, 1e-3, 0.0), DomainError);
}

TEST_CASE("lambda from semi-major axis") {
  // G M_1 = 1 with mu_1 factored out: Lambda / mu_1 = sqrt(a)
  const double m0 = 1.0, m1 = 0.5;
  const MassConfig mc(m0, m1, 0.0, 1.0 / (m0 + m1));
  CHECK(lambda_from_axis(mc, 0, 4.0) / mc.mu(0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(lambda_from_axis(mc, 0, 16.0) == doctest::Approx(2 * lambda_from_axis(mc, 0, 4.0)).epsilon(1e-15));
  CHECK_THROWS_AS(lambda_from_axis(mc, 0, 0.0), DomainError);
  CHECK_THROWS_AS(lambda_from_axis(mc, 1, -1.0), DomainError);
}

TEST_CASE("Keplerian hamiltonian") {
  const auto mc = jupiter_saturn();
  const double c0 = mc.kepler_coeff(0), c1 = mc.kepler_coeff(1);
  CHECK(c0 == doctest::Approx(kG * kG * std::pow(mc.M(0), 2) * std::pow(mc.mu(0), 3)).epsilon(1e-14));
  // scale both Lambda so that c_j / Lambda_j^2 = 1
  const std::array<double, 2> L{std::sqrt(c0), std::sqrt(c1)};
  CHECK(kepler_hamiltonian(mc, L) == doctest::Approx(-1.0).epsilon(1e-14));

  const std::array<double, 2> L0{0.002, 0.001};
  double prev = kepler_hamiltonian(mc, L0);
  for (int i = 1; i <= 20; ++i) {
    const double h = kepler_hamiltonian(mc, {L0[0] * (1 + 0.05 * i), L0[1]});
    CHECK(h > prev);
    CHECK(h < 0.0);
    prev = h;
  }

  const auto w = mean_motions(mc, L0);
  for (int j = 0; j < 2; ++j) {
    const double d = 1e-6 * L0[j];
    auto Lp = L0, Lm = L0;
    Lp[j] += d;
    Lm[j] -= d;
    const double fd = (kepler_hamiltonian(mc, Lp) - kepler_hamiltonian(mc, Lm)) / (2 * d);
    CHECK(w[j] == doctest::Approx(fd).epsilon(1e-8));
  }
  CHECK_THROWS_AS(kepler_hamiltonian(mc, {0.0, 1.0}), DomainError);
}

TEST_CASE("resonance location") {
  // 1:1 resonance: Lambda_2 / Lambda_1 only reflects the ratio of the Kepler constants,
  // so identical constants would give identical actions
  const MassConfig twin(1.0, 1e-3, 1e-3, kG);
  const auto r11 = locate_resonance(twin, 0.01, 1, 1);
  CHECK(r11.Lambda0[1] / r11.Lambda0[0] ==
        doctest::Approx(std::cbrt(twin.kepler_coeff(1) / twin.kepler_coeff(0))).epsilon(1e-14));

  const auto mc = jupiter_saturn();
  const double L1 = lambda_from_axis(mc, 0, 5.2038);
  const auto r = locate_resonance(mc, L1, 5, 2);
  CHECK(r.omega[0] / r.omega[1] == doctest::Approx(2.5).epsilon(1e-10));
  const auto w = mean_motions(mc, r.Lambda0);
  CHECK(r.omega[0] == doctest::Approx(w[0]).epsilon(1e-10));
  CHECK(r.omega[1] == doctest::Approx(w[1]).epsilon(1e-10));
  CHECK(r.T * r.omega[0] == doctest::Approx(2 * std::numbers::pi * 5).epsilon(1e-10));
  CHECK(r.T * r.omega[1] == doctest::Approx(2 * std::numbers::pi * 2).epsilon(1e-10));
  CHECK_THROWS_AS(locate_resonance(mc, 0.0, 5, 2), DomainError);
}

TEST_CASE("convexity constants") {
  const auto mc = jupiter_saturn();
  const auto r = locate_resonance(mc, lambda_from_axis(mc, 0, 5.2038), 5, 2);
  const auto c0 = convexity_constants(mc, r.Lambda0, 0.0);
  double kmin = INFINITY, ksum = 0.0;
  for (int j = 0; j < 2; ++j) {
    const double e = 3 * mc.kepler_coeff(j) / std::pow(r.Lambda0[j], 4);
    kmin = std::min(kmin, e);
    ksum += e;
  }
  CHECK(c0.kappa == doctest::Approx(kmin).epsilon(1e-14));
  CHECK(c0.K == doctest::Approx(ksum).epsilon(1e-14));

  const double ext = 0.01 * std::min(r.Lambda0[0], r.Lambda0[1]);
  const auto c = convexity_constants(mc, r.Lambda0, ext);
  CHECK(c.kappa <= c.K);
  CHECK(c.kappa < c0.kappa);
  CHECK(c.K > c0.K);
  CHECK_THROWS_AS(convexity_constants(mc, r.Lambda0, 2 * r.Lambda0[0]), DomainError);
}

TEST_CASE("delta bound") {
  const auto mc = jupiter_saturn();
  const auto res = locate_resonance(mc, lambda_from_axis(mc, 0, 5.2038), 5, 2);
  const double Lmax = std::max(res.Lambda0[0], res.Lambda0[1]);

  const WidthSet w0(0.0, 1e-300, 0.04, 0.0, 1.0);
  CHECK(delta_bound(mc, res, w0) <= 1e-250);

  double prev = 0.0;
  for (int i = 1; i <= 30; ++i) {
    const WidthSet w(0.0, Lmax * 1e-7 * i, 0.04, 0.0, 1.0);
    const double d = delta_bound(mc, res, w);
    CHECK(d >= prev);
    prev = d;
  }

  // dense circle sampling oracle, independent of the refinement used by the library
  const WidthSet w(0.3 * Lmax * 1e-3, Lmax * 1e-4, 0.04, 0.0, 1.0);
  const double radius = w.rho() + 3 * w.r();
  double best = 0.0;
  const int n = 1000000;
  for (int j = 0; j < 2; ++j) {
    const double c = mc.kepler_coeff(j), om = res.omega[j];
    for (int i = 0; i < n; ++i) {
      const double ph = 2 * std::numbers::pi * i / n;
      const std::complex<double> L = res.Lambda0[j] + std::polar(radius, ph);
      best = std::max(best, std::abs(c / (L * L * L) - om));
    }
  }
  CHECK(delta_bound(mc, res, w) == doctest::Approx(best / w.s()).epsilon(1e-6));

  const WidthSet huge(0.0, res.Lambda0[0], 0.04, 0.0, 1.0);
  CHECK_THROWS_AS(delta_bound(mc, res, huge), DomainError);
}

TEST_CASE("initial bounds from the Cauchy inequalities") {
  const auto w = WidthSet::with_beta(0.0, 1e-5, 1e-2, 0.0, 0.8);
  auto b = cauchy_initial_bounds(3.0, 0.0, w, 0.7);
  CHECK(b.eta0 == 0.0);
  CHECK(b.gamma0 == 0.0);
  CHECK(b.Xi0 == 0.0);
  CHECK(b.Gamma0 == 0.0);
  CHECK(b.f0_norm == 0.0);
  CHECK(b.delta == 0.7);

  b = cauchy_initial_bounds(3.0, 1e-3, w, 0.0);
  CHECK(b.Xi0 / b.eta0 == doctest::Approx(w.beta() * w.beta()).epsilon(1e-14));
  CHECK(b.g0_norm * 2 == doctest::Approx(b.f0_norm).epsilon(1e-15));

  const auto w2 = WidthSet::with_beta(0.0, 1e-5, 1e-2, 0.0, 1.0);  // r s = 1e-7
  b = cauchy_initial_bounds(1.0, 1e-11, w2, 0.0);
  CHECK(b.eta0 == doctest::Approx(2e-4).epsilon(1e-12));
  CHECK_THROWS_AS(cauchy_initial_bounds(-1.0, 1e-11, w2, 0.0), DomainError);
}
