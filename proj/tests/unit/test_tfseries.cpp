#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "random_series.hpp"
#include "resostab/tfseries.hpp"

using namespace resostab;
using testsupport::random_real_series;

namespace {

constexpr Caps kCaps{6, 8};

TaylorFourierSeries cos_theta1(Caps caps = kCaps) {
  TaylorFourierSeries s({0.0, 0.0}, caps);
  s.add_term({1, 0, 0, 0}, 0.5);
  s.add_term({-1, 0, 0, 0}, 0.5);
  return s;
}

TaylorFourierSeries sin_theta1(Caps caps = kCaps) {
  TaylorFourierSeries s({0.0, 0.0}, caps);
  s.add_term({1, 0, 0, 0}, cplx(0.0, -0.5));
  s.add_term({-1, 0, 0, 0}, cplx(0.0, 0.5));
  return s;
}

double fd_bracket(const TaylorFourierSeries& a, const TaylorFourierSeries& b, std::array<double, 2> I,
                  std::array<double, 2> t) {
  const double h = 1e-5;
  auto d = [&](const TaylorFourierSeries& f, int var, int j) {
    auto Ip = I, Im = I, tp = t, tm = t;
    if (var == 0) {
      Ip[j] += h;
      Im[j] -= h;
    } else {
      tp[j] += h;
      tm[j] -= h;
    }
    return (f.evaluate_real(Ip, tp) - f.evaluate_real(Im, tm)) / (2 * h);
  };
  double out = 0.0;
  for (int j = 0; j < 2; ++j) out += d(a, 0, j) * d(b, 1, j) - d(a, 1, j) * d(b, 0, j);
  return out;
}

}  // namespace

TEST_CASE("add: identity, like terms and evaluation oracle") {
  std::mt19937_64 rng(11);
  auto a = random_real_series(rng, kCaps, 3, 3, 12);
  TaylorFourierSeries zero({0.0, 0.0}, kCaps);
  CHECK(add(a, zero).terms() == a.terms());

  TaylorFourierSeries c2 = cos_theta1().scaled(2.0), c3 = cos_theta1().scaled(3.0);
  CHECK(add(c2, c3).terms() == cos_theta1().scaled(5.0).terms());

  auto b = random_real_series(rng, kCaps, 3, 3, 12);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const auto sum = add(a, b);
  for (int i = 0; i < 100; ++i) {
    std::array<double, 2> I{U(rng), U(rng)}, t{3 * U(rng), 3 * U(rng)};
    const double expect = a.evaluate_real(I, t) + b.evaluate_real(I, t);
    CHECK(sum.evaluate_real(I, t) == doctest::Approx(expect).epsilon(1e-12).scale(1.0));
  }

  TaylorFourierSeries other({1.0, 0.0}, kCaps);
  CHECK_THROWS_AS(add(a, other), StructuralError);
}

TEST_CASE("multiply: identity, product-to-sum and evaluation oracle") {
  std::mt19937_64 rng(12);
  auto a = random_real_series(rng, kCaps, 2, 2, 8);
  auto one = TaylorFourierSeries::constant({0.0, 0.0}, kCaps, 1.0);
  CHECK(multiply(a, one, kCaps).series.terms() == a.terms());

  const auto sq = multiply(cos_theta1(), cos_theta1(), kCaps).series;
  CHECK(sq.size() == 3);
  CHECK(sq.coefficient({0, 0, 0, 0}) == cplx(0.5, 0.0));
  CHECK(sq.coefficient({2, 0, 0, 0}) == cplx(0.25, 0.0));
  CHECK(sq.coefficient({-2, 0, 0, 0}) == cplx(0.25, 0.0));

  auto b = random_real_series(rng, kCaps, 2, 2, 8);
  const Caps big{8, 8};
  auto prod = multiply(a, b, big);
  CHECK(prod.discarded_mass == 0.0);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    std::array<double, 2> I{U(rng), U(rng)}, t{3 * U(rng), 3 * U(rng)};
    const double expect = a.evaluate_real(I, t) * b.evaluate_real(I, t);
    CHECK(prod.series.evaluate_real(I, t) == doctest::Approx(expect).epsilon(1e-10).scale(1.0));
  }

  // truncation records what it drops
  auto tight = multiply(a, b, Caps{1, 1});
  CHECK(tight.discarded_mass > 0.0);
}

TEST_CASE("caps are enforced on insertion") {
  TaylorFourierSeries s({0.0, 0.0}, Caps{2, 3});
  CHECK_THROWS_AS(s.add_term({4, 0, 0, 0}, 1.0), StructuralError);
  CHECK_THROWS_AS(s.add_term({0, 0, 2, 1}, 1.0), StructuralError);
  CHECK_NOTHROW(s.add_term({3, -3, 1, 1}, 1.0));
}

TEST_CASE("poisson bracket") {
  std::mt19937_64 rng(13);
  auto a = random_real_series(rng, kCaps, 2, 2, 10);
  auto aa = poisson_bracket(a, a, kCaps).series;
  CHECK(aa.coefficient_mass() <= 1e-14 * (1.0 + a.coefficient_mass()));

  // canonical pair: {I1, sin t1} = cos t1 and {I2, e^{i t2}} = i e^{i t2}
  TaylorFourierSeries I1({0.0, 0.0}, kCaps), I2({0.0, 0.0}, kCaps), e2({0.0, 0.0}, kCaps);
  I1.add_term({0, 0, 1, 0}, 1.0);
  I2.add_term({0, 0, 0, 1}, 1.0);
  e2.add_term({0, 1, 0, 0}, 1.0);
  CHECK(poisson_bracket(I1, sin_theta1(), kCaps).series.terms() == cos_theta1().terms());
  CHECK(poisson_bracket(I2, e2, kCaps).series.coefficient({0, 1, 0, 0}) == cplx(0.0, 1.0));

  // {cos t1, I1^2} = 2 I1 sin t1 with this orientation; finite-difference oracle
  TaylorFourierSeries I1sq({0.0, 0.0}, kCaps);
  I1sq.add_term({0, 0, 2, 0}, 1.0);
  const auto br = poisson_bracket(cos_theta1(), I1sq, kCaps).series;
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    std::array<double, 2> I{U(rng), U(rng)}, t{3 * U(rng), 3 * U(rng)};
    CHECK(br.evaluate_real(I, t) == doctest::Approx(2 * I[0] * std::sin(t[0])).epsilon(1e-12).scale(1.0));
    CHECK(br.evaluate_real(I, t) == doctest::Approx(fd_bracket(cos_theta1(), I1sq, I, t)).epsilon(1e-6).scale(1.0));
  }

  auto b = random_real_series(rng, kCaps, 2, 2, 8);
  const auto ab = poisson_bracket(a, b, Caps{8, 8});
  CHECK(ab.discarded_mass == 0.0);
  for (int i = 0; i < 50; ++i) {
    std::array<double, 2> I{U(rng), U(rng)}, t{3 * U(rng), 3 * U(rng)};
    CHECK(ab.series.evaluate_real(I, t) == doctest::Approx(fd_bracket(a, b, I, t)).epsilon(1e-6).scale(1.0));
  }
}

TEST_CASE("Jacobi identity is exact when nothing is truncated") {
  std::mt19937_64 rng(14);
  const Caps big{6, 3};
  for (int trial = 0; trial < 10; ++trial) {
    // degree-2 polynomials times a single harmonic each
    auto one_harmonic = [&] {
      std::uniform_int_distribution<int> K(-1, 1);
      std::uniform_int_distribution<int> Ci(-4, 4);
      TaylorFourierSeries s({0.0, 0.0}, big);
      const int k1 = K(rng), k2 = K(rng);
      for (int a1 = 0; a1 <= 2; ++a1)
        for (int a2 = 0; a1 + a2 <= 2; ++a2) s.add_term({k1, k2, a1, a2}, cplx(Ci(rng), Ci(rng)));
      return s;
    };
    auto a = one_harmonic(), b = one_harmonic(), c = one_harmonic();
    auto br = [&](const TaylorFourierSeries& x, const TaylorFourierSeries& y) {
      auto r = poisson_bracket(x, y, big);
      REQUIRE(r.discarded_mass == 0.0);
      return r.series;
    };
    auto j = add(add(br(a, br(b, c)), br(b, br(c, a))), br(c, br(a, b)));
    CHECK(j.coefficient_mass() == 0.0);
  }
}

TEST_CASE("resonant split") {
  const std::array<double, 2> omega{2.0, -1.0};
  const double T = 2 * std::numbers::pi;
  auto k = TaylorFourierSeries::constant({0.0, 0.0}, kCaps, 3.0);
  auto sp = resonant_split(k, omega, T);
  CHECK(sp.g_part.terms() == k.terms());
  CHECK(sp.f_part.empty());

  TaylorFourierSeries res({0.0, 0.0}, kCaps);
  res.add_term({1, 2, 0, 0}, 1.0);
  sp = resonant_split(res, omega, T);
  CHECK(sp.g_part.size() == 1);
  CHECK(sp.f_part.empty());

  TaylorFourierSeries non({0.0, 0.0}, kCaps);
  non.add_term({1, 0, 1, 0}, cplx(0.3, 0.2));
  non.add_term({-1, 0, 1, 0}, cplx(0.3, -0.2));
  sp = resonant_split(non, omega, T);
  CHECK(sp.g_part.empty());
  CHECK(sp.f_part.size() == 2);

  // average of f along the flow t -> theta + omega t vanishes (trapezoid rule is exact on periodic data)
  const int n = 4096;
  double avg = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = T * i / n;
    avg += sp.f_part.evaluate_real({0.4, -0.1}, {0.7 + omega[0] * t, -0.2 + omega[1] * t});
  }
  CHECK(std::abs(avg / n) < 1e-10);

  CHECK_THROWS_AS(resonant_split(non, {std::numbers::sqrt2, -1.0}, T), DomainError);
}

TEST_CASE("majorant norm") {
  SeriesDomain dom{{0.1, 0.2}, {0.05, 0.05}, {0.3, 0.4}};
  TaylorFourierSeries zero({0.0, 0.0}, kCaps);
  CHECK(majorant_norm(zero, dom) == 0.0);

  TaylorFourierSeries one({0.0, 0.0}, kCaps);
  one.add_term({1, 0, 0, 0}, cplx(0.6, -0.8));
  CHECK(majorant_norm(one, dom) == doctest::Approx(std::exp(0.3)).epsilon(1e-15));

  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    auto a = random_real_series(rng, kCaps, 3, 3, 15);
    CHECK(majorant_norm(a, dom) >= sample_norm(a, dom, 20000, 100 + trial, 1));
  }
}

TEST_CASE("sample norm") {
  SeriesDomain dom{{0.0, 0.0}, {0.1, 0.1}, {0.25, 0.25}};
  TaylorFourierSeries zero({0.0, 0.0}, kCaps);
  CHECK(sample_norm(zero, dom, 100, 1) == 0.0);

  TaylorFourierSeries one({0.0, 0.0}, kCaps);
  one.add_term({1, 0, 0, 0}, cplx(2.0, 0.0));
  const double exact = 2.0 * std::exp(0.25);
  const double got = sample_norm(one, dom, 1000000, 3);
  CHECK(got >= (1 - 1e-3) * exact);
  CHECK(got <= exact * (1 + 1e-12));

  std::mt19937_64 rng(16);
  auto a = random_real_series(rng, kCaps, 2, 3, 10);
  CHECK(sample_norm(a, dom, 5000, 9) == sample_norm(a, dom, 5000, 9));
  // thread count does not change the value
  CHECK(sample_norm(a, dom, 50000, 9, 1) == sample_norm(a, dom, 50000, 9, 4));
  CHECK_THROWS_AS(sample_norm(a, dom, 0, 9), DomainError);
}

TEST_CASE("vector field bounds") {
  SeriesDomain dom{{0.0, 0.0}, {0.1, 0.1}, {0.2, 0.2}};
  auto k = TaylorFourierSeries::constant({0.0, 0.0}, kCaps, 5.0);
  auto vb = vector_field_bounds(k, dom, 1000, 1);
  for (int j = 0; j < 2; ++j) {
    CHECK(vb.action[j].majorant == 0.0);
    CHECK(vb.angle[j].majorant == 0.0);
    CHECK(vb.action[j].sampled == 0.0);
  }

  const double c = 0.7;
  vb = vector_field_bounds(sin_theta1().scaled(c), dom, 1000, 1);
  CHECK(vb.action[0].majorant == doctest::Approx(c * std::exp(0.2)).epsilon(1e-14));
  CHECK(vb.action[1].majorant == 0.0);
  CHECK(vb.angle[0].majorant == 0.0);
  CHECK(vb.angle[1].majorant == 0.0);

  // Cauchy estimate on the doubled domain dominates the direct anisotropic bound
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    auto a = random_real_series(rng, kCaps, 3, 4, 12);
    const double r = dom.r[0], s = dom.s[0];
    auto b = vector_field_bounds(a, dom, 0, 1);
    const double direct = std::max({b.action[0].majorant / r, b.action[1].majorant / r, b.angle[0].majorant / s,
                                    b.angle[1].majorant / s});
    SeriesDomain twice = dom;
    for (int j = 0; j < 2; ++j) {
      twice.r[j] *= 2;
      twice.s[j] *= 2;
    }
    CHECK(majorant_norm(a, twice) / (r * s) >= direct);
  }
}

TEST_CASE("counter-based generator") {
  CHECK(counter_hash(1, 2, 3) == counter_hash(1, 2, 3));
  CHECK(counter_hash(1, 2, 3) != counter_hash(1, 2, 4));
  CHECK(counter_hash(1, 2, 3) != counter_hash(2, 2, 3));
  double mean = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = counter_uniform(5, 0, i);
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    mean += u;
  }
  CHECK(mean / 100000 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("harmonic text round trip and evaluator") {
  std::mt19937_64 rng(18);
  auto a = random_real_series(rng, Caps{4, 6}, 3, 4, 20, 0.5, {0.7, 0.65});
  const auto text = format_harmonic_text(a);
  const auto back = parse_harmonic_text(text);
  CHECK(back.base_point() == a.base_point());
  CHECK(back.caps().degree == 4);
  CHECK(back.caps().harmonic == 6);
  CHECK(back.terms() == a.terms());

  const auto data = parse_harmonic_data("discarded_max 0.002\nbase_point 1 2\ndegree_cap 1\nharmonic_cap 2\n"
                                        "# comment\n1 0 1 0 0.5 0\n-1 0 1 0 0.5 0\n");
  CHECK(data.discarded_max == 0.002);
  CHECK(data.series.size() == 2);
  CHECK_THROWS(parse_harmonic_text("base_point 0 0\ndegree_cap 1\nharmonic_cap 1\n3 0 0 0 1 0\n"));
  CHECK_THROWS(parse_harmonic_text("base_point 0 0\nbogus 3\n"));

  SeriesEvaluator ev(a);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    std::array<double, 2> I{0.7 + 0.1 * U(rng), 0.65 + 0.1 * U(rng)}, t{3 * U(rng), 3 * U(rng)};
    const auto r = ev(I, t);
    CHECK(r.value == doctest::Approx(a.evaluate_real(I, t)).epsilon(1e-12).scale(1.0));
    for (int j = 0; j < 2; ++j) {
      CHECK(r.d_action[j] == doctest::Approx(a.d_action(j).evaluate_real(I, t)).epsilon(1e-12).scale(1.0));
      CHECK(r.d_angle[j] == doctest::Approx(a.d_angle(j).evaluate_real(I, t)).epsilon(1e-12).scale(1.0));
    }
  }
}
