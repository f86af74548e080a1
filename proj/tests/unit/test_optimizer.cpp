#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "resostab/optimizer.hpp"

using namespace resostab;

namespace {

PointEval bowl(const std::vector<double>& x) {
  // maximum at (0.1, 0.03) in log coordinates; infeasible when x0 > 0.5
  PointEval e;
  const double a = std::log(x[0] / 0.1), b = std::log(x[1] / 0.03);
  e.feasible = x[0] <= 0.5;
  e.violation = e.feasible ? 0.0 : x[0] - 0.5;
  e.failing = e.feasible ? "" : "x0 <= 0.5";
  e.objective = -(a * a + 2 * b * b);
  e.aux = {a * a};
  return e;
}

SearchSpace bowl_space() {
  SearchSpace sp;
  sp.axes = {Axis{"x0", 1e-3, 1.0, true, 7}, Axis{"x1", 1e-4, 1.0, true, 7}};
  sp.rounds = 6;
  sp.n_threads = 1;
  return sp;
}

PlanetaryProblem calibrated_problem() {
  const double G = 4 * std::numbers::pi * std::numbers::pi;
  const double ratio2 = 1047.348644 / 3497.901768;
  auto pb = make_planetary_problem(-11.0, G, 1.0, ratio2, 5.2038, 5, 2);
  pb.hp.hp_scale = 0.135773;
  pb.e_init = {0.04838624, 0.05386179};
  return pb;
}

}  // namespace

TEST_CASE("planted optimum is recovered") {
  const auto r = optimize(bowl_space(), bowl);
  REQUIRE(r.found);
  CHECK(r.best_x[0] == doctest::Approx(0.1).epsilon(2e-2));
  CHECK(r.best_x[1] == doctest::Approx(0.03).epsilon(2e-2));
  for (const auto& tp : r.trace)
    if (tp.eval.feasible) CHECK(r.best.objective >= tp.eval.objective);
}

TEST_CASE("monotone objective ends on the upper bound of a linear axis") {
  SearchSpace sp;
  sp.axes = {Axis{"x", 0.0, 2.0, false, 5}};
  sp.n_threads = 1;
  const auto r = optimize(sp, [](const std::vector<double>& x) {
    PointEval e;
    e.feasible = true;
    e.objective = x[0];
    return e;
  });
  REQUIRE(r.found);
  CHECK(r.best_x[0] == 2.0);
  for (const auto& tp : r.trace) {
    CHECK(tp.x[0] >= 0.0);
    CHECK(tp.x[0] <= 2.0);
  }
}

TEST_CASE("single point space") {
  SearchSpace sp;
  sp.axes = {Axis{"x0", 0.2, 0.2, true, 1}, Axis{"x1", 0.01, 0.01, false, 1}};
  const auto r = optimize(sp, bowl);
  REQUIRE(r.found);
  CHECK(r.trace.size() == 1);
  CHECK(r.best_x == std::vector<double>{0.2, 0.01});

  sp.axes[0].coarse = 3;
  CHECK_THROWS_AS(optimize(sp, bowl), DomainError);
  sp.axes[0] = Axis{"x0", 0.3, 0.2, true, 3};
  CHECK_THROWS_AS(optimize(sp, bowl), DomainError);
  sp.axes[0] = Axis{"x0", 0.0, 0.2, true, 3};
  CHECK_THROWS_AS(optimize(sp, bowl), DomainError);
}

TEST_CASE("infeasible everywhere reports the tightest failure") {
  SearchSpace sp;
  sp.axes = {Axis{"x0", 0.6, 2.0, true, 4}, Axis{"x1", 0.01, 0.1, true, 3}};
  const auto r = optimize(sp, bowl);
  CHECK_FALSE(r.found);
  CHECK(r.best_x.empty());
  CHECK(r.tightest_failure == "x0 <= 0.5");
  CHECK(r.trace.size() == 12);
}

TEST_CASE("optimisation is deterministic and thread independent") {
  auto sp = bowl_space();
  const auto a = optimize(sp, bowl);
  sp.n_threads = 4;
  const auto b = optimize(sp, bowl);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].round == b.trace[i].round);
    CHECK(a.trace[i].x == b.trace[i].x);
    CHECK(a.trace[i].eval.objective == b.trace[i].eval.objective);
  }
  CHECK(a.best_x == b.best_x);
}

TEST_CASE("pareto slice is non-dominated and complete") {
  const auto r = optimize(bowl_space(), bowl);
  const auto& T = r.trace;
  const auto P = pareto_slice(T, 0);
  REQUIRE_FALSE(P.empty());
  auto dominates = [&](std::size_t i, std::size_t j) {
    const auto &a = T[i].eval, &b = T[j].eval;
    return a.objective >= b.objective && a.aux[0] <= b.aux[0] &&
           (a.objective > b.objective || a.aux[0] < b.aux[0]);
  };
  for (auto i : P) {
    CHECK(T[i].eval.feasible);
    for (std::size_t j = 0; j < T.size(); ++j)
      if (T[j].eval.feasible) CHECK_FALSE(dominates(j, i));
  }
  // every feasible point outside the slice is dominated by someone
  for (std::size_t j = 0; j < T.size(); ++j) {
    if (!T[j].eval.feasible || std::find(P.begin(), P.end(), j) != P.end()) continue;
    bool dom = false;
    for (std::size_t i = 0; i < T.size() && !dom; ++i) dom = T[i].eval.feasible && dominates(i, j);
    CHECK(dom);
  }
}

TEST_CASE("calibrated planetary point passes every condition") {
  const auto pb = calibrated_problem();
  const auto pt = evaluate_planetary_point(pb, 1.76e-6, 3.82e-2, 1.0);
  REQUIRE(pt.feasible);
  CHECK(pt.schedule.m > 1);
  CHECK(check_conditions(pt.input).all());
  const BoundFunctions bf{pb.res.T, pt.bounds, pt.widths.beta()};
  CHECK(validate_schedule(bf, pt.schedule).valid);
  CHECK(pt.report.t_bar > 0.0);
  CHECK(pt.widths.beta() == doctest::Approx(1.0).epsilon(1e-12));

  // tight mode keeps the best t_bar over all valid m
  auto fixed = pb;
  for (int dm : {-3, -1}) {
    Schedule sc;
    if (!tight_schedule(bf, pt.schedule.m + dm, pb.slack, sc)) continue;
    fixed.fixed_schedule = sc;
    const auto other = evaluate_planetary_point(fixed, 1.76e-6, 3.82e-2, 1.0);
    if (other.feasible) CHECK(other.report.log10_t_bar <= pt.report.log10_t_bar);
  }

  const auto row = planetary_row(-11.0, pt, 1.0);
  CHECK(row.m == pt.schedule.m);
  CHECK(row.r_rel == doctest::Approx(1.76e-6).epsilon(1e-12));
  CHECK(row.s == doctest::Approx(3.82e-2).epsilon(1e-12));
}

TEST_CASE("HP calibration hits the requested m") {
  const auto pb = calibrated_problem();
  const auto pt = evaluate_planetary_point(pb, 1.76e-6, 3.82e-2, 1.0);
  REQUIRE(pt.feasible);
  const auto cal = calibrate_hp_scale(pb, 1.76e-6, 3.82e-2, 1.0, pt.schedule.m);
  CHECK(cal.exact);
  CHECK(cal.m == pt.schedule.m);
  // the calibrated scale is the largest reaching that m, so it is at least the one we started from
  CHECK(cal.hp_scale >= pb.hp.hp_scale * (1 - 1e-9));
}

TEST_CASE("epsilon sweep ordering and the unbounded sentinel") {
  SearchSpace sp;
  sp.axes = {Axis{"r_rel", 1.76e-6, 1.76e-6, true, 1}, Axis{"s", 3.82e-2, 3.82e-2, true, 1},
             Axis{"beta", 1.0, 1.0, false, 1}};
  const double G = 4 * std::numbers::pi * std::numbers::pi;
  auto mk = [&](double le) {
    auto pb = make_planetary_problem(le, G, 1.0, 1047.348644 / 3497.901768, 5.2038, 5, 2);
    pb.hp.hp_scale = 0.135773;
    pb.e_init = {0.04838624, 0.05386179};
    return pb;
  };
  const auto rows = epsilon_sweep({-10.0, -INFINITY, -11.0, -2.0}, mk, sp, 1.0);
  REQUIRE(rows.size() == 4);
  CHECK(std::isinf(rows[0].log_eps));
  CHECK(rows[0].unbounded);
  CHECK(rows[0].feasible);
  CHECK(std::isinf(rows[0].t_bar_years));
  CHECK(rows[1].log_eps == -11.0);
  CHECK(rows[2].log_eps == -10.0);
  CHECK(rows[3].log_eps == -2.0);
  CHECK(rows[1].feasible);
  CHECK_FALSE(rows[3].feasible);
  CHECK_FALSE(rows[3].failing.empty());
}
