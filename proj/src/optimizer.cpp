#include "resostab/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

namespace resostab {

namespace {

double to_internal(const Axis& a, double x) { return a.log_scale ? std::log(x) : x; }
double from_internal(const Axis& a, double y) { return a.log_scale ? std::exp(y) : y; }

std::vector<PointEval> eval_batch(const std::vector<std::vector<double>>& pts, const Objective& f,
                                  unsigned n_threads) {
  std::vector<PointEval> out(pts.size());
  if (n_threads == 0) n_threads = std::max(1u, std::thread::hardware_concurrency());
  n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, pts.size()));
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < pts.size(); ++i) out[i] = f(pts[i]);
    return out;
  }
  std::vector<std::thread> workers;
  for (unsigned w = 0; w < n_threads; ++w) {
    workers.emplace_back([&, w] {
      for (std::size_t i = w; i < pts.size(); i += n_threads) out[i] = f(pts[i]);
    });
  }
  for (auto& t : workers) t.join();
  return out;
}

bool better(const PointEval& a, const PointEval& b) {
  if (a.feasible != b.feasible) return a.feasible;
  if (a.feasible) return a.objective > b.objective;
  return a.violation < b.violation;
}

}  // namespace

void SearchSpace::validate() const {
  if (axes.empty()) throw DomainError("search space has no axes");
  for (const auto& a : axes) {
    if (!(a.lo <= a.hi)) throw DomainError("axis " + a.name + ": lower bound above upper bound");
    if (a.lo == a.hi && a.coarse != 1) throw DomainError("axis " + a.name + ": empty range needs coarse = 1");
    if (a.lo < a.hi && a.coarse < 2) throw DomainError("axis " + a.name + ": coarse grid needs >= 2 points");
    if (a.log_scale && !(a.lo > 0)) throw DomainError("axis " + a.name + ": log axis needs positive bounds");
  }
  if (rounds < 0 || !(shrink > 1) || refine_points < 2) throw DomainError("invalid refinement settings");
}

ScanResult optimize(const SearchSpace& space, const Objective& objective) {
  space.validate();
  ScanResult res;
  const std::size_t d = space.axes.size();

  // coarse product grid, first axis varying slowest
  std::size_t total = 1;
  for (const auto& a : space.axes) total *= static_cast<std::size_t>(a.coarse);
  std::vector<std::vector<double>> pts;
  pts.reserve(total);
  for (std::size_t n = 0; n < total; ++n) {
    std::vector<double> x(d);
    std::size_t rem = n;
    for (std::size_t i = d; i-- > 0;) {
      const auto& a = space.axes[i];
      const std::size_t c = rem % a.coarse;
      rem /= a.coarse;
      const double lo = to_internal(a, a.lo), hi = to_internal(a, a.hi);
      if (a.coarse == 1)
        x[i] = a.lo;
      else if (c + 1 == static_cast<std::size_t>(a.coarse))
        x[i] = a.hi;
      else
        x[i] = from_internal(a, lo + (hi - lo) * static_cast<double>(c) / (a.coarse - 1));
    }
    pts.push_back(std::move(x));
  }

  auto record = [&](const std::vector<std::vector<double>>& batch, int round) {
    const auto evals = eval_batch(batch, objective, space.n_threads);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      res.trace.push_back({round, batch[i], evals[i]});
      if (res.best_x.empty() || better(evals[i], res.best)) {
        res.best_x = batch[i];
        res.best = evals[i];
      }
    }
  };
  record(pts, 0);

  if (res.best.feasible) {
    std::vector<double> hw(d);
    for (std::size_t i = 0; i < d; ++i) {
      const auto& a = space.axes[i];
      hw[i] = a.coarse > 1 ? (to_internal(a, a.hi) - to_internal(a, a.lo)) / (a.coarse - 1) : 0.0;
    }
    for (int round = 1; round <= space.rounds; ++round) {
      for (std::size_t i = 0; i < d; ++i) {
        if (hw[i] == 0.0) continue;
        const auto& a = space.axes[i];
        const double lo = to_internal(a, a.lo), hi = to_internal(a, a.hi);
        const double c = to_internal(a, res.best_x[i]);
        std::vector<std::vector<double>> batch;
        for (int j = 0; j < space.refine_points; ++j) {
          const double y = std::clamp(c + hw[i] * (2.0 * j / (space.refine_points - 1) - 1.0), lo, hi);
          auto x = res.best_x;
          x[i] = from_internal(a, y);
          if (x[i] == res.best_x[i]) continue;
          if (std::any_of(batch.begin(), batch.end(), [&](const auto& b) { return b[i] == x[i]; })) continue;
          batch.push_back(std::move(x));
        }
        record(batch, round);
      }
      for (auto& h : hw) h /= space.shrink;
    }
  }

  res.found = res.best.feasible;
  if (!res.found) {
    res.tightest_failure = res.best.failing;
    res.best_x.clear();
  }
  // objective values live in aux[0..]; the slice uses the last aux entry when available
  if (!res.trace.empty() && !res.trace.front().eval.aux.empty())
    res.pareto = pareto_slice(res.trace, res.trace.front().eval.aux.size() - 1);
  return res;
}

std::vector<std::size_t> pareto_slice(const std::vector<TracePoint>& trace, std::size_t k) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < trace.size(); ++i)
    if (trace[i].eval.feasible && trace[i].eval.aux.size() > k) idx.push_back(i);
  std::vector<std::size_t> out;
  for (auto i : idx) {
    bool dominated = false;
    for (auto j : idx) {
      if (i == j) continue;
      const auto &a = trace[j].eval, &b = trace[i].eval;
      const bool ge = a.objective >= b.objective && a.aux[k] <= b.aux[k];
      const bool gt = a.objective > b.objective || a.aux[k] < b.aux[k];
      if (ge && gt) {
        dominated = true;
        break;
      }
    }
    if (!dominated) out.push_back(i);
  }
  return out;
}

// ---------------------------------------------------------------- planetary

double HPModel::operator()(double HK_abs, double s) const {
  return hp_scale * HK_abs * std::exp(hp_lambda_s * 4 * s);
}

PlanetaryProblem make_planetary_problem(double log10_eps, double G_N, double m0, double ratio2, double a1,
                                        int p_int, int q_int) {
  const double eps = std::pow(10.0, log10_eps);
  PlanetaryProblem pb;
  pb.mass = MassConfig(m0, eps * m0, eps * m0 * ratio2, G_N);
  pb.res = locate_resonance(pb.mass, lambda_from_axis(pb.mass, 0, a1), p_int, q_int);
  return pb;
}

namespace {

PlanetaryStabilityInput planetary_input(const PlanetaryProblem& pb, const WidthSet& w, const FieldBounds& b,
                                        const Schedule& s, const ConvexityConstants& cc) {
  PlanetaryStabilityInput in;
  in.widths = w;
  in.bounds = b;
  in.schedule = s;
  in.convexity = cc;
  in.resonance = pb.res;
  in.R = pb.R;
  in.xi_mode = pb.xi_mode;
  if (pb.xi_mode == XiMode::common) {
    in.xi0 = pb.xi0_common;
  } else {
    for (int j = 0; j < 2; ++j) in.xi0_body[j] = xi0_from_eccentricity(pb.res.Lambda0[j], pb.R, pb.e_init[j]);
  }
  return in;
}

}  // namespace

PlanetaryPoint evaluate_planetary_point(const PlanetaryProblem& pb, double r_rel, double s, double beta) {
  PlanetaryPoint pt;
  const double r = r_rel * pb.lambda_max();
  WidthSet w0 = WidthSet::with_beta(pb.rho, r, s, 0.0, beta);
  const double ext = convexity_extent(w0);
  if (!(ext < std::min(pb.res.Lambda0[0], pb.res.Lambda0[1]))) {
    pt.failing = "action domain reaches Lambda = 0";
    pt.violation = 1e300;
    return pt;
  }
  const auto cc = convexity_constants(pb.mass, pb.res.Lambda0, ext);
  const double delta = delta_bound(pb.mass, pb.res, w0);
  const double HK = std::abs(kepler_hamiltonian(pb.mass, pb.res.Lambda0));
  const FieldBounds b = cauchy_initial_bounds(pb.hp(HK, s), pb.mass.eps(), w0, delta);
  BoundFunctions bf{pb.res.T, b, w0.beta()};
  pt.widths = w0;
  pt.bounds = b;

  // candidate schedules
  std::vector<Schedule> cands;
  if (pb.fixed_schedule) {
    const auto v = validate_schedule(bf, *pb.fixed_schedule);
    if (!v.valid) {
      pt.failing = v.failing;
      pt.violation = 1e200;
      pt.schedule = *pb.fixed_schedule;
      return pt;
    }
    cands.push_back(*pb.fixed_schedule);
  } else if (b.eta0 == 0.0 && b.Xi0 == 0.0) {
    cands.push_back(Schedule{1, 0.3, 0.3, 0.3});
  } else if (pb.q_mode == QMode::tight) {
    for (int m = 1; m <= pb.m_cap; ++m) {
      Schedule sc;
      if (!tight_schedule(bf, m, pb.slack, sc)) break;
      cands.push_back(sc);
    }
  } else {
    for (double p : pb.p_grid)
      for (double q1 : pb.q_grid)
        for (double q2 : pb.q_grid) {
          const int m = max_valid_m(bf, p, q1, q2, pb.m_cap);
          if (m > 0) cands.push_back(Schedule{m, p, q1, q2});
        }
  }
  if (cands.empty()) {
    const auto v = validate_schedule(bf, Schedule{1, 0.3, 0.3, 0.3});
    pt.failing = v.failing.empty() ? "no valid schedule" : v.failing;
    pt.violation = 1e200 + std::max({-v.margin_q1, -v.margin_q2, -v.margin_p, -v.margin_step, 0.0});
    return pt;
  }

  bool have = false;
  PlanetaryPoint best_infeasible = pt;
  best_infeasible.violation = INFINITY;
  for (const auto& sc : cands) {
    auto in = planetary_input(pb, w0, b, sc, cc);
    in.widths = WidthSet(w0.rho(), w0.r(), w0.s(), 0.0, w0.u());
    const double xi = minimal_xi(in);
    in.widths = WidthSet(w0.rho(), w0.r(), w0.s(), xi, w0.u());
    const auto rep = evaluate_planetary(in);
    bool ok = rep.flags.all() && rep.t_bar > 0;
    std::string fail = rep.flags.first_failure();
    double viol = std::max(0.0, -rep.C1);
    if (ok && pb.Rf_cap > 0 && rep.Rf_tbar / pb.lambda_max() > pb.Rf_cap) {
      ok = false;
      fail = "R_f(t_bar) within the cap";
      viol = rep.Rf_tbar / pb.lambda_max() - pb.Rf_cap;
    }
    if (ok) {
      if (!have || rep.log10_t_bar > pt.report.log10_t_bar) {
        pt.feasible = true;
        pt.failing.clear();
        pt.schedule = sc;
        pt.widths = in.widths;
        pt.input = in;
        pt.report = rep;
        have = true;
      }
    } else if (!have && viol < best_infeasible.violation) {
      best_infeasible.failing = fail.empty() ? "t_bar > 0" : fail;
      best_infeasible.violation = viol;
      best_infeasible.schedule = sc;
      best_infeasible.widths = in.widths;
      best_infeasible.input = in;
      best_infeasible.report = rep;
    }
  }
  return have ? pt : best_infeasible;
}

Calibration calibrate_hp_scale(PlanetaryProblem pb, double r_rel, double s, double beta, int target_m, double lo,
                               double hi) {
  auto m_at = [&](double h) {
    pb.hp.hp_scale = h;
    const auto pt = evaluate_planetary_point(pb, r_rel, s, beta);
    return pt.feasible ? pt.schedule.m : 0;
  };
  Calibration best;
  int best_gap = std::numeric_limits<int>::max();
  auto consider = [&](double h, int m) {
    const int gap = std::abs(m - target_m);
    if (m > 0 && (gap < best_gap || (gap == best_gap && h > best.hp_scale))) {
      best_gap = gap;
      best = {h, m, gap == 0};
    }
  };
  double a = std::log(lo), b = std::log(hi);
  consider(lo, m_at(lo));
  consider(hi, m_at(hi));
  for (int it = 0; it < 200 && !best.exact; ++it) {
    const double mid = 0.5 * (a + b);
    const int m = m_at(std::exp(mid));
    consider(std::exp(mid), m);
    if (m == 0 || m < target_m)
      b = mid;
    else
      a = mid;
    if (b - a < 1e-13) break;
  }
  return best;
}

PlanetaryScan optimize_planetary(const PlanetaryProblem& pb, const SearchSpace& space) {
  if (space.axes.size() != 3) throw DomainError("planetary search needs axes r_rel, s, beta");
  const double Lmax = pb.lambda_max();
  Objective f = [&](const std::vector<double>& x) {
    const auto pt = evaluate_planetary_point(pb, x[0], x[1], x[2]);
    PointEval e;
    e.feasible = pt.feasible;
    e.failing = pt.failing;
    e.violation = pt.violation;
    e.objective = pt.feasible ? pt.report.log10_t_bar : -INFINITY;
    e.aux = {static_cast<double>(pt.schedule.m), pt.report.t_bar, pt.report.e_bar_tbar[0], pt.report.e_bar_tbar[1],
             pt.widths.xi(), pt.report.Rf_tbar / Lmax};
    return e;
  };
  PlanetaryScan out;
  out.scan = optimize(space, f);
  if (out.scan.found) {
    out.best = evaluate_planetary_point(pb, out.scan.best_x[0], out.scan.best_x[1], out.scan.best_x[2]);
    const auto bf = BoundFunctions{pb.res.T, out.best.bounds, out.best.widths.beta()};
    const bool sched_ok = out.best.bounds.eta0 == 0.0 || validate_schedule(bf, out.best.schedule).valid;
    out.reverified = out.best.feasible && sched_ok && check_conditions(out.best.input).all();
  }
  return out;
}

TableRow planetary_row(double log_eps, const PlanetaryPoint& pt, double time_unit_years) {
  TableRow row;
  row.log_eps = log_eps;
  row.feasible = pt.feasible;
  row.failing = pt.failing;
  row.unbounded = pt.report.unbounded;
  row.m = pt.schedule.m;
  row.t_bar_internal = pt.report.t_bar;
  row.t_bar_years = pt.report.t_bar * time_unit_years;
  row.log10_t_bar_years = pt.report.log10_t_bar + std::log10(time_unit_years);
  const double Lmax = pt.input.resonance.Lambda0[0] > 0
                          ? std::max(pt.input.resonance.Lambda0[0], pt.input.resonance.Lambda0[1])
                          : 1.0;
  row.Rf_rel = pt.report.Rf_tbar / Lmax;
  row.e_bar = pt.report.e_bar_tbar;
  row.r_rel = pt.widths.r() / Lmax;
  row.s = pt.widths.s();
  row.one_minus_beta = std::abs(1 - pt.widths.beta());
  row.xi = pt.widths.xi();
  return row;
}

std::vector<TableRow> epsilon_sweep(const std::vector<double>& log_eps_grid,
                                    const std::function<PlanetaryProblem(double)>& make_problem,
                                    const SearchSpace& space, double time_unit_years) {
  auto grid = log_eps_grid;
  std::sort(grid.begin(), grid.end());
  std::vector<TableRow> rows;
  for (double le : grid) {
    if (std::isinf(le) && le < 0) {
      TableRow row;
      row.log_eps = le;
      row.feasible = true;
      row.unbounded = true;
      row.t_bar_internal = row.t_bar_years = row.log10_t_bar_years = INFINITY;
      rows.push_back(row);
      continue;
    }
    const auto pb = make_problem(le);
    const auto scan = optimize_planetary(pb, space);
    if (scan.scan.found) {
      rows.push_back(planetary_row(le, scan.best, time_unit_years));
    } else {
      TableRow row;
      row.log_eps = le;
      row.failing = scan.scan.tightest_failure;
      rows.push_back(row);
    }
  }
  return rows;
}

// ---------------------------------------------------------------- restricted

RestrictedProblem make_restricted_problem(const RestrictedSetup& base, int N, Caps caps) {
  RestrictedProblem pb;
  pb.base = base;
  pb.prepared = prepare_perturbation(base, N, caps);
  return pb;
}

RestrictedPoint evaluate_restricted_point(const RestrictedProblem& pb, std::array<double, 4> wv, bool full) {
  RestrictedPoint pt;
  const RestrictedWidthSet w(pb.rho_L, pb.rho_G, wv[0], wv[1], wv[2], wv[3]);
  if (!(pb.rho_L + 4 * wv[0] < pb.base.L0)) {
    pt.failing = "action domain reaches L = 0";
    pt.violation = 1e300;
    return pt;
  }
  pt.setup = with_widths(pb.base, w);
  RestrictedBoundOptions est = pb.estimator;
  if (!full && est.estimator == Estimator::majorant) est.n_points = 0;
  pt.bounds = restricted_field_bounds(pt.setup, pb.prepared, est);
  RestrictedBoundFunctions bf{pt.setup.T, pt.bounds.bounds, w};

  RestrictedInput in;
  in.setup = pt.setup;
  in.bounds = pt.bounds.bounds;
  in.L_init = pb.L_init;
  in.G_init = pb.G_init;
  in.e0 = pb.e0;
  in.H1_sup_complex = h1_sup_complex(pt.setup, est);
  if (full) {
    in.H1_sup_real = h1_sup_real(pt.setup, pb.real_sup_points, pb.seed);
    in.transform_shift_L = averaging_shift_L(pt.setup, pb.prepared);
  }

  std::vector<RestrictedSchedule> cands;
  const auto& eta = in.bounds.eta0;
  const bool all_zero = std::all_of(eta.begin(), eta.end(), [](double e) { return e == 0.0; });
  if (pb.fixed_schedule) {
    const auto v = validate_restricted_schedule(bf, *pb.fixed_schedule);
    if (!v.valid) {
      pt.failing = v.failing;
      pt.violation = 1e200;
      pt.schedule = *pb.fixed_schedule;
      return pt;
    }
    cands.push_back(*pb.fixed_schedule);
  } else if (all_zero) {
    cands.push_back(RestrictedSchedule{});
  } else if (pb.q_mode == QMode::tight) {
    for (int m = 1; m <= pb.m_cap; ++m) {
      RestrictedSchedule sc;
      if (!tight_restricted_schedule(bf, m, pb.slack, sc)) break;
      cands.push_back(sc);
    }
  } else {
    for (double p : pb.p_grid)
      for (double qL : pb.q_grid)
        for (double qG : pb.q_grid)
          for (double ql : pb.q_grid)
            for (double qg : pb.q_grid) {
              const std::array<double, 4> q{qL, qG, ql, qg};
              const int m = max_valid_m_restricted(bf, p, q, pb.m_cap);
              if (m > 0) cands.push_back(RestrictedSchedule{m, p, q});
            }
  }
  if (cands.empty()) {
    const auto v = validate_restricted_schedule(bf, RestrictedSchedule{});
    pt.failing = v.failing.empty() ? "no valid schedule" : v.failing;
    double worst = std::max({-v.margin_p, -v.margin_step, 0.0});
    for (double mq : v.margin_q) worst = std::max(worst, -mq);
    pt.violation = 1e200 + worst;
    return pt;
  }
  bool have = false;
  RestrictedPoint fallback = pt;
  fallback.violation = INFINITY;
  for (const auto& sc : cands) {
    in.schedule = sc;
    const auto rep = evaluate_restricted(in);
    const bool ok = rep.all() && rep.t_bar > 0;
    if (ok) {
      if (!have || rep.log10_t_bar > pt.report.log10_t_bar) {
        pt.feasible = true;
        pt.failing.clear();
        pt.schedule = sc;
        pt.input = in;
        pt.report = rep;
        have = true;
      }
    } else if (!have) {
      const double viol = std::max(0.0, -rep.C3) + std::max(0.0, -rep.g_check.margin);
      if (viol < fallback.violation) {
        fallback.failing = rep.first_failure().empty() ? "t_bar > 0" : rep.first_failure();
        fallback.violation = viol;
        fallback.schedule = sc;
        fallback.input = in;
        fallback.report = rep;
      }
    }
  }
  return have ? pt : fallback;
}

RestrictedScan optimize_restricted(const RestrictedProblem& pb, const SearchSpace& space) {
  if (space.axes.size() != 4) throw DomainError("restricted search needs axes r_L, r_G, s_l, s_g");
  Objective f = [&](const std::vector<double>& x) {
    const auto pt = evaluate_restricted_point(pb, {x[0], x[1], x[2], x[3]});
    PointEval e;
    e.feasible = pt.feasible;
    e.failing = pt.failing;
    e.violation = pt.violation;
    e.objective = pt.feasible ? pt.report.log10_t_bar : -INFINITY;
    e.aux = {static_cast<double>(pt.schedule.m), pt.report.t_bar, pt.report.Lf_tbar};
    return e;
  };
  RestrictedScan out;
  out.scan = optimize(space, f);
  if (out.scan.found) {
    const auto& x = out.scan.best_x;
    out.best = evaluate_restricted_point(pb, {x[0], x[1], x[2], x[3]}, true);
    RestrictedBoundFunctions bf{out.best.setup.T, out.best.input.bounds, out.best.setup.widths};
    const auto& eta = out.best.input.bounds.eta0;
    const bool trivial = std::all_of(eta.begin(), eta.end(), [](double e) { return e == 0.0; });
    const bool sched_ok = trivial || validate_restricted_schedule(bf, out.best.schedule).valid;
    out.reverified = out.best.feasible && sched_ok && evaluate_restricted(out.best.input).all();
  }
  return out;
}

}  // namespace resostab
