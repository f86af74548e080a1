#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "resostab/app.hpp"
#include "resostab/averaging.hpp"
#include "resostab/planetary.hpp"
#include "resostab/verify.hpp"

namespace py = pybind11;
using namespace resostab;

namespace {

py::dict state_dict(const NormalFormState& s) {
  py::dict d;
  d["eta"] = s.eta;
  d["gamma"] = s.gamma;
  d["Xi"] = s.Xi;
  d["Gamma"] = s.Gamma;
  d["f_norm"] = s.f_norm;
  d["g_norm"] = s.g_norm;
  d["Delta_aa"] = s.Delta_aa;
  d["Delta_cart"] = s.Delta_cart;
  return d;
}

SeriesDomain domain(std::array<double, 2> rho, std::array<double, 2> r, std::array<double, 2> s) {
  return SeriesDomain{rho, r, s};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Stability-time estimates near mean-motion resonances";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<app::ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def(
      "run_json",
      [](const std::string& command, const std::string& config, const std::string& base_dir,
         std::optional<std::uint64_t> seed, std::optional<int> preliminary_averaging) {
        app::Overrides ov;
        ov.seed = seed;
        ov.preliminary_averaging = preliminary_averaging;
        app::json cfg;
        try {
          cfg = app::json::parse(config);
        } catch (const std::exception& e) {
          throw app::ConfigError(std::string("invalid JSON: ") + e.what());
        }
        app::CommandResult res;
        {
          py::gil_scoped_release nogil;
          res = app::run(command, cfg, base_dir, ov);
        }
        py::dict files;
        for (const auto& f : res.files) files[py::str(f.name)] = f.content;
        return py::make_tuple(res.exit_code, res.message, res.report.dump(), files);
      },
      py::arg("command"), py::arg("config"), py::arg("base_dir") = ".", py::arg("seed") = py::none(),
      py::arg("preliminary_averaging") = py::none());

  py::class_<TaylorFourierSeries>(m, "Series")
      .def(py::init([](std::array<double, 2> base, int degree, int harmonic) {
             return TaylorFourierSeries(base, Caps{degree, harmonic});
           }),
           py::arg("base") = std::array<double, 2>{0.0, 0.0}, py::arg("degree") = 4, py::arg("harmonic") = 8)
      .def_static("from_text", &parse_harmonic_text)
      .def_static("from_file", &read_harmonic_file)
      .def("to_text", &format_harmonic_text)
      .def(
          "add_term",
          [](TaylorFourierSeries& s, int k1, int k2, int a1, int a2, cplx c) { s.add_term({k1, k2, a1, a2}, c); },
          py::arg("k1"), py::arg("k2"), py::arg("a1"), py::arg("a2"), py::arg("c"))
      .def("coefficient",
           [](const TaylorFourierSeries& s, int k1, int k2, int a1, int a2) { return s.coefficient({k1, k2, a1, a2}); })
      .def("terms",
           [](const TaylorFourierSeries& s) {
             py::list out;
             for (const auto& [k, c] : s.terms()) out.append(py::make_tuple(k.k1, k.k2, k.a1, k.a2, c));
             return out;
           })
      .def("__len__", &TaylorFourierSeries::size)
      .def_property_readonly("base", &TaylorFourierSeries::base_point)
      .def("evaluate_real", &TaylorFourierSeries::evaluate_real, py::arg("actions"), py::arg("angles"))
      .def("d_angle", &TaylorFourierSeries::d_angle)
      .def("d_action", &TaylorFourierSeries::d_action)
      .def("scaled", &TaylorFourierSeries::scaled)
      .def("__add__", [](const TaylorFourierSeries& a, const TaylorFourierSeries& b) { return add(a, b); })
      .def("__sub__", [](const TaylorFourierSeries& a, const TaylorFourierSeries& b) { return subtract(a, b); })
      .def("is_real", [](const TaylorFourierSeries& s) { return s.conjugate_symmetric(); });

  m.def(
      "poisson_bracket",
      [](const TaylorFourierSeries& a, const TaylorFourierSeries& b, int degree, int harmonic) {
        const auto t = poisson_bracket(a, b, Caps{degree, harmonic});
        return py::make_tuple(t.series, t.discarded_mass);
      },
      py::arg("a"), py::arg("b"), py::arg("degree") = 4, py::arg("harmonic") = 8);
  m.def("homological_solve", &homological_solve, py::arg("f0"), py::arg("omega"), py::arg("T"));
  m.def(
      "resonant_split",
      [](const TaylorFourierSeries& h, std::array<double, 2> omega, double T) {
        auto s = resonant_split(h, omega, T);
        return py::make_tuple(s.g_part, s.f_part);
      },
      py::arg("h"), py::arg("omega"), py::arg("T"));
  m.def(
      "majorant_norm",
      [](const TaylorFourierSeries& a, std::array<double, 2> rho, std::array<double, 2> r, std::array<double, 2> s) {
        return majorant_norm(a, domain(rho, r, s));
      },
      py::arg("series"), py::arg("rho"), py::arg("r"), py::arg("s"));
  m.def(
      "sample_norm",
      [](const TaylorFourierSeries& a, std::array<double, 2> rho, std::array<double, 2> r, std::array<double, 2> s,
         std::size_t n_points, std::uint64_t seed) {
        py::gil_scoped_release nogil;
        return sample_norm(a, domain(rho, r, s), n_points, seed);
      },
      py::arg("series"), py::arg("rho"), py::arg("r"), py::arg("s"), py::arg("n_points") = 100000,
      py::arg("seed") = 1);

  m.def(
      "nf_recursion",
      [](double T, std::map<std::string, double> bounds, double beta, int m_, double p, double q1, double q2) {
        BoundFunctions bf;
        bf.T = T;
        bf.beta = beta;
        auto get = [&](const char* k) { return bounds.count(k) ? bounds.at(k) : 0.0; };
        bf.b = FieldBounds{get("eta0"), get("gamma0"), get("delta"), get("Xi0"), get("Gamma0"), get("f0_norm"),
                           get("g0_norm")};
        const auto r = nf_recursion(bf, Schedule{m_, p, q1, q2});
        py::dict d;
        d["loop"] = state_dict(r.loop);
        d["closed"] = state_dict(r.closed);
        return d;
      },
      py::arg("T"), py::arg("bounds"), py::arg("beta"), py::arg("m"), py::arg("p"), py::arg("q1"), py::arg("q2"));

  m.def(
      "convexity_constants",
      [](double m0, double m1, double m2, double G, std::array<double, 2> Lambda0, double extent) {
        const auto c = convexity_constants(MassConfig(m0, m1, m2, G), Lambda0, extent);
        return py::make_tuple(c.kappa, c.K);
      },
      py::arg("m0"), py::arg("m1"), py::arg("m2"), py::arg("G"), py::arg("Lambda0"), py::arg("extent"));

  m.def(
      "integrate_restricted",
      [](const TaylorFourierSeries& H1, double eps, std::array<double, 4> y0, double t_end, double step,
         std::size_t sample_every) {
        RestrictedParams par;
        par.eps = eps;
        const auto s = make_restricted_setup(par, RestrictedWidthSet(0, 0, 1e-4, 1e-4, 0.1, 0.1), H1);
        TrajectorySample tr;
        {
          py::gil_scoped_release nogil;
          tr = integrate(s, y0, t_end, step, sample_every);
        }
        py::dict d;
        d["t"] = tr.t;
        d["L"] = tr.L;
        d["G"] = tr.G;
        d["l"] = tr.l;
        d["g"] = tr.g;
        d["e"] = tr.e;
        d["max_drift"] = tr.max_drift;
        d["steps"] = tr.steps;
        return d;
      },
      py::arg("H1"), py::arg("eps"), py::arg("y0"), py::arg("t_end"), py::arg("step"), py::arg("sample_every") = 1);
}
