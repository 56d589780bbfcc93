// Python bindings. Fields cross the boundary as numpy arrays shaped like the
// grid: (n,) in 1D, (n0, n1) in 2D.

#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "stochmech/classical.hpp"
#include "stochmech/ensemble.hpp"
#include "stochmech/madelung.hpp"
#include "stochmech/scenario.hpp"
#include "stochmech/schrodinger.hpp"
#include "stochmech/stats.hpp"

namespace py = pybind11;
using namespace stochmech;

namespace {

std::vector<py::ssize_t> shape_of(const Grid& g) {
  if (g.dim() == 1) return {static_cast<py::ssize_t>(g.n(0))};
  return {static_cast<py::ssize_t>(g.n(0)), static_cast<py::ssize_t>(g.n(1))};
}

template <class T>
py::array_t<T> to_numpy(const Grid& g, const std::vector<T>& v) {
  py::array_t<T> out(shape_of(g));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

template <class T>
Field<T> from_numpy(const Grid& g, const py::array_t<T, py::array::c_style | py::array::forcecast>& a) {
  if (static_cast<std::size_t>(a.size()) != g.size()) {
    throw InvalidArgument("array has " + std::to_string(a.size()) + " values, grid has " + std::to_string(g.size()));
  }
  return Field<T>(g, std::vector<T>(a.data(), a.data() + a.size()));
}

py::array_t<double> vector_to_numpy(const VectorField& v) {
  std::vector<py::ssize_t> shape{static_cast<py::ssize_t>(v.components.size())};
  for (auto s : shape_of(v.grid)) shape.push_back(s);
  py::array_t<double> out(shape);
  double* dst = out.mutable_data();
  for (const auto& c : v.components) dst = std::copy(c.begin(), c.end(), dst);
  return out;
}

VectorField vector_from_numpy(const Grid& g, const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (static_cast<std::size_t>(a.size()) != g.size() * static_cast<std::size_t>(g.dim())) {
    throw InvalidArgument("vector field needs dim * grid size values");
  }
  VectorField v(g);
  for (int c = 0; c < g.dim(); ++c) v.components[c].assign(a.data() + c * g.size(), a.data() + (c + 1) * g.size());
  return v;
}

py::array_t<double> positions_to_numpy(const ParticleEnsemble& e) {
  py::array_t<double> out({static_cast<py::ssize_t>(e.size()), static_cast<py::ssize_t>(e.dim)});
  std::copy(e.positions.begin(), e.positions.end(), out.mutable_data());
  return out;
}

ParticleEnsemble ensemble_from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
                                     std::uint64_t seed, std::uint64_t steps, double t) {
  ParticleEnsemble e;
  e.dim = a.ndim() == 2 ? static_cast<int>(a.shape(1)) : 1;
  if (e.dim < 1 || e.dim > 2) throw DimensionUnsupported("positions must have 1 or 2 columns");
  e.positions.assign(a.data(), a.data() + a.size());
  e.seed = seed;
  e.steps = steps;
  e.t = t;
  return e;
}

py::dict madelung_dict(const MadelungFields& f) {
  py::dict d;
  const Grid& g = f.rho.grid;
  d["rho"] = to_numpy(g, f.rho.values);
  d["S"] = to_numpy(g, f.S.values);
  d["v"] = vector_to_numpy(f.v);
  d["j"] = vector_to_numpy(f.j);
  d["qpot"] = to_numpy(g, f.qpot.values);
  d["valid"] = to_numpy(g, std::vector<bool>(f.valid.begin(), f.valid.end()));
  d["t"] = f.t;
  d["winding"] = f.winding;
  return d;
}

py::object json_to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json py_to_json(const py::object& o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Stochastic mechanics toolkit (C++ core)";

  // Errors map onto Python exceptions by class.
  static py::exception<Error> base(m, "StochmechError");
  static py::exception<ConfigInvalid> config_invalid(m, "ConfigInvalid", base.ptr());
  static py::exception<MultivaluedPhase> multivalued(m, "MultivaluedPhase", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigInvalid& e) {
      py::set_error(config_invalid, e.what());
    } catch (const MultivaluedPhase& e) {
      py::object exc = multivalued;
      PyErr_SetObject(exc.ptr(), py::make_tuple(e.what(), e.winding()).ptr());
    } catch (const InvalidArgument& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const Error& e) {
      py::set_error(base, e.what());
    }
  });

  py::class_<Grid>(m, "Grid")
      .def_static("line", &Grid::line, py::arg("lo"), py::arg("hi"), py::arg("n"), py::arg("dt"))
      .def_static(
          "plane",
          [](std::array<double, 2> x, std::size_t nx, std::array<double, 2> y, std::size_t ny, double dt) {
            return Grid::plane({x[0], x[1], nx}, {y[0], y[1], ny}, dt);
          },
          py::arg("x_extent"), py::arg("nx"), py::arg("y_extent"), py::arg("ny"), py::arg("dt"))
      .def_property_readonly("dim", &Grid::dim)
      .def_property_readonly("dt", &Grid::dt)
      .def_property_readonly("shape", [](const Grid& g) { return shape_of(g); })
      .def_property_readonly("cell_volume", &Grid::cell_volume)
      .def("spacing", &Grid::spacing)
      .def("coords", [](const Grid& g, int a) {
        std::vector<double> c(g.n(a));
        for (std::size_t i = 0; i < c.size(); ++i) c[i] = g.axis(a).coord(i);
        return py::array_t<double>(static_cast<py::ssize_t>(c.size()), c.data());
      })
      .def("__eq__", [](const Grid& a, const Grid& b) { return a == b; });

  py::class_<PhysicalParams>(m, "PhysicalParams")
      .def_static("from_diffusion", &PhysicalParams::from_diffusion, py::arg("mass"), py::arg("diffusion"))
      .def_static("from_hbar", &PhysicalParams::from_hbar, py::arg("mass"), py::arg("hbar"))
      .def_static("classical", &PhysicalParams::classical, py::arg("mass"))
      .def_property_readonly("mass", &PhysicalParams::mass)
      .def_property_readonly("diffusion", &PhysicalParams::diffusion)
      .def_property_readonly("hbar", &PhysicalParams::hbar)
      .def("__eq__", [](const PhysicalParams& a, const PhysicalParams& b) { return a == b; })
      .def("__repr__", [](const PhysicalParams& p) {
        return "PhysicalParams(m=" + std::to_string(p.mass()) + ", D=" + std::to_string(p.diffusion()) + ")";
      });

  py::class_<Potential>(m, "Potential")
      .def_static("free", &Potential::free)
      .def_static("harmonic", &Potential::harmonic, py::arg("k"))
      .def_static("barrier", &Potential::barrier, py::arg("height"), py::arg("center"), py::arg("width"))
      .def("shifted", &Potential::shifted)
      .def("sample", [](const Potential& u, const Grid& g) { return to_numpy(g, u.sample(g).values); })
      .def("to_json", [](const Potential& u) { return json_to_py(u.to_json()); });

  // -- schrodinger
  m.def(
      "gaussian_packet",
      [](const Grid& g, const PhysicalParams& p, std::vector<double> x0, std::vector<double> p0, double sigma0,
         double t) {
        std::array<double, 2> xa{0, 0}, pa{0, 0};
        for (std::size_t a = 0; a < x0.size() && a < 2; ++a) xa[a] = x0[a];
        for (std::size_t a = 0; a < p0.size() && a < 2; ++a) pa[a] = p0[a];
        return to_numpy(g, analytic_gaussian_packet(xa, pa, sigma0, t, p, g).values);
      },
      py::arg("grid"), py::arg("params"), py::arg("x0"), py::arg("p0"), py::arg("sigma0"), py::arg("t") = 0.0);

  py::class_<CrankNicolson>(m, "CrankNicolson")
      .def(py::init<const Grid&, const Potential&, const PhysicalParams&, double>(), py::arg("grid"),
           py::arg("potential"), py::arg("params"), py::arg("dt"))
      .def(
          "step",
          [](const CrankNicolson& cn, const Grid& g, const py::array_t<Complex>& psi, int steps) {
            ComplexField f = from_numpy<Complex>(g, psi);
            {
              py::gil_scoped_release release;
              for (int s = 0; s < steps; ++s) cn.step_in_place(f);
            }
            return to_numpy(g, f.values);
          },
          py::arg("grid"), py::arg("psi"), py::arg("steps") = 1);

  m.def(
      "ground_state",
      [](const Potential& u, const PhysicalParams& p, const Grid& g, double tol) {
        GroundStateOptions opts;
        opts.tol = tol;
        GroundState gs = [&] {
          py::gil_scoped_release release;
          return ground_state_imaginary_time(u, p, g, opts);
        }();
        return py::make_tuple(to_numpy(g, gs.psi.values), gs.energy);
      },
      py::arg("potential"), py::arg("params"), py::arg("grid"), py::arg("tol") = 1e-10);

  m.def(
      "energy",
      [](const Grid& g, const py::array_t<Complex>& psi, const Potential& u, const PhysicalParams& p) {
        return energy(from_numpy<Complex>(g, psi), u, p);
      },
      py::arg("grid"), py::arg("psi"), py::arg("potential"), py::arg("params"));

  // -- madelung
  m.def(
      "decompose",
      [](const Grid& g, const py::array_t<Complex>& psi, const PhysicalParams& p, double t, bool allow_multivalued) {
        return madelung_dict(decompose(from_numpy<Complex>(g, psi), p, t, {1e-6, allow_multivalued, nullptr}));
      },
      py::arg("grid"), py::arg("psi"), py::arg("params"), py::arg("t") = 0.0, py::arg("allow_multivalued") = false);

  m.def(
      "mean_velocity",
      [](const Grid& g, const py::array_t<Complex>& psi, const PhysicalParams& p) {
        return vector_to_numpy(mean_velocity(from_numpy<Complex>(g, psi), p));
      },
      py::arg("grid"), py::arg("psi"), py::arg("params"));

  m.def(
      "winding_number",
      [](const Grid& g, const py::array_t<Complex>& psi, double cx, double cy, double radius) {
        return winding_number(from_numpy<Complex>(g, psi), circle_loop(g, cx, cy, radius));
      },
      py::arg("grid"), py::arg("psi"), py::arg("cx"), py::arg("cy"), py::arg("radius"));

  m.def(
      "diagnose",
      [](const Grid& g, const py::array_t<Complex>& psi, const PhysicalParams& p, double t) {
        py::list out;
        for (const auto& rec : diagnose(from_numpy<Complex>(g, psi), p, t)) out.append(json_to_py(rec));
        return out;
      },
      py::arg("grid"), py::arg("psi"), py::arg("params"), py::arg("t") = 0.0);

  // -- ensemble
  m.def(
      "sample_initial",
      [](const Grid& g, const py::array_t<double>& rho, std::size_t n, std::uint64_t seed) {
        return positions_to_numpy(sample_initial(from_numpy<double>(g, rho), n, seed));
      },
      py::arg("grid"), py::arg("rho"), py::arg("n"), py::arg("seed"));

  m.def(
      "step_ensemble",
      [](const Grid& g, const py::array_t<double>& positions, const py::array_t<double>& drift, double diffusion,
         double dt, std::uint64_t seed, std::uint64_t step, unsigned threads) {
        ParticleEnsemble e = ensemble_from_numpy(positions, seed, step, 0.0);
        const VectorField v = vector_from_numpy(g, drift);
        {
          py::gil_scoped_release release;
          step_ensemble_in_place(e, v, diffusion, dt, {threads});
        }
        return py::make_tuple(positions_to_numpy(e), e.escaped);
      },
      py::arg("grid"), py::arg("positions"), py::arg("drift"), py::arg("diffusion"), py::arg("dt"), py::arg("seed"),
      py::arg("step"), py::arg("threads") = 0);

  m.def(
      "estimate_density",
      [](const Grid& g, const py::array_t<double>& positions, double bandwidth) {
        return to_numpy(g, estimate_density(ensemble_from_numpy(positions, 0, 0, 0.0), g, bandwidth).density.values);
      },
      py::arg("grid"), py::arg("positions"), py::arg("bandwidth") = 0.0);

  m.def(
      "com_diffusion",
      [](std::size_t n, double diffusion, std::size_t ensembles, std::size_t steps, double dt, std::uint64_t seed,
         int dim) {
        ComDiffusionConfig cfg;
        cfg.n_particles = n;
        cfg.diffusion = diffusion;
        cfg.ensembles = ensembles;
        cfg.steps = steps;
        cfg.dt = dt;
        cfg.seed = seed;
        cfg.dim = dim;
        const ComDiffusionResult r = com_diffusion_experiment(cfg);
        py::dict d;
        d["D_com"] = r.d_com_fit;
        d["standard_error"] = r.standard_error;
        d["n"] = r.n_particles;
        d["ensembles"] = r.ensembles;
        d["seed"] = r.seed;
        return d;
      },
      py::arg("n"), py::arg("diffusion"), py::arg("ensembles") = 200, py::arg("steps") = 500, py::arg("dt") = 0.01,
      py::arg("seed") = 0, py::arg("dim") = 1);

  // -- classical
  m.def(
      "integrate_characteristics",
      [](const Potential& u, double mass, const std::vector<std::pair<double, double>>& initial, double t_end,
         double dt) {
        std::vector<InitialCondition> ics;
        for (const auto& [x, p] : initial) ics.push_back({{x, 0.0}, {p, 0.0}});
        const CharacteristicBundle b = integrate_characteristics(u, mass, ics, t_end, dt);
        py::array_t<double> xs({static_cast<py::ssize_t>(ics.size()), static_cast<py::ssize_t>(b.times.size())});
        py::array_t<double> ps({static_cast<py::ssize_t>(ics.size()), static_cast<py::ssize_t>(b.times.size())});
        auto xm = xs.mutable_unchecked<2>();
        auto pm = ps.mutable_unchecked<2>();
        for (std::size_t k = 0; k < ics.size(); ++k) {
          for (std::size_t s = 0; s < b.times.size(); ++s) {
            xm(k, s) = b.x(k, s);
            pm(k, s) = b.p(k, s);
          }
        }
        return py::make_tuple(py::array_t<double>(b.times.size(), b.times.data()), xs, ps);
      },
      py::arg("potential"), py::arg("mass"), py::arg("initial"), py::arg("t_end"), py::arg("dt"));

  // -- stats
  m.def(
      "kl_divergence",
      [](const Grid& g, const py::array_t<double>& p, const py::array_t<double>& q) {
        return kl_divergence(from_numpy<double>(g, p), from_numpy<double>(g, q)).value;
      },
      py::arg("grid"), py::arg("p"), py::arg("q"));
  m.def(
      "wasserstein1",
      [](const Grid& g, const py::array_t<double>& p, const py::array_t<double>& q) {
        return wasserstein1_1d(from_numpy<double>(g, p), from_numpy<double>(g, q));
      },
      py::arg("grid"), py::arg("p"), py::arg("q"));
  m.def(
      "compare_densities",
      [](const Grid& g, const py::array_t<double>& empirical, const py::array_t<double>& reference) {
        return json_to_py(compare_densities(from_numpy<double>(g, empirical), from_numpy<double>(g, reference)).to_json());
      },
      py::arg("grid"), py::arg("empirical"), py::arg("reference"));
  m.def(
      "fit_linear",
      [](const std::vector<double>& t, const std::vector<double>& y) {
        const LinearFit f = fit_linear(t, y);
        return py::make_tuple(f.slope, f.intercept, f.stderr_slope);
      },
      py::arg("t"), py::arg("y"));

  // -- scenarios
  m.def(
      "run_scenario",
      [](const py::object& config, const std::string& mode, std::optional<std::string> out, unsigned threads,
         bool quiet) {
        ScenarioConfig cfg = py::isinstance<py::str>(config) ? ScenarioConfig::load(config.cast<std::string>())
                                                              : ScenarioConfig::from_json(py_to_json(config));
        RunOptions opts;
        if (mode == "solve") {
          opts.mode = RunMode::solve;
        } else if (mode != "ensemble") {
          throw InvalidArgument("mode must be 'solve' or 'ensemble'");
        }
        opts.exec.threads = threads;
        opts.quiet = quiet;
        if (out) cfg.outputs.directory = *out;
        opts.dry = !out.has_value();
        const RunReport r = [&] {
          py::gil_scoped_release release;
          return run_scenario(cfg, opts);
        }();
        return json_to_py(r.to_json());
      },
      py::arg("config"), py::arg("mode") = "ensemble", py::arg("out") = py::none(), py::arg("threads") = 0,
      py::arg("quiet") = true,
      "Run a scenario given a config path or dict. Without `out` nothing is written and only the report returns.");
}
