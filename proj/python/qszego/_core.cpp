#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "qszego/fit.hpp"
#include "qszego/flow.hpp"
#include "qszego/hankel.hpp"
#include "qszego/l1_manifold.hpp"
#include "qszego/lab.hpp"
#include "qszego/spectrum.hpp"

namespace py = pybind11;
using namespace qszego;

namespace {

using CArray = py::array_t<cplx, py::array::c_style | py::array::forcecast>;

SpectrumPlus from_array(const CArray& a) {
    if (a.ndim() != 1) throw std::invalid_argument("coefficients must be one-dimensional");
    return SpectrumPlus(std::vector<cplx>(a.data(), a.data() + a.size()));
}

CArray to_array(const SpectrumPlus& u) {
    CArray out(static_cast<py::ssize_t>(u.size()));
    std::copy(u.coeffs().begin(), u.coeffs().end(), out.mutable_data());
    return out;
}

SpectrumPlus fit_cutoff(const CArray& a, std::optional<std::size_t> cutoff) {
    auto u = from_array(a);
    return cutoff ? u.resized(*cutoff) : u;
}

Integrator integrator_from(const std::string& name) {
    if (name == "rk4") return Integrator::rk4;
    if (name == "rk6") return Integrator::rk6;
    throw std::invalid_argument("integrator must be rk4 or rk6, got " + name);
}

py::dict conserved_dict(const ConservedSet& c) {
    py::dict d;
    d["Q"] = c.Q;
    d["M"] = c.M;
    d["E"] = c.E;
    d["J"] = c.J;
    return d;
}

py::array_t<double> rows_array(const std::vector<std::vector<double>>& rows, std::size_t ncols) {
    py::array_t<double> out({static_cast<py::ssize_t>(rows.size()), static_cast<py::ssize_t>(ncols)});
    auto v = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < ncols; ++j) v(static_cast<py::ssize_t>(i), static_cast<py::ssize_t>(j)) = rows[i][j];
    return out;
}

FlowConfig make_config(double dt, double t_end, std::size_t cutoff, std::size_t stride, std::size_t rank,
                       const std::string& integrator) {
    FlowConfig cfg;
    cfg.dt = dt;
    cfg.t_end = t_end;
    cfg.cutoff = cutoff;
    cfg.monitor_stride = stride;
    cfg.spectrum_rank = rank;
    cfg.integrator = integrator_from(integrator);
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Spectral solver for the cubic Szego-type flow on the Hardy space of the circle.";

    py::register_exception<NumericalInstability>(m, "NumericalInstability", PyExc_RuntimeError);
    py::register_exception<NoResonantPhase>(m, "NoResonantPhase", PyExc_ValueError);
    py::register_exception<NoExponentialRegime>(m, "NoExponentialRegime", PyExc_RuntimeError);
    py::register_exception<lab::ConfigError>(m, "ConfigError", PyExc_ValueError);

    m.def("conserved", [](const CArray& u) { return conserved_dict(conserved(from_array(u))); }, py::arg("u"),
          "Q, M, E and J of a coefficient vector u(0..N).");
    m.def("compute_J", [](const CArray& u) { return compute_J(from_array(u)); }, py::arg("u"));
    m.def("sobolev_norm", [](const CArray& u, double s) { return sobolev_norm(from_array(u), s); }, py::arg("u"),
          py::arg("s"));
    m.def("multiply", [](const CArray& u, const CArray& v) { return to_array(multiply(from_array(u), from_array(v))); },
          py::arg("u"), py::arg("v"), "Truncated product Pi(uv).");
    m.def("projected_mod_squared", [](const CArray& u) { return to_array(projected_mod_squared(from_array(u))); },
          py::arg("u"));
    m.def("rhs", [](const CArray& u) { return to_array(rhs(from_array(u))); }, py::arg("u"));

    m.def(
        "singular_values",
        [](const CArray& u, std::size_t N, const std::string& op) {
            const auto s = from_array(u);
            if (op == "K") return sigma_spectrum(k_matrix(s, N)).values;
            if (op == "H") return sigma_spectrum(hankel_matrix(s, N)).values;
            throw std::invalid_argument("op must be H or K");
        },
        py::arg("u"), py::arg("N"), py::arg("op") = "K", "Singular values of the N x N section, descending.");
    m.def("trace_norm", [](const CArray& u, std::size_t N) { return trace_norm(k_matrix(from_array(u), N)); },
          py::arg("u"), py::arg("N"));

    m.def(
        "integrate",
        [](const CArray& u, double h, std::size_t steps, const std::string& integrator, std::optional<std::size_t> cutoff) {
            const auto u0 = fit_cutoff(u, cutoff);
            SpectrumPlus out;
            {
                py::gil_scoped_release nogil;
                out = integrate(u0, h, steps, integrator_from(integrator));
            }
            return to_array(out);
        },
        py::arg("u"), py::arg("h"), py::arg("steps"), py::arg("integrator") = "rk6", py::arg("cutoff") = py::none());

    m.def(
        "evolve",
        [](const CArray& u, double dt, double t_end, std::size_t cutoff, std::size_t stride, std::size_t rank,
           const std::string& integrator) {
            const auto cfg = make_config(dt, t_end, cutoff, stride, rank, integrator);
            const auto u0 = from_array(u).resized(cutoff);
            TrajectoryRecord rec;
            {
                py::gil_scoped_release nogil;
                rec = evolve(u0, cfg);
            }
            py::dict d;
            d["columns"] = rec.columns;
            d["rows"] = rows_array(rec.rows, rec.columns.size());
            d["aborted"] = rec.aborted;
            d["last_valid_time"] = rec.last_valid_time;
            d["diagnostic"] = rec.diagnostic;
            return d;
        },
        py::arg("u"), py::arg("dt"), py::arg("t_end"), py::arg("cutoff"), py::arg("stride") = 1, py::arg("rank") = 5,
        py::arg("integrator") = "rk6", "Monitored trajectory as {'columns', 'rows', 'aborted', ...}.");

    py::class_<RationalState>(m, "RationalState")
        .def(py::init([](cplx b, cplx c, cplx p) { return RationalState{b, c, p}; }), py::arg("b"), py::arg("c"),
             py::arg("p"))
        .def_readwrite("b", &RationalState::b)
        .def_readwrite("c", &RationalState::c)
        .def_readwrite("p", &RationalState::p)
        .def("on_manifold", &RationalState::on_manifold)
        .def("to_spectrum", [](const RationalState& s, std::size_t N) { return to_array(to_spectrum(s, N)); },
             py::arg("N"))
        .def("conserved", [](const RationalState& s) { return conserved_dict(conserved_closed_form(s)); })
        .def("rhs", &ode_rhs)
        .def("__repr__", [](const RationalState& s) {
            return py::str("RationalState(b={}, c={}, p={})").format(s.b, s.c, s.p);
        });

    m.def("kappa", &kappa, py::arg("Q"), py::arg("M"));
    m.def("envelope_roots", &envelope_roots, py::arg("Q"), py::arg("M"));
    m.def("find_blowup_initial", &find_blowup_initial, py::arg("Q"), py::arg("M"), py::arg("p_abs"));
    m.def("resonance_residual", &resonance_residual, py::arg("state"));

    m.def(
        "evolve_ode",
        [](const RationalState& s0, double dt, double t_end, std::size_t stride, const std::string& integrator) {
            const auto cfg = make_config(dt, t_end, 1, stride, 0, integrator);
            L1Trajectory traj;
            {
                py::gil_scoped_release nogil;
                traj = evolve_ode(s0, cfg);
            }
            py::array_t<cplx> states({static_cast<py::ssize_t>(traj.states.size()), py::ssize_t{3}});
            auto v = states.mutable_unchecked<2>();
            for (std::size_t i = 0; i < traj.states.size(); ++i) {
                const auto k = static_cast<py::ssize_t>(i);
                v(k, 0) = traj.states[i].b;
                v(k, 1) = traj.states[i].c;
                v(k, 2) = traj.states[i].p;
            }
            py::dict d;
            d["t"] = py::array_t<double>(static_cast<py::ssize_t>(traj.times.size()), traj.times.data());
            d["bcp"] = states;
            d["aborted"] = traj.aborted;
            return d;
        },
        py::arg("state"), py::arg("dt"), py::arg("t_end"), py::arg("stride") = 1, py::arg("integrator") = "rk6",
        "Reduced (b, c, p) system; 'bcp' has one row per sample.");

    m.def(
        "fit_exponential",
        [](const std::vector<double>& t, const std::vector<double>& y, double t0, double t1) {
            const auto f = fit_exponential(t, y, {t0, t1});
            py::dict d;
            d["slope"] = f.slope;
            d["intercept"] = f.intercept;
            d["residual_rms"] = f.residual_rms;
            d["points"] = f.points;
            return d;
        },
        py::arg("t"), py::arg("y"), py::arg("t_start"), py::arg("t_end"));

    m.def(
        "_run_lab",
        [](const std::string& experiment, const std::string& config_json, const std::filesystem::path& out_dir,
           const std::filesystem::path& base_dir) {
            auto spec = lab::parse_run_spec(nlohmann::json::parse(config_json), lab::experiment_from_string(experiment));
            spec.out_dir = out_dir;
            spec.base_dir = base_dir;
            lab::RunResult res;
            {
                py::gil_scoped_release nogil;
                res = lab::run(spec);
            }
            return py::make_tuple(res.exit_code, res.summary.dump());
        },
        py::arg("experiment"), py::arg("config_json"), py::arg("out_dir"), py::arg("base_dir") = ".");
}
