#include "polygnn/config.hpp"
#include "polygnn/errors.hpp"
#include "polygnn/fung.hpp"
#include "polygnn/graph.hpp"
#include "polygnn/io.hpp"
#include "polygnn/metrics.hpp"
#include "polygnn/phasefield.hpp"
#include "polygnn/pipeline.hpp"
#include "polygnn/verification.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>

namespace py = pybind11;
using namespace polygnn;

namespace {

// owns the parameters and graph a SurrogateModel points into
struct LoadedModel {
    ModelParams params;
    std::optional<GraphInput> graph;
    std::unique_ptr<SurrogateModel> model;

    LoadedModel(const std::filesystem::path& checkpoint, const std::optional<std::filesystem::path>& rve)
        : params(load_checkpoint(checkpoint)) {
        if (params.arch.use_graph) {
            if (!rve) throw std::invalid_argument("hybrid checkpoint needs an RVE file");
            graph = make_graph_input(load_polycrystal(*rve), params.arch.propagation);
        }
        model = std::make_unique<SurrogateModel>(params, graph ? &*graph : nullptr);
    }
};

Graph graph_from_edges(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
    return build_graph(n, edges);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Graph-enhanced hyperelastic surrogates for polycrystals";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

    py::class_<Orientation>(m, "Orientation")
        .def(py::init<>())
        .def(py::init([](double a, double b, double c) { return Orientation{a, b, c}; }), py::arg("phi1"),
             py::arg("Phi"), py::arg("phi2"))
        .def_readwrite("phi1", &Orientation::phi1)
        .def_readwrite("Phi", &Orientation::Phi)
        .def_readwrite("phi2", &Orientation::phi2)
        .def("__repr__", [](const Orientation& o) {
            return "Orientation(" + std::to_string(o.phi1) + ", " + std::to_string(o.Phi) + ", " +
                   std::to_string(o.phi2) + ")";
        });

    m.def("bunge_rotation", &bunge_rotation);
    m.def("to_voigt", &to_voigt);
    m.def("from_voigt", &from_voigt);

    m.def(
        "fung_response",
        [](const Mat3& F, const Orientation& o) {
            const auto r = fung_response(F, o);
            return py::make_tuple(r.psi, r.S);
        },
        py::arg("F"), py::arg("orientation") = Orientation{}, "Energy and PK2 stress for the reference constants.");

    py::class_<DescriptorMatrices>(m, "DescriptorMatrices")
        .def_readonly("A", &DescriptorMatrices::A)
        .def_readonly("A_hat", &DescriptorMatrices::A_hat)
        .def_readonly("D", &DescriptorMatrices::D)
        .def_readonly("D_hat", &DescriptorMatrices::D_hat)
        .def_readonly("L", &DescriptorMatrices::L)
        .def_readonly("L_sym", &DescriptorMatrices::L_sym);
    m.def(
        "descriptor_matrices",
        [](std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
            return descriptor_matrices(graph_from_edges(n, edges));
        },
        py::arg("n_nodes"), py::arg("edges"));
    m.def(
        "propagation_operator",
        [](std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges, const std::string& mode) {
            return propagation_operator(graph_from_edges(n, edges), parse_propagation_mode(mode));
        },
        py::arg("n_nodes"), py::arg("edges"), py::arg("mode") = "renormalized_adjacency");

    py::class_<Polycrystal>(m, "Polycrystal")
        .def_property_readonly("shape", [](const Polycrystal& p) { return py::make_tuple(p.grid.nx, p.grid.ny, p.grid.nz); })
        .def_property_readonly("labels", [](const Polycrystal& p) { return p.labels; })
        .def_readwrite("orientations", &Polycrystal::orientations)
        .def_property_readonly("n_grains", &Polycrystal::n_grains)
        .def("volume_fractions", &Polycrystal::volume_fractions)
        .def("contacts", [](const Polycrystal& p) { return contacts(p); })
        .def("features", [](const Polycrystal& p) { return feature_matrix(p); });
    m.def(
        "generate_polycrystal",
        [](std::uint64_t seed, int n_grains, int grid, double odf_weight) {
            auto p = generate_polycrystal(seed, n_grains, {grid, grid, grid});
            OdfParams odf;
            odf.weight = odf_weight;
            p.orientations = sample_orientations(seed, n_grains, odf);
            return p;
        },
        py::arg("seed"), py::arg("n_grains"), py::arg("grid") = 16, py::arg("odf_weight") = 0.66);
    m.def("load_polycrystal", &load_polycrystal);
    m.def("save_polycrystal", &save_polycrystal);
    m.def(
        "taylor_homogenize",
        [](const Polycrystal& p, const Mat3& F) {
            const auto r = taylor_homogenize(p, F);
            return py::make_tuple(r.psi, r.S);
        },
        py::arg("rve"), py::arg("F"));

    m.def("scaled_mse", [](const std::vector<double>& pred, const std::vector<double>& truth) {
        return scaled_mse(pred, truth);
    });
    m.def(
        "ecdf_steps", [](const std::vector<double>& v) { return ecdf(v).steps(); },
        "Distinct values with the cumulative fraction reached at each.");

    py::class_<LoadedModel>(m, "Surrogate")
        .def(py::init<const std::filesystem::path&, const std::optional<std::filesystem::path>&>(),
             py::arg("checkpoint"), py::arg("rve") = py::none())
        .def("energy", [](const LoadedModel& s, const Voigt& C) { return s.model->energy(C); })
        .def("stress", [](const LoadedModel& s, const Voigt& C) { return s.model->stress(C); })
        .def_property_readonly("variant_uses_graph", [](const LoadedModel& s) { return s.params.arch.use_graph; });

    m.def("steady_state_damage", [](double H, double g_c, double l_0) {
        PhaseFieldParams p;
        p.g_c = g_c;
        p.l_0 = l_0;
        return steady_state_damage(H, p);
    });

    m.def("default_config", [] { return serialize_run_config(RunConfig{}); },
          "Default run configuration as JSON text.");
    m.def(
        "run",
        [](const std::string& command, const std::string& config_json, int threads) {
            const auto cfg = parse_run_config(config_json);
            RunOptions opts;
            opts.threads = threads;
            py::gil_scoped_release release;
            return run_command(command, cfg, opts);
        },
        py::arg("command"), py::arg("config_json"), py::arg("threads") = 1,
        "Runs one pipeline stage and returns the CLI exit code.");
    m.attr("__version__") = POLYGNN_VERSION;
}
