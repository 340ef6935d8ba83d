#include "asyncnet/config.hpp"
#include "asyncnet/demos.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace asyncnet;

namespace {

py::object json_to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

ConfigOverrides make_overrides(std::optional<std::uint64_t> seed, std::optional<int> threads) {
  ConfigOverrides ov;
  ov.seed = seed;
  ov.threads = threads;
  return ov;
}

}  // namespace

PYBIND11_MODULE(_asyncnet, m) {
  m.doc() = "Stochastic-gradient learning over synchronous and asynchronous networks";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ArithmeticError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_RuntimeError);

  m.def(
      "theory",
      [](const std::string& config, std::optional<std::uint64_t> seed) {
        const ParsedConfig pc = parse_config_text(config, make_overrides(seed, std::nullopt));
        return json_to_py(to_json(predict(pc.spec)));
      },
      py::arg("config"), py::arg("seed") = py::none(), "Closed-form predictions for a JSON config string.");

  m.def(
      "simulate",
      [](const std::string& config, std::optional<std::uint64_t> seed, std::optional<int> threads) {
        const ParsedConfig pc = parse_config_text(config, make_overrides(seed, threads));
        ExperimentResult res;
        {
          py::gil_scoped_release release;
          res = run_experiment(pc.spec);
        }
        py::dict out;
        out["report"] = json_to_py(to_json(res.report));
        out["msd"] = res.curve.msd;
        out["network"] = res.curve.network;
        out["emse"] = res.curve.emse;
        return out;
      },
      py::arg("config"), py::arg("seed") = py::none(), py::arg("threads") = py::none(),
      "Monte Carlo learning curves (iterations x estimates) and the steady-state report.");

  m.def(
      "compare",
      [](const std::string& config, std::optional<std::uint64_t> seed, std::optional<int> threads) {
        const ParsedConfig pc = parse_config_text(config, make_overrides(seed, threads));
        const TheoryRecord th = predict(pc.spec);
        ExperimentResult res;
        {
          py::gil_scoped_release release;
          res = run_experiment(pc.spec);
        }
        return json_to_py(to_json(compare_theory(res.report, th, pc.tolerance)));
      },
      py::arg("config"), py::arg("seed") = py::none(), py::arg("threads") = py::none());

  m.def("config_digest", [](const std::string& config) { return parse_config_text(config).spec.digest; });

  m.def(
      "perron",
      [](const Matrix& A_bar, std::optional<Matrix> C_A) {
        const Matrix C = C_A ? *C_A : Matrix(Matrix::Zero(A_bar.size(), A_bar.size()));
        const PerronData p = perron_data(A_bar, C);
        py::dict out;
        out["p_bar"] = p.p_bar;
        out["p_c"] = p.p_c;
        out["P_c"] = p.P_c;
        return out;
      },
      py::arg("A_bar"), py::arg("C_A") = py::none(), "Perron vectors of the mean and second-order combination matrices.");

  m.def("metropolis_ring", [](int N) { return metropolis_weights(ring_adjacency(N)); }, py::arg("N"));

  m.def(
      "mean_stability",
      [](const std::string& kind, const Matrix& A_bar, const Vector& mu_bar, const std::vector<Matrix>& R_u) {
        const MeanStability s = mean_stability_matrix(strategy_from_string(kind), A_bar, mu_bar, R_u);
        return py::make_tuple(s.B, s.spectral_radius);
      },
      py::arg("kind"), py::arg("A_bar"), py::arg("mu_bar"), py::arg("R_u"));

  m.def("demo_names", &demo_names);
  m.def(
      "demo",
      [](const std::string& name, std::uint64_t seed, int threads) {
        DemoResult d;
        {
          py::gil_scoped_release release;
          d = run_demo(name, seed, threads);
        }
        return py::make_tuple(d.pass, d.lines);
      },
      py::arg("name"), py::arg("seed") = 2024, py::arg("threads") = 0);
}
