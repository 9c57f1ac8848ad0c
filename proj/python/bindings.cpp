#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "efsgd/harness.hpp"

namespace py = pybind11;
using namespace efsgd;

namespace {

std::vector<double> to_list(const ParamVector& v) { return {v.begin(), v.end()}; }

py::list run_records(const std::string& config_text) {
  const ExperimentConfig cfg = parse_experiment(config_text);
  const Trajectory traj = run(cfg.run);
  py::list rows;
  for (const RoundRecord& r : traj.records) {
    py::dict row;
    row["t"] = r.t;
    row["eta"] = r.eta;
    row["x"] = to_list(r.x);
    row["grad_norm_sq"] = r.grad_norm_sq;
    row["combined_error_sq"] = r.combined_error_sq;
    row["combined_error_next_sq"] = r.combined_error_next_sq;
    if (traj.log_mode == LogMode::kFull) row["virtual_x"] = to_list(r.virtual_x);
    rows.append(row);
  }
  return rows;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Simulator and verification lab for error-feedback SGD with two-sided compression";

  m.def("counterexample_json", [](int id) { return counterexample_json(reproduce_counterexample(id)).dump(); },
        py::arg("id"));
  m.def(
      "simulate",
      [](const std::string& text) {
        const SimulationOutput out = simulate(parse_experiment(text));
        return py::make_tuple(summary_json(out.summary).dump(), out.csv);
      },
      py::arg("config_text"));
  m.def(
      "sweep",
      [](const std::string& text) {
        const SweepOutput out = sweep(parse_sweep(text));
        return py::make_tuple(out.csv, out.rows, out.errors);
      },
      py::arg("config_text"));
  m.def("verify_json", [](std::uint64_t seed) { return verification_json(run_verification_suite(seed)).dump(); },
        py::arg("seed") = 20240601);
  m.def("run", &run_records, py::arg("config_text"));

  m.def(
      "bound_json",
      [](const std::string& which, double delta, double G, std::int64_t t, double eta0, double eta1,
         const std::string& schedule, double L, double sigma, int M, std::int64_t T, double f_gap) {
        return evaluate_bound({which, delta, G, t, eta0, eta1, schedule, L, sigma, M, T, f_gap}).dump();
      },
      py::arg("which"), py::arg("delta"), py::arg("G") = 0.0, py::arg("t") = 0, py::arg("eta0") = 0.0,
      py::arg("eta1") = 0.0, py::arg("schedule") = "", py::arg("L") = 0.0, py::arg("sigma") = 0.0, py::arg("M") = 1,
      py::arg("T") = 1, py::arg("f_gap") = 0.0);
  m.def("lemma_a_bound", &lemma_a_bound, py::arg("delta"), py::arg("G"));
  m.def("remark1_u", &remark1_u, py::arg("delta"), py::arg("G"), py::arg("eta0"), py::arg("eta1"));
  m.def(
      "theorem2_error_bound",
      [](const std::string& schedule, double delta, double G, std::int64_t t, int workers, std::int64_t rounds) {
        return theorem2_error_bound(parse_schedule(schedule, workers, rounds), delta, G, t);
      },
      py::arg("schedule"), py::arg("delta"), py::arg("G"), py::arg("t"), py::arg("workers") = 1,
      py::arg("rounds") = 1);
  m.def(
      "eta_table",
      [](const std::string& schedule, std::int64_t count, int workers, std::int64_t rounds) {
        return eta_table(parse_schedule(schedule, workers, rounds), count);
      },
      py::arg("schedule"), py::arg("count"), py::arg("workers") = 1, py::arg("rounds") = 1);
  m.def(
      "compress",
      [](const std::string& spec, const std::vector<double>& x, std::uint64_t seed) {
        const Compressor c = parse_compressor(spec, x.size());
        Rng rng(seed);
        return to_list(compress(c, ParamVector(x), rng));
      },
      py::arg("spec"), py::arg("x"), py::arg("seed") = 0);
  m.def(
      "describe_compressor",
      [](const std::string& spec, std::size_t dim) { return parse_compressor(spec, dim).describe(); },
      py::arg("spec"), py::arg("dim"));

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
}
