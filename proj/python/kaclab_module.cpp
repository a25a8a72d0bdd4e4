#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "json.hpp"

#include "kaclab/config.hpp"
#include "kaclab/counterexample.hpp"
#include "kaclab/error.hpp"
#include "kaclab/metrics.hpp"
#include "kaclab/moment_oracle.hpp"
#include "kaclab/persistence.hpp"
#include "kaclab/rate_function.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace kaclab;

namespace {

using Rows = std::vector<std::vector<double>>;

ParticleState state_from_rows(const Rows& rows) {
  if (rows.empty()) throw std::invalid_argument("velocities: need at least one particle");
  ParticleState s(rows.size(), static_cast<int>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw std::invalid_argument("velocities: ragged rows");
    for (std::size_t c = 0; c < rows[i].size(); ++c) s.velocity(i)[c] = rows[i][c];
  }
  return s;
}

Rows rows_from_state(const ParticleState& s) {
  Rows r(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) r[i].assign(s.velocity(i).begin(), s.velocity(i).end());
  return r;
}

WeightedMeasure measure_from(const Rows& points, const std::vector<double>& weights) {
  if (points.size() != weights.size()) throw std::invalid_argument("measure: points and weights differ in length");
  WeightedMeasure m(points.empty() ? 1 : points[0].size());
  for (std::size_t k = 0; k < points.size(); ++k) m.add(points[k], weights[k]);
  return m;
}

std::string simulate_json(const std::string& config) {
  RunConfig rc = parse_config_json(json::parse(config));
  Trajectory tr = simulate(rc.sim);
  json out;
  out["config"] = rc.echo();
  out["initial_state"] = rows_from_state(tr.initial_state);
  out["final_state"] = rows_from_state(tr.final_state);
  out["checkpoints"] = checkpoints_to_json(tr.checkpoints);
  out["ledger"] = ledger_to_json(tr.rn_ledger);
  out["log_rn"] = tr.rn_ledger.hit_zero ? json(nullptr) : json(tr.rn_ledger.log_density());
  out["events"] = tr.log.size();
  out["real_events"] = tr.log.real_count();
  json log = {{"t", json::array()}, {"i", json::array()}, {"j", json::array()}, {"sigma", json::array()},
              {"assignment", json::array()}, {"fictitious", json::array()}};
  for (std::size_t k = 0; k < tr.log.size(); ++k) {
    log["t"].push_back(tr.log.time(k));
    log["i"].push_back(tr.log.i(k));
    log["j"].push_back(tr.log.j(k));
    log["sigma"].push_back(std::vector<double>(tr.log.sigma(k).begin(), tr.log.sigma(k).end()));
    log["assignment"].push_back(tr.log.assignment(k));
    log["fictitious"].push_back(tr.log.fictitious(k));
  }
  out["log"] = log;
  return out.dump();
}

std::string experiment_json(const std::string& config) {
  RunConfig rc = parse_config_json(json::parse(config));
  if (!rc.experiment) throw ConfigError("experiment: required");
  ExperimentReport rep = run_experiment(rc.sim, *rc.experiment, rc.runs, rc.threads);
  json j = rep.to_json();
  j["config"] = rc.echo();
  return j.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Kac collision process laboratory";
  m.attr("__version__") = kToolVersion;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<SimulationError>(m, "SimulationError", PyExc_RuntimeError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def("_simulate_json", &simulate_json, py::arg("config"));
  m.def("_experiment_json", &experiment_json, py::arg("config"));
  m.def("_config_echo_json", [](const std::string& c) { return parse_config_json(json::parse(c)).echo().dump(); });

  m.def("post_collision", [](const std::vector<double>& v, const std::vector<double>& vs, const std::vector<double>& s) {
    return post_collision(v, vs, s);
  });
  m.def(
      "total_rate",
      [](const Rows& velocities, const std::string& kernel) {
        return total_rate(state_from_rows(velocities), Kernel::from_name(kernel));
      },
      py::arg("velocities"), py::arg("kernel") = "maxwell");

  m.def("cumulant_psi", [](int d, double M, double lambda) { return cumulant_psi(ReferenceMeasure(d), M, lambda); },
        py::arg("d"), py::arg("M"), py::arg("lam"));
  m.def("tilted_energy", [](int d, double M, double lambda) { return tilted_energy(ReferenceMeasure(d), M, lambda); },
        py::arg("d"), py::arg("M"), py::arg("lam"));
  m.def("solve_lambda", [](int d, double M, double theta) { return solve_lambda(ReferenceMeasure(d), M, theta); },
        py::arg("d"), py::arg("M"), py::arg("theta_T"));
  m.def("legendre_psi_star", [](int d, double a, double M) { return legendre_psi_star(ReferenceMeasure(d), a, M); },
        py::arg("d"), py::arg("a"), py::arg("M") = 0.0);
  m.def(
      "time_partition",
      [](const std::vector<double>& jumps, const std::vector<double>& values, double T, int r) {
        ThetaSchedule th;
        th.T = T;
        th.jump_times = jumps;
        th.values = values;
        return time_partition(th, r);
      },
      py::arg("jump_times"), py::arg("values"), py::arg("T"), py::arg("r"));

  m.def("tau", &tau, py::arg("k"));
  m.def(
      "bl_distance",
      [](const Rows& pa, const std::vector<double>& wa, const Rows& pb, const std::vector<double>& wb) {
        return bl_distance(measure_from(pa, wa), measure_from(pb, wb)).value;
      },
      py::arg("points_a"), py::arg("weights_a"), py::arg("points_b"), py::arg("weights_b"));
  m.def(
      "flux_distance",
      [](const Rows& pa, const std::vector<double>& wa, const Rows& pb, const std::vector<double>& wb) {
        return flux_distance(measure_from(pa, wa), measure_from(pb, wb)).value;
      },
      py::arg("points_a"), py::arg("weights_a"), py::arg("points_b"), py::arg("weights_b"));

  m.def("sigma_avg_delta", [](int p, const std::vector<double>& v, const std::vector<double>& vs) {
    return sigma_avg_delta(p, v, vs);
  });
  m.def("maxwell_coefficients", [](int d) {
    const auto& c = maxwell_coefficients(d);
    py::dict out;
    out["c1"] = c.c1;
    out["c2"] = c.c2;
    out["c3"] = c.c3;
    out["c4"] = c.c4;
    out["kappa"] = c.kappa;
    out["a"] = c.a(d);
    out["b"] = c.b();
    return out;
  });
  m.def("maxwell_m4_curve", py::overload_cast<double, double, const std::vector<double>&, int>(&maxwell_m4_curve),
        py::arg("m2"), py::arg("m4_0"), py::arg("times"), py::arg("d") = 3);
}
