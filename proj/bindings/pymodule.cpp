#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "opfsdr/admittance.hpp"
#include "opfsdr/analysis.hpp"
#include "opfsdr/conversion.hpp"
#include "opfsdr/exportfmt.hpp"
#include "opfsdr/formulation.hpp"
#include "opfsdr/matpower.hpp"
#include "opfsdr/netjson.hpp"
#include "opfsdr/pipeline.hpp"
#include "opfsdr/solver.hpp"

namespace py = pybind11;
using namespace opfsdr;

namespace {

RunConfig make_config(const std::string& strategy, int rho, bool amalgamate, double tol,
                      bool scale, int max_iterations) {
  RunConfig config;
  config.strategy = strategy;
  config.rho = rho;
  config.amalgamate_cliques = amalgamate;
  config.solver.tolerance = tol;
  config.scale = scale;
  config.solver.max_iterations = max_iterations;
  return config;
}

py::dict run_to_dict(const StrategyRun& run) {
  py::dict out;
  out["strategy"] = run.strategy;
  out["status"] = to_string(run.solution.status);
  out["objective"] = run.solution.objective;
  out["iterations"] = run.solution.iterations;
  out["wall_time_s"] = run.solution.wall_time_s;
  out["rows_original"] = run.rows_original;
  out["rows_total"] = run.rows_total;
  out["primal_residual"] = run.solution.primal_residual;
  out["dual_residual"] = run.solution.dual_residual;
  out["duality_gap"] = run.solution.duality_gap;
  if (run.counts.has_value()) {
    out["consistency_rows"] = run.counts->consistency_rows;
    out["constraint_ratio"] = run.counts->ratio;
    out["block_orders"] = run.counts->block_orders;
  }
  if (run.rank.has_value()) {
    out["min_eig_ratio"] = run.rank->min_ratio;
    out["rank_one"] = run.rank->rank_one;
  }
  if (run.recovery.has_value()) {
    out["voltages"] = run.recovery->voltages;
    out["recovered_objective"] = run.recovery->objective;
    out["p_dispatch"] = run.recovery->p_dispatch;
    out["q_dispatch"] = run.recovery->q_dispatch;
  }
  if (run.feasibility.has_value()) {
    py::dict f;
    f["max_p_balance"] = run.feasibility->max_p_balance;
    f["max_q_balance"] = run.feasibility->max_q_balance;
    f["max_generation_violation"] = run.feasibility->max_generation_violation;
    f["max_voltage_violation"] = run.feasibility->max_voltage_violation;
    f["max_flow_violation"] = run.feasibility->max_flow_violation;
    f["objective_gap"] = run.feasibility->objective_gap;
    out["feasibility"] = f;
  }
  if (!run.recovery_error.empty()) out["recovery_error"] = run.recovery_error;
  return out;
}

}  // namespace

PYBIND11_MODULE(_opfsdr, m) {
  m.doc() = "Semidefinite relaxations of AC optimal power flow via chordal conversion";

  py::register_exception<Error>(m, "OpfSdrError");

  py::enum_<GenKind>(m, "GenKind")
      .value("fixed", GenKind::Fixed)
      .value("linear", GenKind::Linear)
      .value("quadratic", GenKind::Quadratic);

  py::class_<Bus>(m, "Bus")
      .def_readonly("id", &Bus::id)
      .def_readonly("v_min", &Bus::v_min)
      .def_readonly("v_max", &Bus::v_max)
      .def_readonly("p_demand", &Bus::p_demand)
      .def_readonly("q_demand", &Bus::q_demand)
      .def_readonly("shunt_g", &Bus::shunt_g)
      .def_readonly("shunt_b", &Bus::shunt_b);

  py::class_<Generator>(m, "Generator")
      .def_readonly("bus", &Generator::bus)
      .def_readonly("p_min", &Generator::p_min)
      .def_readonly("p_max", &Generator::p_max)
      .def_readonly("q_min", &Generator::q_min)
      .def_readonly("q_max", &Generator::q_max)
      .def_readonly("alpha", &Generator::alpha)
      .def_readonly("beta", &Generator::beta)
      .def_readonly("cost_const", &Generator::cost_const)
      .def_readonly("kind", &Generator::kind);

  py::class_<Branch>(m, "Branch")
      .def_readonly("from_bus", &Branch::from)
      .def_readonly("to_bus", &Branch::to)
      .def_readonly("r", &Branch::r)
      .def_readonly("x", &Branch::x)
      .def_readonly("b_charging", &Branch::b_charging)
      .def_readonly("tap_ratio", &Branch::tap_ratio)
      .def_readonly("phase_shift", &Branch::phase_shift)
      .def_property_readonly("s_max", [](const Branch& b) {
        return b.s_max.has_value() ? py::cast(*b.s_max) : py::none().cast<py::object>();
      });

  py::class_<Network>(m, "Network")
      .def_readonly("buses", &Network::buses)
      .def_readonly("generators", &Network::generators)
      .def_readonly("branches", &Network::branches)
      .def_readonly("flow_limited", &Network::flow_limited)
      .def_readonly("base_mva", &Network::base_mva)
      .def_property_readonly("n_buses", &Network::n_buses)
      .def_property_readonly("n_generators", &Network::n_generators)
      .def_property_readonly("n_branches", &Network::n_branches)
      .def("to_json", [](const Network& n) { return serialize_network_json(n); });

  m.def("parse_matpower",
        [](const std::string& text) { return parse_matpower_case(text); },
        py::arg("text"), "Parse a MATPOWER case from a string");
  m.def("parse_network_json",
        [](const std::string& text) { return parse_network_json(text); }, py::arg("text"));
  m.def("fix_tight_generators", &fix_tight_generators, py::arg("network"),
        py::arg("tol") = 1e-3);
  m.def("apply_min_resistance", &apply_min_resistance, py::arg("network"),
        py::arg("r_min") = 1e-4);

  m.def("admittance_matrix", [](const Network& net) {
    return build_admittance(net).dense();
  });
  m.def("count_variables", &count_variables);
  m.def("count_rows", &count_rows);

  m.def(
      "build_and_count",
      [](const Network& net) {
        const SdrProblem sdr = build_sdr(net);
        py::dict out;
        out["rows"] = sdr.lp.num_rows();
        out["dim"] = sdr.lp.dim();
        out["cone_dim"] = sdr.lp.cone.cone_dim();
        return out;
      },
      py::arg("network"), "Formulate the SDR and report its dimensions");

  m.def(
      "solve_case",
      [](const Network& net, const std::string& strategy, int rho, bool amalgamate,
         double tol, bool scale, int max_iterations) {
        const RunConfig config =
            make_config(strategy, rho, amalgamate, tol, scale, max_iterations);
        const SdrProblem sdr = build_sdr(net);
        return run_to_dict(run_strategy(net, sdr, strategy, config));
      },
      py::arg("network"), py::arg("strategy") = "full", py::arg("rho") = 1,
      py::arg("amalgamate") = false, py::arg("tol") = 1e-7, py::arg("scale") = true,
      py::arg("max_iterations") = 200,
      "Formulate, convert, solve and analyze one relaxation");

  m.def(
      "export_case",
      [](const Network& net, const std::string& strategy, const std::string& format,
         int rho, bool amalgamate) {
        const RunConfig config = make_config(strategy, rho, amalgamate, 1e-7, true, 200);
        const SdrProblem sdr = build_sdr(net);
        const ConeLP lp = solver_form(net, sdr, strategy, config);
        return export_conelp(lp, export_format_from_string(format));
      },
      py::arg("network"), py::arg("strategy") = "full", py::arg("format") = "cbf",
      py::arg("rho") = 1, py::arg("amalgamate") = false,
      "Serialize the solver-facing problem to sdpa-sparse or cbf");

  m.def(
      "clique_report",
      [](const Network& net, bool merge, int t_fill, int t_size) {
        const SparsityPattern pattern = network_pattern(net);
        const Embedding embedding = chordal_embedding(pattern);
        CliqueTree tree = clique_tree_of(embedding);
        if (merge) tree = amalgamate(tree, t_fill, t_size);
        py::dict out;
        out["cliques"] = tree.cliques;
        out["parents"] = tree.parent;
        out["separators"] = tree.separators;
        std::vector<long> counts;
        for (const char* name : {"full", "band1", "band2", "band3", "diagonal"}) {
          counts.push_back(consistency_count_closed_form(
              tree, strategy_from_name(name, 1), nullptr));
        }
        const SparsityPattern net_edges = network_pattern(net);
        counts.push_back(
            consistency_count_closed_form(tree, ConsistencyStrategy::sparse(), &net_edges));
        out["consistency_counts"] = counts;
        return out;
      },
      py::arg("network"), py::arg("amalgamate") = false, py::arg("t_fill") = 16,
      py::arg("t_size") = 16);
}
