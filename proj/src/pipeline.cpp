#include "opfsdr/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "opfsdr/admittance.hpp"
#include "opfsdr/exportfmt.hpp"
#include "opfsdr/matpower.hpp"
#include "opfsdr/netjson.hpp"

namespace opfsdr {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read \"" + path + "\"");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write \"" + path + "\"");
  out << content;
}

}  // namespace

Network load_network(const RunConfig& config) {
  std::string fmt = config.format;
  if (fmt == "auto") {
    const auto ext = std::filesystem::path(config.input_path).extension().string();
    fmt = (ext == ".json") ? "json" : "matpower";
  }
  const std::string text = read_file(config.input_path);
  if (fmt == "json") return parse_network_json(text);
  if (fmt == "matpower") return parse_matpower_case(text);
  throw ValidationError("unknown input format \"" + fmt + "\"");
}

Network preprocess(const Network& raw, const RunConfig& config) {
  Network net = fix_tight_generators(raw, config.fix_gen_tol);
  net = apply_min_resistance(net, config.min_resistance);
  if (config.flows == "all") {
    net.flow_limited = flow_set_all(net);
  } else if (config.flows == "none") {
    net.flow_limited.clear();
  } else {
    net.flow_limited = flow_set_from_list(net, read_file(config.flows));
  }
  net.validate();
  return net;
}

SparsityPattern network_pattern(const Network& net) {
  SparsityPattern p(net.n_buses());
  for (const Branch& br : net.branches) p.add_edge(br.from, br.to);
  return p;
}

ConsistencyStrategy strategy_from_name(const std::string& name, int rho) {
  if (name == "full") return ConsistencyStrategy::full();
  if (name == "band") return ConsistencyStrategy::band(rho);
  if (name == "arrow") return ConsistencyStrategy::arrow(rho);
  if (name == "sparse") return ConsistencyStrategy::sparse();
  if (name == "diagonal") return ConsistencyStrategy::diagonal();
  // band1, band2, ..., arrow1, ... convenience spellings
  if (name.rfind("band", 0) == 0) return ConsistencyStrategy::band(std::stoi(name.substr(4)));
  if (name.rfind("arrow", 0) == 0) return ConsistencyStrategy::arrow(std::stoi(name.substr(5)));
  throw ValidationError("unknown strategy \"" + name + "\"");
}

namespace {

Solution solve_scaled(const ConeLP& lp, const RunConfig& config) {
  if (!config.scale) return solve(lp, config.solver);
  auto [scaled, record] = scale_conelp(lp);
  Solution sol = solve(scaled, config.solver);
  unscale_solution(record, sol);
  return sol;
}

std::vector<std::pair<int, int>> network_minors(const Network& net) {
  const SparsityPattern p = network_pattern(net);
  std::vector<std::pair<int, int>> minors;
  for (int i = 0; i < p.order(); ++i) {
    for (int j : p.neighbors(i)) {
      if (j > i) minors.emplace_back(i, j);
    }
  }
  return minors;
}

struct PreparedStrategy {
  ConeLP real_form;                       // what the solver sees (unscaled)
  std::optional<ConvertedProblem> conv;   // converted strategies
  std::optional<ConeLP> complex_form;     // problem whose blocks are extracted
  bool has_psd = true;
};

PreparedStrategy prepare(const Network& net, const SdrProblem& sdr,
                         const std::string& strategy_name, const RunConfig& config) {
  PreparedStrategy out;
  if (strategy_name == "unconverted") {
    out.complex_form = sdr.lp;
    out.real_form = real_embedding(sdr.lp);
    return out;
  }
  if (strategy_name == "soc-minors") {
    out.real_form = soc_minor_relaxation(sdr.lp, sdr.map, network_minors(net));
    out.has_psd = false;
    return out;
  }
  const ConsistencyStrategy strategy = strategy_from_name(strategy_name, config.rho);
  const SparsityPattern pattern = network_pattern(net);
  const Embedding embedding = chordal_embedding(pattern);
  CliqueTree tree = clique_tree_of(embedding);
  if (config.amalgamate_cliques) tree = amalgamate(tree, config.t_fill, config.t_size);
  ConvertedProblem conv = convert(sdr.lp, tree, strategy, &pattern);
  out.real_form = real_embedding(conv.problem);
  out.complex_form = conv.problem;
  out.conv = std::move(conv);
  return out;
}

}  // namespace

ConeLP solver_form(const Network& net, const SdrProblem& sdr,
                   const std::string& strategy_name, const RunConfig& config) {
  return prepare(net, sdr, strategy_name, config).real_form;
}

StrategyRun run_strategy(const Network& net, const SdrProblem& sdr,
                         const std::string& strategy_name, const RunConfig& config) {
  StrategyRun run;
  run.strategy = strategy_name;
  PreparedStrategy prep = prepare(net, sdr, strategy_name, config);
  run.rows_original = sdr.lp.num_rows();
  run.rows_total = prep.real_form.num_rows();
  if (prep.conv.has_value()) run.counts = prep.conv->count_report();

  run.solution = solve_scaled(prep.real_form, config);
  if (run.solution.status != SolveStatus::Optimal) return run;

  if (!prep.has_psd) return run;

  const std::vector<Eigen::MatrixXcd> blocks =
      extract_hermitian_blocks(*prep.complex_form, run.solution.z);
  run.rank = rank_report(blocks);

  const CliqueTree tree =
      prep.conv.has_value() ? prep.conv->tree : trivial_clique_tree(net.n_buses());
  const ConsistencyStrategy strategy =
      prep.conv.has_value() ? prep.conv->strategy : ConsistencyStrategy::full();
  RecoveryOptions ropt;
  ropt.reference_bus = config.reference_bus;
  try {
    RecoveredSolution rec = recover_voltage(net, blocks, tree, strategy, ropt);
    FeasibilityReport feas = check_feasibility(net, rec);
    feas.objective_gap = rec.objective - run.solution.objective;
    run.recovery = std::move(rec);
    run.feasibility = feas;
  } catch (const Error& e) {
    run.recovery_error = e.what();
  }
  return run;
}

int exit_code_for(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return 0;
    case SolveStatus::PrimalInfeasible:
    case SolveStatus::DualInfeasible: return 2;
    case SolveStatus::IterationLimit:
    case SolveStatus::NumericalFailure: return 3;
  }
  return 3;
}

namespace {

nlohmann::json solution_json(const StrategyRun& run) {
  nlohmann::json doc;
  doc["strategy"] = run.strategy;
  doc["status"] = to_string(run.solution.status);
  doc["objective"] = run.solution.objective;
  doc["iterations"] = run.solution.iterations;
  doc["wall_time_s"] = run.solution.wall_time_s;
  doc["residuals"] = {{"primal", run.solution.primal_residual},
                      {"dual", run.solution.dual_residual},
                      {"gap", run.solution.duality_gap}};
  doc["certificate_residual"] = run.solution.certificate_residual;
  doc["rows_original"] = run.rows_original;
  doc["rows_total"] = run.rows_total;
  return doc;
}

nlohmann::json rank_json(const RankReport& rank) {
  nlohmann::json doc;
  doc["threshold"] = rank.threshold;
  doc["min_ratio"] = rank.min_ratio;
  doc["rank_one"] = rank.rank_one;
  doc["blocks"] = nlohmann::json::array();
  for (const BlockEig& b : rank.blocks) {
    doc["blocks"].push_back({{"order", b.order},
                             {"lambda1", b.lambda1},
                             {"lambda2", b.lambda2},
                             {"ratio", b.ratio}});
  }
  return doc;
}

nlohmann::json feasibility_json(const StrategyRun& run, const Network& net) {
  nlohmann::json doc;
  if (!run.feasibility.has_value()) {
    doc["recovered"] = false;
    doc["reason"] = run.recovery_error;
    return doc;
  }
  const FeasibilityReport& f = *run.feasibility;
  doc["recovered"] = true;
  doc["max_p_balance"] = f.max_p_balance;
  doc["max_q_balance"] = f.max_q_balance;
  doc["max_generation_violation"] = f.max_generation_violation;
  doc["max_voltage_violation"] = f.max_voltage_violation;
  doc["max_flow_violation"] = f.max_flow_violation;
  doc["objective_gap"] = f.objective_gap;
  doc["recovered_objective"] = run.recovery->objective;
  doc["voltages"] = nlohmann::json::array();
  for (int k = 0; k < net.n_buses(); ++k) {
    doc["voltages"].push_back({{"bus", net.buses[k].id},
                               {"magnitude", std::abs(run.recovery->voltages(k))},
                               {"angle", std::arg(run.recovery->voltages(k))}});
  }
  return doc;
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

nlohmann::json counts_json(const StrategyRun& run) {
  nlohmann::json doc;
  if (run.counts.has_value()) {
    const CountReport& c = *run.counts;
    doc["r"] = c.original_rows;
    doc["s"] = c.consistency_rows;
    doc["ratio"] = round2(c.ratio);
    doc["block_orders"] = c.block_orders;
    doc["sum_block_squares"] = c.sum_block_squares;
  } else {
    doc["r"] = run.rows_original;
    doc["s"] = run.rows_total - run.rows_original;
    doc["ratio"] = round2(run.rows_original > 0
                              ? static_cast<double>(run.rows_total) / run.rows_original
                              : 0.0);
  }
  return doc;
}

}  // namespace

int cmd_run(const RunConfig& config) {
  const Network net = preprocess(load_network(config), config);
  const SdrProblem sdr = build_sdr(net);

  if (!config.dump_tree_path.empty()) {
    const Embedding embedding = chordal_embedding(network_pattern(net));
    CliqueTree tree = clique_tree_of(embedding);
    if (config.amalgamate_cliques) tree = amalgamate(tree, config.t_fill, config.t_size);
    write_file(config.dump_tree_path, clique_tree_to_dot(tree));
  }
  if (!config.export_spec.empty()) {
    const auto colon = config.export_spec.find(':');
    if (colon == std::string::npos) {
      throw ValidationError("--export expects <format>:<path>");
    }
    const ExportFormat fmt =
        export_format_from_string(config.export_spec.substr(0, colon));
    const ConeLP lp = solver_form(net, sdr, config.strategy, config);
    std::ostringstream comment;
    comment << "opfsdr export\nstrategy: " << config.strategy
            << "\nrows: " << lp.num_rows() << "\nvariables: " << lp.dim() << "\n";
    write_file(config.export_spec.substr(colon + 1),
               export_conelp(lp, fmt, comment.str()));
  }

  const StrategyRun run = run_strategy(net, sdr, config.strategy, config);

  if (!config.report_dir.empty()) {
    std::filesystem::create_directories(config.report_dir);
    const std::filesystem::path dir(config.report_dir);
    write_file((dir / "solution.json").string(), solution_json(run).dump(2) + "\n");
    if (run.rank.has_value()) {
      write_file((dir / "rank.json").string(), rank_json(*run.rank).dump(2) + "\n");
    }
    write_file((dir / "feasibility.json").string(),
               feasibility_json(run, net).dump(2) + "\n");
    write_file((dir / "counts.json").string(), counts_json(run).dump(2) + "\n");
  }

  std::cout << "status: " << to_string(run.solution.status) << "\n";
  if (run.solution.status == SolveStatus::Optimal) {
    std::cout << "objective: " << run.solution.objective << "\n";
    if (run.rank.has_value()) {
      std::cout << "min eigenvalue ratio: " << run.rank->min_ratio << "\n";
    }
    if (run.recovery.has_value()) {
      std::cout << "recovered objective: " << run.recovery->objective << "\n";
    } else if (!run.recovery_error.empty()) {
      std::cout << "recovery skipped: " << run.recovery_error << "\n";
    }
  }
  return exit_code_for(run.solution.status);
}

int cmd_bench(const RunConfig& config, const std::vector<std::string>& strategies,
              const std::string& csv_path) {
  if (strategies.empty()) throw ValidationError("bench requires a strategy list");
  const Network net = preprocess(load_network(config), config);
  const SdrProblem sdr = build_sdr(net);

  // Reference bound: plain full conversion (reused if it appears in the list).
  RunConfig ref_config = config;
  ref_config.amalgamate_cliques = false;
  std::optional<StrategyRun> reference;

  std::ostringstream csv;
  csv << "strategy,status,rows,ratio,min_eig_ratio,normalized_objective,objective,"
         "iterations,wall_time_s\n";
  int worst_exit = 0;
  std::vector<StrategyRun> runs;
  for (const std::string& name : strategies) {
    RunConfig rc = config;
    std::string plain = name;
    // "amalgamated-<strategy>" toggles clique amalgamation for this row.
    const std::string prefix = "amalgamated-";
    if (plain.rfind(prefix, 0) == 0) {
      rc.amalgamate_cliques = true;
      plain = plain.substr(prefix.size());
    }
    StrategyRun run = run_strategy(net, sdr, plain, rc);
    run.strategy = name;
    if (name == "full" && !rc.amalgamate_cliques) reference = run;
    runs.push_back(std::move(run));
    worst_exit = std::max(worst_exit, exit_code_for(runs.back().solution.status));
  }
  if (!reference.has_value()) {
    reference = run_strategy(net, sdr, "full", ref_config);
  }
  const double ref_obj = reference->solution.objective;

  for (const StrategyRun& run : runs) {
    const bool ok = run.solution.status == SolveStatus::Optimal;
    csv << run.strategy << "," << to_string(run.solution.status) << ","
        << run.rows_total << ","
        << (run.rows_original > 0
                ? static_cast<double>(run.rows_total) / run.rows_original
                : 0.0)
        << ",";
    if (run.rank.has_value()) csv << run.rank->min_ratio;
    csv << ",";
    if (ok && reference->solution.status == SolveStatus::Optimal && ref_obj > 0.0) {
      csv << normalized_objective(run.solution.objective, ref_obj);
    }
    csv << "," << (ok ? std::to_string(run.solution.objective) : "") << ","
        << run.solution.iterations << "," << run.solution.wall_time_s << "\n";
  }
  if (csv_path.empty() || csv_path == "-") {
    std::cout << csv.str();
  } else {
    write_file(csv_path, csv.str());
  }
  return worst_exit;
}

int cmd_export(const RunConfig& config) {
  if (config.export_spec.empty()) throw ValidationError("export requires --export");
  const auto colon = config.export_spec.find(':');
  if (colon == std::string::npos) throw ValidationError("--export expects <format>:<path>");
  const Network net = preprocess(load_network(config), config);
  const SdrProblem sdr = build_sdr(net);
  const ConeLP lp = solver_form(net, sdr, config.strategy, config);
  const ExportFormat fmt = export_format_from_string(config.export_spec.substr(0, colon));
  std::ostringstream comment;
  comment << "opfsdr export\nstrategy: " << config.strategy
          << "\nrows: " << lp.num_rows() << "\nvariables: " << lp.dim() << "\n";
  write_file(config.export_spec.substr(colon + 1), export_conelp(lp, fmt, comment.str()));
  return 0;
}

}  // namespace opfsdr
