#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "opfsdr/errors.hpp"
#include "opfsdr/pipeline.hpp"

namespace {

struct CliState {
  opfsdr::RunConfig config;
  std::string config_path;
  std::vector<std::string> bench_strategies;
  std::string bench_csv = "-";
};

void add_common_options(CLI::App* cmd, CliState& state) {
  opfsdr::RunConfig& config = state.config;
  cmd->add_option("-i,--input", config.input_path, "Input case file")->required();
  cmd->add_option("--format", config.format, "Input format: matpower|json|auto");
  cmd->add_option("--flows", config.flows,
                  "Flow-limited set: 'all' (finite limits), 'none', or a list file");
  cmd->add_option("--strategy", config.strategy,
                  "full|band|arrow|sparse|diagonal|unconverted|soc-minors");
  cmd->add_option("--rho", config.rho, "Half-bandwidth / column count for band/arrow");
  cmd->add_flag("--amalgamate", config.amalgamate_cliques, "Merge cliques");
  cmd->add_option("--tfill", config.t_fill, "Amalgamation fill threshold");
  cmd->add_option("--tsize", config.t_size, "Amalgamation supernode threshold");
  cmd->add_option("--tol", config.solver.tolerance, "Solver tolerance");
  cmd->add_option("--max-iterations", config.solver.max_iterations);
  cmd->add_flag("--no-scale", "Disable the data scaling heuristic");
  cmd->add_option("--fix-gen-tol", config.fix_gen_tol,
                  "Generator range below which power is fixed");
  cmd->add_option("--min-resistance", config.min_resistance, "Minimum line resistance");
  cmd->add_option("--reference-bus", config.reference_bus,
                  "Internal bus index pinned to angle zero");
  cmd->add_option("--export", config.export_spec, "Write the solver problem: <fmt>:<path>");
  cmd->add_option("--dump-tree", config.dump_tree_path, "Write the clique tree as DOT");
  cmd->add_flag("-v,--verbose", config.solver.verbose, "Per-iteration solver output");
  cmd->add_option("--config", state.config_path,
                  "Read options from a key=value file (flags win)");
}

// key=value configuration file; '#' comments and [sections] are skipped.
// Command-line flags take precedence over file values.
void apply_config_file(CLI::App* cmd, CliState& state) {
  if (state.config_path.empty()) return;
  std::ifstream in(state.config_path);
  if (!in) throw opfsdr::ValidationError("cannot read config \"" + state.config_path + "\"");
  opfsdr::RunConfig& config = state.config;

  auto given = [&](const std::string& flag) { return cmd->count(flag) > 0; };
  auto unquote = [](std::string v) {
    if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') ||
                          (v.front() == '\'' && v.back() == '\''))) {
      v = v.substr(1, v.size() - 2);
    }
    return v;
  };
  auto truthy = [](const std::string& v) {
    return v == "1" || v == "true" || v == "yes" || v == "on";
  };

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string key, value;
    {
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        std::istringstream probe(line);
        std::string token;
        if (!(probe >> token) || token.front() == '[') continue;  // blank or section
        throw opfsdr::ValidationError("config line " + std::to_string(lineno) +
                                      ": expected key=value");
      }
      auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        const auto b = s.find_last_not_of(" \t\r");
        return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
      };
      key = trim(line.substr(0, eq));
      value = unquote(trim(line.substr(eq + 1)));
    }
    if (key.empty()) continue;

    if (key == "input") {
      if (!given("--input")) config.input_path = value;
    } else if (key == "format") {
      if (!given("--format")) config.format = value;
    } else if (key == "flows") {
      if (!given("--flows")) config.flows = value;
    } else if (key == "strategy") {
      if (!given("--strategy")) config.strategy = value;
    } else if (key == "rho") {
      if (!given("--rho")) config.rho = std::stoi(value);
    } else if (key == "amalgamate") {
      if (!given("--amalgamate")) config.amalgamate_cliques = truthy(value);
    } else if (key == "tfill") {
      if (!given("--tfill")) config.t_fill = std::stoi(value);
    } else if (key == "tsize") {
      if (!given("--tsize")) config.t_size = std::stoi(value);
    } else if (key == "tol") {
      if (!given("--tol")) config.solver.tolerance = std::stod(value);
    } else if (key == "max-iterations") {
      if (!given("--max-iterations")) config.solver.max_iterations = std::stoi(value);
    } else if (key == "no-scale") {
      if (!given("--no-scale")) config.scale = !truthy(value);
    } else if (key == "fix-gen-tol") {
      if (!given("--fix-gen-tol")) config.fix_gen_tol = std::stod(value);
    } else if (key == "min-resistance") {
      if (!given("--min-resistance")) config.min_resistance = std::stod(value);
    } else if (key == "reference-bus") {
      if (!given("--reference-bus")) config.reference_bus = std::stoi(value);
    } else if (key == "export") {
      if (!given("--export")) config.export_spec = value;
    } else if (key == "dump-tree") {
      if (!given("--dump-tree")) config.dump_tree_path = value;
    } else if (key == "report") {
      if (cmd->get_option_no_throw("--report") != nullptr && !given("--report")) {
        config.report_dir = value;
      }
    } else if (key == "strategies") {
      if (cmd->get_option_no_throw("--strategies") != nullptr && !given("--strategies")) {
        std::istringstream ls(value);
        std::string item;
        state.bench_strategies.clear();
        while (std::getline(ls, item, ',')) state.bench_strategies.push_back(item);
      }
    } else if (key == "csv") {
      if (cmd->get_option_no_throw("--csv") != nullptr && !given("--csv")) {
        state.bench_csv = value;
      }
    } else {
      throw opfsdr::ValidationError("config line " + std::to_string(lineno) +
                                    ": unknown key \"" + key + "\"");
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semidefinite relaxations of AC optimal power flow via chordal conversion"};
  app.require_subcommand(1);

  CliState run_state;
  CLI::App* run = app.add_subcommand("run", "Solve one relaxation and write reports");
  add_common_options(run, run_state);
  run->add_option("--report", run_state.config.report_dir, "Directory for report files");

  CliState bench_state;
  CLI::App* bench = app.add_subcommand("bench", "Compare consistency strategies");
  add_common_options(bench, bench_state);
  bench->add_option("--strategies", bench_state.bench_strategies,
                    "Comma-separated list; prefix 'amalgamated-' merges cliques")
      ->delimiter(',');
  bench->add_option("--csv", bench_state.bench_csv, "CSV output path ('-' = stdout)");

  CliState export_state;
  CLI::App* exp = app.add_subcommand("export", "Write the solver problem to a file");
  add_common_options(exp, export_state);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      apply_config_file(run, run_state);
      run_state.config.scale = run->count("--no-scale") == 0 && run_state.config.scale;
      return opfsdr::cmd_run(run_state.config);
    }
    if (bench->parsed()) {
      apply_config_file(bench, bench_state);
      bench_state.config.scale =
          bench->count("--no-scale") == 0 && bench_state.config.scale;
      if (bench_state.bench_strategies.empty()) {
        std::cerr << "error: bench requires --strategies\n";
        return 1;
      }
      return opfsdr::cmd_bench(bench_state.config, bench_state.bench_strategies,
                               bench_state.bench_csv);
    }
    if (exp->parsed()) {
      apply_config_file(exp, export_state);
      export_state.config.scale =
          exp->count("--no-scale") == 0 && export_state.config.scale;
      return opfsdr::cmd_export(export_state.config);
    }
  } catch (const opfsdr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
