// morse: command-line driver for the Morse complex and de Rham bridge.
//
//   morse critical   <scenario>
//   morse instantons <scenario>
//   morse cohomology <scenario>
//   morse verify     <scenario> --check cup,leibniz
//   morse run        <scenario> --out report.json
//   morse scenarios  <dir>
//
// Exit codes: 0 pass, 1 verification failure, 2 scenario rejection,
// 3 internal error.

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>

#include "morse/report.hpp"

namespace {

using namespace morse;

void add_run_options(CLI::App* cmd, RunConfig& c, std::string& checks, std::string& out) {
  cmd->add_option("scenario", c.scenario, "builtin scenario name or scenario JSON file")->required();
  cmd->add_option("--tol-ode", c.tol_ode, "absolute integrator tolerance (relative is ten times larger)");
  cmd->add_option("--tol-newton", c.tol_newton, "Newton residual tolerance for rest points");
  cmd->add_option("--tol-quad", c.tol_quad, "target accuracy of a single integral");
  cmd->add_option("--tol-verify", c.tol_verify, "tolerance for identity and class checks");
  cmd->add_option("--sweep", c.sweep, "confirmation samples per gap-2 arc");
  cmd->add_option("--order", c.quad_order, "Gauss-Legendre nodes per panel");
  cmd->add_option("--seed", c.seed, "seed for sampled checks and random forms");
  cmd->add_option("--samples", c.samples, "random forms per degree in the identity checks");
  cmd->add_option("--check", checks, "comma separated: delta2, stokes, leibniz, cup, detect or all");
  cmd->add_option("--out", out, "write the JSON report here (default: stdout)");
  cmd->add_flag("--no-timestamp", [&c](std::int64_t) { c.timestamp = false; }, "leave the timestamp field null");
}

int run_command(RunConfig config, const std::string& checks, const std::string& out, bool table) {
  try {
    if (!checks.empty()) config.checks = parse_checks(checks);
    config.validate();
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRejected;
  }
  config.threads = threads_from_environment();
  RunResult r = run_pipeline(config);
  std::string text = r.report.dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(out, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + out);
    f << text;
    if (!f) throw std::runtime_error("write to " + out + " failed");
  }
  if (table) std::cerr << r.summary;
  if (r.exit_code == kRejected) {
    const Json& rej = r.report["rejection"];
    std::cerr << "rejected at " << rej["stage"].get<std::string>() << ": " << rej["reason"].get<std::string>() << '\n';
  }
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Morse complexes of Lyapunov flows and their de Rham bridge"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  RunConfig config;
  std::string checks, out, dir;
  bool quiet = false;

  struct Sub {
    const char* name;
    const char* help;
    Stage stage;
  };
  const Sub subs[] = {
      {"critical", "locate and classify rest points", Stage::Critical},
      {"instantons", "enumerate connecting orbits and corner strata", Stage::Instantons},
      {"cohomology", "build the Morse complex and its Betti numbers", Stage::Cohomology},
      {"verify", "run the identity checks selected by --check", Stage::Verify},
      {"run", "the whole pipeline with a summary table", Stage::Verify},
  };
  std::vector<std::pair<CLI::App*, Stage>> commands;
  for (const Sub& s : subs) {
    CLI::App* cmd = app.add_subcommand(s.name, s.help);
    add_run_options(cmd, config, checks, out);
    cmd->add_flag("--quiet", quiet, "no summary table on stderr");
    commands.emplace_back(cmd, s.stage);
  }
  CLI::App* emit = app.add_subcommand("scenarios", "write the builtin scenario files");
  emit->add_option("dir", dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kRejected;
  }

  try {
    if (emit->parsed()) {
      for (const auto& p : emit_scenarios(dir)) std::cout << p.string() << '\n';
      return kPass;
    }
    for (const auto& [cmd, stage] : commands) {
      if (!cmd->parsed()) continue;
      config.stage = stage;
      return run_command(config, checks, out, !quiet);
    }
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
  return kInternalError;
}
