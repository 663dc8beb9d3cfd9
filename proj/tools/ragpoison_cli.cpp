#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ragpoison/engine.hpp"
#include "ragpoison/error.hpp"
#include "ragpoison/harness.hpp"

namespace fs = std::filesystem;
using namespace ragpoison;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string mode;
  std::size_t jobs = 0;
  std::vector<std::string> sweeps;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, Common& c, bool require_config) {
  auto* opt = cmd->add_option("--config", c.config, "run config (JSON)");
  if (require_config) opt->required();
  cmd->add_option("--seed", c.seed, "root seed");
  cmd->add_option("--mode", c.mode, "white_box | black_box | fully_black_box");
  cmd->add_option("--jobs", c.jobs, "queries attacked concurrently");
  cmd->add_option("--sweep", c.sweeps, "AXIS=v1,v2,... (pr_sub, n, n_iter, similarity)");
  cmd->add_option("--set", c.sets, "KEY=VALUE config override (dotted key)");
}

RunConfig resolve_config(const Common& c) {
  const fs::path path = fs::absolute(c.config);
  nlohmann::json doc = load_config_document(path);
  for (const auto& s : c.sets) apply_override(doc, s);
  if (c.seed) apply_override(doc, "attack.seed=" + std::to_string(*c.seed));
  if (!c.mode.empty()) apply_override(doc, "attack.mode=\"" + c.mode + "\"");
  if (c.jobs > 0) apply_override(doc, "jobs=" + std::to_string(c.jobs));
  RunConfig config = parse_run_config(doc, path.parent_path());
  for (const auto& s : c.sweeps) {
    SweepAxis axis = parse_sweep_arg(s);
    std::erase_if(config.sweep, [&](const SweepAxis& a) { return a.name == axis.name; });
    config.sweep.push_back(std::move(axis));
  }
  for (const auto& p : sweep_points(config.sweep)) p.apply(config.attack).validate();
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-base poisoning attacks on retrieval-augmented QA"};
  app.require_subcommand(1);

  Common ingest_opts, attack_opts, evaluate_opts, report_opts;
  std::vector<std::string> evaluate_inputs, report_inputs;
  std::string report_output;

  auto* ingest = app.add_subcommand("ingest", "embed the corpus and persist the store");
  add_common(ingest, ingest_opts, true);
  auto* attack = app.add_subcommand("attack", "attack every query and write transcripts");
  add_common(attack, attack_opts, true);
  auto* evaluate = app.add_subcommand("evaluate", "compute metrics from transcripts");
  add_common(evaluate, evaluate_opts, false);
  evaluate->add_option("inputs", evaluate_inputs, "transcript files or run directories");
  auto* report = app.add_subcommand("report", "merge metrics into summary.md and plot.csv");
  add_common(report, report_opts, false);
  report->add_option("inputs", report_inputs, "metrics.csv files or directories");
  report->add_option("--output", report_output, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (ingest->parsed()) {
      cmd_ingest(resolve_config(ingest_opts), std::cout);
    } else if (attack->parsed()) {
      cmd_attack(resolve_config(attack_opts), std::cout);
    } else if (evaluate->parsed()) {
      std::vector<fs::path> inputs(evaluate_inputs.begin(), evaluate_inputs.end());
      if (inputs.empty()) {
        if (evaluate_opts.config.empty()) throw ConfigError("evaluate needs --config or input paths");
        inputs.push_back(resolve_config(evaluate_opts).output_dir);
      }
      cmd_evaluate(inputs, std::cout);
    } else if (report->parsed()) {
      std::vector<fs::path> inputs(report_inputs.begin(), report_inputs.end());
      fs::path out_dir = report_output;
      if (inputs.empty() || out_dir.empty()) {
        if (report_opts.config.empty()) {
          if (inputs.empty()) throw ConfigError("report needs --config or input paths");
          out_dir = ".";
        } else {
          const RunConfig config = resolve_config(report_opts);
          if (inputs.empty()) inputs.push_back(config.output_dir);
          if (out_dir.empty()) out_dir = config.output_dir;
        }
      }
      cmd_report(inputs, out_dir, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return 0;
}
