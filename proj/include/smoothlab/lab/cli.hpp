#pragma once

// Command-line front end. Settings are layered: defaults, then the
// --config file, then flags given on the command line.
//
// Exit codes: 0 success, 1 configuration error, 2 parameters outside the
// hypothesis regime of a bound, 3 size limit exceeded, 4 replay mismatch.

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "smoothlab/lab/config.hpp"
#include "smoothlab/lab/experiments.hpp"
#include "smoothlab/lab/report.hpp"
#include "smoothlab/lab/serialize.hpp"

namespace smoothlab::lab {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitRegime = 2, kExitSize = 3, kExitMismatch = 4 };

inline int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::out_of_regime: return kExitRegime;
    case ErrorKind::size_limit: return kExitSize;
    default: return kExitConfig;
  }
}

namespace detail {

inline void write_output(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(f), ErrorKind::invalid_input, "cannot open '" + path + "' for writing");
  f << text;
  require(static_cast<bool>(f), ErrorKind::invalid_input, "failed writing '" + path + "'");
}

inline std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(static_cast<bool>(f), ErrorKind::invalid_input, "cannot open '" + path + "'");
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

inline std::string join(const std::vector<std::string>& parts) {
  std::string s;
  for (std::size_t i = 0; i < parts.size(); ++i) s += (i ? "," : "") + parts[i];
  return s;
}

/// Raw flag text for one experiment subcommand.
struct ExperimentFlags {
  ExperimentKind kind = ExperimentKind::matrix_tail;
  CLI::App* app = nullptr;
  std::map<std::string, std::string> scalars;
  std::map<std::string, std::vector<std::string>> lists;
  std::string config_path;
  bool per_trial = false;
  bool exhaustive = false;
};

inline void add_experiment_options(ExperimentFlags& f) {
  CLI::App& a = *f.app;
  for (const char* key : {"n", "d", "trials", "seed", "out", "format", "threads", "rule", "cap", "measure"})
    a.add_option(std::string("--") + key, f.scalars[key]);
  for (const char* key : {"sigma", "threshold", "center"})
    a.add_option(std::string("--") + key, f.lists[key])->expected(1, -1);
  a.add_option("--config", f.config_path, "key=value settings file; flags override it");
  a.add_flag("--per-trial", f.per_trial, "include per-trial records (JSON only)");
  a.add_flag("--exhaustive", f.exhaustive, "enumerate every sign matrix instead of sampling");
  a.get_option("--n")->description("number of points or constraints");
  a.get_option("--d")->description("dimension");
  a.get_option("--sigma")->description("standard deviations (comma or space separated)");
  a.get_option("--threshold")->description("tail thresholds (comma or space separated)");
  a.get_option("--trials")->description("Monte Carlo trials");
  a.get_option("--seed")->description("master seed");
  a.get_option("--center")->description("zero, ones, e1, klee-minty or a file path");
  a.get_option("--out")->description("output path (stdout when omitted)");
  a.get_option("--format")->description("csv or json");
  a.get_option("--threads")->description("worker threads, 0 for one per core");
  a.get_option("--rule")->description("lowest-index, most-violated or random-violated");
  a.get_option("--cap")->description("perceptron iteration cap");
  a.get_option("--measure")->description("simplex_pivots or perceptron_iterations");
}

inline ExperimentConfig build_config(const ExperimentFlags& f) {
  ExperimentConfig cfg;
  cfg.kind = f.kind;
  if (!f.config_path.empty())
    for (const auto& [key, value] : read_config_file(f.config_path)) apply_setting(cfg, key, value);
  for (const auto& [key, value] : f.scalars)
    if (f.app->get_option("--" + key)->count() > 0) apply_setting(cfg, key, value);
  for (const auto& [key, values] : f.lists)
    if (f.app->get_option("--" + key)->count() > 0) apply_setting(cfg, key, join(values));
  if (f.per_trial) cfg.per_trial = true;
  if (f.exhaustive) cfg.exhaustive = true;
  if (cfg.per_trial)
    require(cfg.format == OutputFormat::json, ErrorKind::invalid_input, "--per-trial needs --format json");
  return cfg;
}

}  // namespace detail

inline int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Smoothed-analysis experiment harness"};
  app.name("smoothlab");
  app.require_subcommand(1);

  std::vector<detail::ExperimentFlags> experiments;
  experiments.reserve(std::size(kAllKinds));
  for (ExperimentKind k : kAllKinds) {
    detail::ExperimentFlags f;
    f.kind = k;
    f.app = app.add_subcommand(std::string(command_name(k)), "run the " + std::string(to_string(k)) + " experiment");
    experiments.push_back(std::move(f));
  }
  for (auto& f : experiments) detail::add_experiment_options(f);

  std::string lp_path, lp_out, lp_format = "json";
  CLI::App* solve_cmd = app.add_subcommand("solve-lp", "solve max z^T x s.t. Ax <= b from an LP file");
  solve_cmd->add_option("file", lp_path, "LP file: 'n d', n rows 'a_1 .. a_d b', then z")->required();
  solve_cmd->add_option("--out", lp_out, "output path (stdout when omitted)");
  solve_cmd->add_option("--format", lp_format, "json or csv");

  std::string pc_path, pc_out, pc_rule = "lowest-index";
  std::uint64_t pc_cap = 1000000, pc_seed = 0;
  CLI::App* perc_cmd = app.add_subcommand("run-perceptron", "run the perceptron on an instance file");
  perc_cmd->add_option("file", pc_path, "instance file: 'n d' then n rows")->required();
  perc_cmd->add_option("--out", pc_out, "output path (stdout when omitted)");
  perc_cmd->add_option("--rule", pc_rule, "lowest-index, most-violated or random-violated");
  perc_cmd->add_option("--cap", pc_cap, "iteration cap");
  perc_cmd->add_option("--seed", pc_seed, "seed for the random-violated rule");

  std::string verify_path;
  CLI::App* verify_cmd = app.add_subcommand("verify", "recompute a JSON report from its per-trial records");
  verify_cmd->add_option("file", verify_path, "report written with --format json --per-trial")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    for (auto& f : experiments) {
      if (!f.app->parsed()) continue;
      const ExperimentConfig cfg = detail::build_config(f);
      const Report report = run_experiment(cfg);
      for (const auto& w : report.warnings) err << "warning: " << w << '\n';
      detail::write_output(cfg.format == OutputFormat::json ? render_json(report) : render_csv(report),
                           cfg.output_path, out);
      return kExitOk;
    }

    if (solve_cmd->parsed()) {
      const OutputFormat fmt = parse_format(lp_format);
      std::ifstream in(lp_path);
      require(static_cast<bool>(in), ErrorKind::invalid_input, "cannot open '" + lp_path + "'");
      const LinearProgram lp = read_linear_program(in);
      const SolveResult res = solve(lp);
      std::string text;
      if (fmt == OutputFormat::json) {
        text = solve_result_to_json(res).dump(2) + "\n";
      } else {
        text = "status,value,pivot_count,degenerate\n" + std::string(to_string(res.status)) + "," +
               (res.status == LpStatus::optimal ? format_double(res.value) : "") + "," +
               std::to_string(res.trace.pivot_count) + "," + (res.trace.degenerate ? "true" : "false") + "\n";
      }
      detail::write_output(text, lp_out, out);
      return kExitOk;
    }

    if (perc_cmd->parsed()) {
      std::ifstream in(pc_path);
      require(static_cast<bool>(in), ErrorKind::invalid_input, "cannot open '" + pc_path + "'");
      const PerceptronInstance inst = read_perceptron_instance(in);
      const Margin margin = wiggle_room_detail(inst);
      const PerceptronRun run = run_perceptron(inst, SeedSpec{pc_seed, 0}, pc_cap, parse_selection_rule(pc_rule));
      detail::write_output(perceptron_run_to_json(run, margin).dump(2) + "\n", pc_out, out);
      return kExitOk;
    }

    if (verify_cmd->parsed()) {
      const ReplayResult r = verify_report(detail::read_text(verify_path));
      if (r.matches) {
        out << "replay matches " << verify_path << '\n';
        return kExitOk;
      }
      err << "replay mismatch in:";
      for (const auto& s : r.mismatched_sections) err << ' ' << s;
      err << '\n';
      return kExitMismatch;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace smoothlab::lab
