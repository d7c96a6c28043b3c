#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pathtest/config.hpp"
#include "pathtest/errors.hpp"
#include "pathtest/pipeline.hpp"
#include "pathtest/util.hpp"

namespace {

using pathtest::config::PipelineConfig;

struct CommonFlags {
  std::string config_path;
  std::string project;
  std::string mock_script;
  std::string from_stage;
  int max_paths = 0;
  int loop_bound = 0;
  double theta = 0.0;
  // One option instance per subcommand; "was it given" checks any of them.
  std::vector<CLI::Option*> max_paths_opts;
  std::vector<CLI::Option*> loop_bound_opts;
  std::vector<CLI::Option*> theta_opts;

  static bool given(const std::vector<CLI::Option*>& opts) {
    for (const auto* o : opts)
      if (o->count()) return true;
    return false;
  }
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "pipeline config JSON");
  cmd->add_option("--project", f.project, "project root to ingest");
  cmd->add_option("--mock-script", f.mock_script,
                  "scripted model responses (forces scripted mode)");
  cmd->add_option("--from", f.from_stage,
                  "resume from this stage using cached artifacts");
  f.max_paths_opts.push_back(cmd->add_option(
      "--max-paths", f.max_paths, "path enumeration cap per function"));
  f.loop_bound_opts.push_back(cmd->add_option(
      "--loop-bound", f.loop_bound, "back-edge traversal bound"));
  f.theta_opts.push_back(cmd->add_option(
      "--theta", f.theta, "helper retrieval similarity threshold"));
}

PipelineConfig make_config(const CommonFlags& f) {
  PipelineConfig cfg;
  if (!f.config_path.empty())
    cfg = pathtest::config::load_config(f.config_path);
  if (!f.project.empty()) cfg.project_root = f.project;
  if (!f.mock_script.empty()) {
    cfg.llm.mode = "scripted";
    cfg.llm.script_path = f.mock_script;
  }
  if (!f.from_stage.empty()) cfg.from_stage = f.from_stage;
  if (CommonFlags::given(f.max_paths_opts)) cfg.max_paths = f.max_paths;
  if (CommonFlags::given(f.loop_bound_opts)) cfg.loop_bound = f.loop_bound;
  if (CommonFlags::given(f.theta_opts)) cfg.theta = f.theta;
  pathtest::config::check_config(cfg);
  return cfg;
}

int run_stages(const CommonFlags& f, const std::string& stop_after) {
  auto cfg = make_config(f);
  auto report = pathtest::pipeline::run_pipeline(cfg, {}, stop_after);
  std::cout << pathtest::pipeline::report_summary(report, "text");
  if (!report.errors.empty()) return 1;
  for (const auto& fn : report.functions)
    if (!fn.errors.empty()) return 1;
  return 0;
}

int show_report(const CommonFlags& f, const std::string& format) {
  auto cfg = make_config(f);
  if (cfg.project_root.empty())
    throw pathtest::ConfigError("report needs --project or a config file");
  auto path = cfg.artifacts_dir / cfg.project_root.filename() /
              "run_report.json";
  auto text = pathtest::util::read_file_if_exists(path);
  if (!text)
    throw pathtest::Error("no run report at " + path.string() +
                          "; run the pipeline first");
  auto report = pathtest::pipeline::report_from_json(*text);
  std::cout << pathtest::pipeline::report_summary(report, format);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scenario-driven C unit test generation"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string report_format = "text";

  struct Cmd {
    const char* name;
    const char* help;
    std::string stop_after;
  };
  // Partial commands stop after the named stage; `run` goes to the end.
  const Cmd cmds[] = {
      {"run", "full pipeline through coverage", ""},
      {"paths", "ingest and enumerate execution paths", "paths"},
      {"opmap", "plan helper usage per function", "opmap"},
      {"synth", "generate per-path tests", "synth"},
      {"validate", "compile, run and repair generated tests", "validate"},
      {"merge", "merge validated tests into one suite", "merge"},
  };
  std::map<std::string, std::string> stop_by_cmd;
  for (const auto& c : cmds) {
    auto* sub = app.add_subcommand(c.name, c.help);
    add_common_flags(sub, flags);
    stop_by_cmd[c.name] = c.stop_after;
  }
  auto* report_cmd = app.add_subcommand("report", "render a stored run report");
  add_common_flags(report_cmd, flags);
  report_cmd->add_option("--format", report_format, "text or json")
      ->check(CLI::IsMember({"text", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;  // bad invocation is a configuration problem
  }

  try {
    auto* sub = app.get_subcommands().front();
    if (sub->get_name() == "report") return show_report(flags, report_format);
    return run_stages(flags, stop_by_cmd.at(sub->get_name()));
  } catch (const pathtest::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const pathtest::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
