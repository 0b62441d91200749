#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "pamlab/runner.hpp"

int main(int argc, char** argv) {
  using namespace pamlab;
  CLI::App app{"Stochastic heat equation experiments on the torus"};
  app.set_version_flag("--version", std::string(kVersion));

  std::string sub, config_path, out_dir;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  bool strict = false;
  app.add_option("subcommand", sub, "Experiment to run")->required()->check(CLI::IsMember(subcommand_names()));
  app.add_option("--config", config_path, "Config file (key = value)")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Override the master seed");
  app.add_option("--out", out_dir, "Output directory (default $PAMLAB_OUT or ./pamlab-out)");
  app.add_option("--threads", threads, "Worker threads, 0 = all cores; never changes results");
  app.add_flag("--strict", strict, "Treat unknown config keys as errors");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help, --version
    std::cout << Json{{"error", {{"code", "UsageError"}, {"message", e.what()}}}}.dump(2) << '\n';
    return kExitError;
  }

  if (out_dir.empty()) {
    const char* env = std::getenv("PAMLAB_OUT");
    out_dir = env && *env ? env : "pamlab-out";
  }
  try {
    RunOptions opt;
    opt.out_dir = out_dir;
    if (!config_path.empty()) {
      std::ifstream in(config_path, std::ios::binary);
      std::ostringstream ss;
      ss << in.rdbuf();
      opt.config_text = ss.str();
    }
    RunConfig cfg = parse_config(opt.config_text, strict, &opt.warnings);
    for (const auto& w : opt.warnings) std::cerr << "warning: " << w << '\n';
    if (seed) cfg.sim.seed = *seed;
    cfg.sim.threads = threads;
    Json summary;
    int code = run_subcommand(sub, cfg, opt, &summary);
    std::cout << Json{{"subcommand", sub}, {"out", out_dir}, {"exit", code}, {"summary", summary}}.dump(2) << '\n';
    return code;
  } catch (const std::exception& e) {
    std::cout << error_json(e).dump(2) << '\n';
    return kExitError;
  }
}
