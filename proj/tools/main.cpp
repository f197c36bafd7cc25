#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "qhs/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Sampling-based solver and verifier for hemivariational inequality systems"};
  app.set_version_flag("--version", qhs::kToolVersion);
  app.require_subcommand(1);

  std::string config;
  std::string out;
  qhs::RunOverrides ov;
  const std::map<std::string, std::string> about = {
      {"validate", "Load the config and summarize the problem"},
      {"verify", "Check the point given by --at against sampled deviations"},
      {"solve", "Best-response solve (truncated when K is unbounded)"},
      {"oracle", "Exhaustive grid solve"},
      {"audit", "KKM audit over seeded v-lists"},
      {"coercivity", "Sampled coercivity check outside K0"},
  };
  for (const std::string& name : qhs::command_names()) {
    CLI::App* sub = app.add_subcommand(name, about.at(name));
    sub->add_option("--config", config, "Problem config (JSON)")->required();
    sub->add_option("--out", out, "Write the report here instead of stdout");
    sub->add_option("--at", ov.at, "Joint point, e.g. \"(1,1)\"");
    sub->add_option("--method", ov.method, "grid | best_response");
    sub->add_option("--resolution", ov.resolution, "Grid nodes per axis");
    sub->add_option("--tol", ov.tol, "Acceptance tolerance");
    sub->add_option("--seed", ov.seed, "Seed for all sampling");
    sub->add_option("--max-iters", ov.max_iters, "Best-response iteration cap");
    sub->add_option("--step", ov.step, "Best-response relaxation step");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : qhs::kExitConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  const qhs::RunResult result = qhs::run_file(command, config, ov);
  if (!result.diagnostic.empty()) std::cerr << "qhs " << command << ": " << result.diagnostic << "\n";

  const std::string text = qhs::render_report(result.report);
  if (out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(out, std::ios::binary);
    if (!f) {
      std::cerr << "qhs: cannot write " << out << "\n";
      return qhs::kExitConfig;
    }
    f << text;
  }
  return result.exit_code;
}
