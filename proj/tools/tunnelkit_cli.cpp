// Batch front end: tunnelkit <subcommand> --config run.json [--out DIR] [--stages a,b] [--threads N] [--hbar x,y]

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "tunnelkit/config.hpp"
#include "tunnelkit/errors.hpp"
#include "tunnelkit/pipeline.hpp"
#include "tunnelkit/version.hpp"

namespace {

int report_error(const std::string& kind, int code, const std::string& message, const std::string& out_dir) {
  const nlohmann::json j{{"error", kind}, {"exit_code", code}, {"message", message}, {"version", tk::kVersion}};
  std::cerr << j.dump() << "\n";
  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    std::ofstream out(std::filesystem::path(out_dir) / "error.json");
    if (out) out << j.dump(2) << "\n";
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tunnelkit: tunneling splitting for magnetic fields vanishing on a curve"};
  app.set_version_flag("--version", tk::kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir, stages_list, hbar_list;
  int threads = 1;
  app.add_option("--config", config_path, "run configuration (JSON)")->required();
  app.add_option("--out", out_dir, "output directory (overrides output_dir)");
  app.add_option("--stages", stages_list, "comma-separated stages to run instead of the subcommand default");
  app.add_option("--threads", threads, "worker threads (stages currently run single-threaded)")
      ->check(CLI::PositiveNumber);
  app.add_option("--hbar", hbar_list, "comma-separated hbar grid (overrides hbar_grid)");
  for (const char* name : {"band", "geometry", "eikonal", "wkb", "predict", "validate", "all"})
    app.add_subcommand(name, std::string(name) == "all" ? std::string("run every stage")
                                                         : std::string("run the ") + name + " stage");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report_error("config", tk::exit_code(tk::ErrorKind::Config), e.what(), "");
  }

  std::string effective_out = out_dir;
  try {
    tk::RunConfig cfg = tk::load_config(config_path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    effective_out = cfg.output_dir;
    if (!hbar_list.empty()) cfg.hbar_grid = tk::parse_number_list(hbar_list);

    std::vector<std::string> stages = tk::stages_for(app.get_subcommands().front()->get_name());
    if (!stages_list.empty()) {
      stages.clear();
      std::stringstream ss(stages_list);
      std::string s;
      while (std::getline(ss, s, ',')) {
        tk::stages_for(s);  // validates the name
        stages.push_back(s);
      }
    } else if (!cfg.stages.empty() && app.get_subcommands().front()->get_name() == "all") {
      stages = cfg.stages;
    }
    std::filesystem::remove(std::filesystem::path(cfg.output_dir) / "error.json");

    tk::Pipeline pipeline(cfg);
    pipeline.run(stages);
    return 0;
  } catch (const tk::Error& e) {
    return report_error(tk::kind_name(e.kind()), tk::exit_code(e.kind()), e.what(), effective_out);
  } catch (const std::exception& e) {
    return report_error("internal", 1, e.what(), effective_out);
  }
}
