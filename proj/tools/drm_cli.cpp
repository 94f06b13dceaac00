// drm: command-line driver for the cone experiments.
//
//   drm <command> --config FILE [--out DIR] [--seed N] [--threads N]
//
// Exit codes: 0 all hard verdicts pass, 1 a hard verdict fails,
// 2 invalid config or arguments, 3 non-finite value abort.

#include "drm/experiments.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNan = 3;

drm::json read_config(const std::string& path) {
  std::ifstream in(path);
  if(!in) throw drm::ConfigError("cannot open config '" + path + "'");
  try {
    return drm::json::parse(in, nullptr, true, true);
  } catch(const drm::json::parse_error& e) {
    throw drm::ConfigError("parse error in '" + path + "': " + e.what());
  }
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if(!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

void write_outputs(const drm::RunReport& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / "report.json", r.to_json(true).dump(2) + "\n");
  for(const auto& [name, t]: r.tables()) write_file(dir / (name + ".csv"), t.str());
}

void print_verdicts(const drm::RunReport& r) {
  for(const auto& v: r.verdicts()) {
    std::cout << (v.pass ? "PASS " : (v.hard ? "FAIL " : "WARN ")) << v.name << "  observed "
              << drm::format_number(v.observed) << ' ' << v.relation << ' ' << drm::format_number(v.limit) << '\n';
  }
  std::cout << (r.pass() ? "OK" : "FAILED") << "  " << r.command() << "  (" << drm::format_number(r.elapsed())
            << " s)\n";
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Correlation-function experiments on the cone of discrete Radon measures"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  for(const auto& name: drm::experiment_commands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--out", out_dir, "output directory for report.json and CSV tables");
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--threads", threads, "worker threads (0 = hardware)");
  }
  try {
    app.parse(argc, argv);
  } catch(const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch(const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    drm::set_thread_count(threads);
    const auto config = read_config(config_path);
    const auto report = drm::run_experiment(command, config, seed);
    if(!out_dir.empty()) write_outputs(report, out_dir);
    print_verdicts(report);
    return report.pass() ? kExitOk : kExitFail;
  } catch(const drm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch(const drm::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch(const drm::NumericalAbort& e) {
    std::cerr << "numerical abort: " << e.what() << '\n';
    return kExitNan;
  }
}
