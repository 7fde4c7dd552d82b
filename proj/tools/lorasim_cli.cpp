// Command-line front end over the C API.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lorasim/lorasim.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitPartial = 2;

using nlohmann::json;

struct OwnedString {
  char* p = nullptr;
  ~OwnedString() { lorasim_string_free(p); }
  [[nodiscard]] std::string str() const { return p ? p : ""; }
};

int report_error(const std::string& what) {
  std::cerr << "lorasim: " << what << ": " << lorasim_last_error() << '\n';
  return kExitConfig;
}

std::optional<std::string> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool spill(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  return static_cast<bool>(out);
}

struct RunArgs {
  std::string config, preset, manifest, out, energy;
  std::vector<std::uint64_t> seeds;
  std::optional<double> duration_h;
  unsigned jobs = 1;
  bool quiet = false;
};

int cmd_run(const RunArgs& a) {
  const int sources = !a.config.empty() + !a.preset.empty() + !a.manifest.empty();
  if (sources != 1) {
    std::cerr << "lorasim: run needs exactly one of --config, --preset, --manifest\n";
    return kExitConfig;
  }
  json spec;
  try {
    if (!a.preset.empty()) {
      spec = {{"preset", a.preset}};
    } else {
      const std::string path = a.config.empty() ? a.manifest : a.config;
      const auto text = slurp(path);
      if (!text) {
        std::cerr << "lorasim: cannot read " << path << '\n';
        return kExitConfig;
      }
      spec = json::parse(*text);
      if (!a.manifest.empty()) spec = spec.at("spec");
    }
  } catch (const json::exception& e) {
    std::cerr << "lorasim: invalid JSON: " << e.what() << '\n';
    return kExitConfig;
  }

  // Expand presets to a full spec so that overrides patch single fields.
  OwnedString full;
  if (lorasim_experiment_normalize(spec.dump().c_str(), &full.p) != LORASIM_OK) {
    return report_error("invalid experiment");
  }
  spec = json::parse(full.str());
  if (!a.seeds.empty()) spec["seeds"] = a.seeds;
  if (!a.out.empty()) spec["output_dir"] = a.out;
  if (!a.energy.empty()) spec["scenario"]["energy_convention"] = a.energy;
  if (a.duration_h) spec["scenario"]["duration_h"] = *a.duration_h;

  std::size_t failed = 0;
  const lorasim_status st =
      lorasim_experiment_run(spec.dump().c_str(), a.jobs, a.quiet ? 0 : 1, &failed);
  if (st == LORASIM_ERR_PARTIAL) {
    std::cerr << "lorasim: " << lorasim_last_error() << '\n';
    return kExitPartial;
  }
  if (st != LORASIM_OK) return report_error("experiment failed");
  if (!a.quiet) std::cerr << "artifacts in " << spec["output_dir"].get<std::string>() << '\n';
  return kExitOk;
}

int cmd_simulate(const std::string& config, const std::string& csv, const std::string& summary) {
  const auto text = slurp(config);
  if (!text) {
    std::cerr << "lorasim: cannot read " << config << '\n';
    return kExitConfig;
  }
  lorasim_report* report = nullptr;
  if (lorasim_run_json(text->c_str(), &report) != LORASIM_OK) return report_error("run failed");
  OwnedString series, sum;
  const bool ok = lorasim_report_timeseries_csv(report, &series.p) == LORASIM_OK &&
                  lorasim_report_summary_json(report, &sum.p) == LORASIM_OK;
  lorasim_report_free(report);
  if (!ok) return report_error("cannot render report");
  if (csv.empty() || csv == "-") {
    std::cout << series.str();
  } else if (!spill(csv, series.str())) {
    std::cerr << "lorasim: cannot write " << csv << '\n';
    return kExitConfig;
  }
  if (!summary.empty() && !spill(summary, sum.str() + "\n")) {
    std::cerr << "lorasim: cannot write " << summary << '\n';
    return kExitConfig;
  }
  return kExitOk;
}

int cmd_summarize(const std::string& dir) {
  OwnedString table;
  if (lorasim_summarize(dir.c_str(), &table.p) != LORASIM_OK) {
    std::cerr << "lorasim: " << lorasim_last_error() << '\n';
    return kExitConfig;
  }
  std::cout << table.str();
  return kExitOk;
}

int cmd_presets(const std::string& name) {
  OwnedString out;
  const lorasim_status st = name.empty() ? lorasim_preset_names(&out.p)
                                         : lorasim_preset_json(name.c_str(), &out.p);
  if (st != LORASIM_OK) return report_error("preset lookup failed");
  if (name.empty()) {
    for (const auto& n : json::parse(out.str())) std::cout << n.get<std::string>() << '\n';
  } else {
    std::cout << out.str() << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LoRaWAN resource-allocation simulator"};
  app.set_version_flag("--version", std::string(lorasim_version()));
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "run an experiment grid and write artifacts");
  run_cmd->add_option("--config", run.config, "experiment spec (JSON)");
  run_cmd->add_option("--preset", run.preset, "built-in experiment name");
  run_cmd->add_option("--manifest", run.manifest, "rerun the spec recorded in a manifest");
  run_cmd->add_option("--seeds", run.seeds, "seed list override")->delimiter(',');
  run_cmd->add_option("-o,--out", run.out, "output directory override");
  run_cmd->add_option("-j,--jobs", run.jobs, "parallel runs")->check(CLI::PositiveNumber);
  run_cmd->add_option("--energy", run.energy, "physical-milliwatt or paper-literal");
  run_cmd->add_option("--duration-h", run.duration_h, "simulated hours per run");
  run_cmd->add_flag("-q,--quiet", run.quiet, "no progress output");

  std::string sim_config, sim_csv, sim_summary;
  auto* sim_cmd = app.add_subcommand("simulate", "single run from a run config");
  sim_cmd->add_option("config", sim_config, "run config (JSON)")->required();
  sim_cmd->add_option("--csv", sim_csv, "time-series output, '-' for stdout");
  sim_cmd->add_option("--summary", sim_summary, "summary JSON output");

  std::string sum_dir;
  auto* sum_cmd = app.add_subcommand("summarize", "print the table of an artifact directory");
  sum_cmd->add_option("dir", sum_dir, "artifact directory")->required();

  std::string preset_name;
  auto* pre_cmd = app.add_subcommand("presets", "list presets or print one as JSON");
  pre_cmd->add_option("name", preset_name, "preset to print");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (*run_cmd) return cmd_run(run);
  if (*sim_cmd) return cmd_simulate(sim_config, sim_csv, sim_summary);
  if (*sum_cmd) return cmd_summarize(sum_dir);
  if (*pre_cmd) return cmd_presets(preset_name);
  return kExitConfig;
}
