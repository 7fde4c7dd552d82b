#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lorasim/engine.hpp"

namespace lorasim {

/// The parameter swept across runs of an experiment.
struct Sweep {
  std::string axis;  // "n_nodes" or "radius_m"
  std::vector<double> values;
};

struct ExperimentSpec {
  std::string preset;  // informational; empty for hand-written specs
  RunConfig base;      // scenario and agent settings shared by all runs
  std::vector<AgentKind> agents;
  std::vector<std::uint64_t> seeds;
  std::optional<Sweep> sweep;
  std::string output_dir = "lorasim-out";

  void validate() const;
};

// Every parser throws ConfigError on unknown keys, wrong types or
// out-of-range values.
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& c);
ExperimentSpec experiment_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentSpec& spec);

EnergyConvention energy_convention_from_string(const std::string& s);
std::string to_string(EnergyConvention e);

/// Built-in experiment grids: "stationary", "fig4", "fig6", "fig7",
/// "fig8-9".
ExperimentSpec preset(const std::string& name);
std::vector<std::string> preset_names();

/// Stationary Table-III-style channels with the given reference losses
/// switching to `after` at `switch_h`.
std::vector<ChannelProfile> flip_profiles(const std::vector<double>& before,
                                          const std::vector<double>& after, double switch_h,
                                          const PathLossParams& base);

/// Seeds for one run derived from an experiment seed.
void apply_seed(ScenarioConfig& s, std::uint64_t seed);

inline constexpr const char* kTimeseriesHeader = "# lorasim timeseries v1";
inline constexpr const char* kTimeseriesColumns = "time_h,sent,received,pdr,ee,utility,regret";

void write_timeseries_csv(const MetricsReport& report, std::ostream& out);
nlohmann::json summary_json(const MetricsReport& report);

}  // namespace lorasim
