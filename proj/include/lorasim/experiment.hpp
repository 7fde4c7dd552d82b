#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lorasim/config.hpp"

namespace lorasim {

inline constexpr const char* kManifestFormat = "lorasim-manifest/1";
inline constexpr const char* kAggregateHeader = "# lorasim aggregate v1";

struct RunRecord {
  std::string stem;  // file name without extension, under runs/
  AgentKind agent = AgentKind::DLoRa;
  std::uint64_t seed = 0;
  std::optional<double> sweep_value;
  bool ok = false;
  std::string error;
};

struct ExperimentResult {
  std::string output_dir;
  std::string config_hash;
  std::vector<RunRecord> runs;

  [[nodiscard]] std::size_t failures() const;
};

/// Final-window statistics of one (agent, sweep point) cell across seeds.
struct SummaryRow {
  std::string agent;
  std::optional<double> sweep_value;
  std::size_t seeds = 0;
  double sent_mean = 0.0;
  double received_mean = 0.0;
  std::optional<double> pdr_mean, pdr_std;
  double ee_mean = 0.0, ee_std = 0.0;
  std::optional<double> regret_mean;
};

struct Summary {
  std::optional<std::string> sweep_axis;
  std::vector<SummaryRow> rows;
};

/// Raised by summarize; the message lists every missing or unreadable file.
class ArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string code_version();

/// 64-bit FNV-1a of the canonical JSON form, as 16 hex digits.
std::string config_hash(const ExperimentSpec& spec);

std::string run_stem(AgentKind agent, std::uint64_t seed, const std::optional<Sweep>& sweep,
                     std::optional<double> value);

/// The concrete configuration of one grid cell.
RunConfig expand_run(const ExperimentSpec& spec, AgentKind agent, std::uint64_t seed,
                     std::optional<double> sweep_value);

/// Runs every (agent, seed, sweep point) with up to `jobs` threads. A failed
/// run is recorded in the manifest and never discards the others.
ExperimentResult run_experiment(const ExperimentSpec& spec, unsigned jobs = 1,
                                std::ostream* log = nullptr);

/// Writes `content` to `path` through a temporary file and a rename.
void write_file_atomic(const std::string& path, const std::string& content);

Summary summarize(const std::string& dir);
void print_summary(const Summary& summary, std::ostream& out);
void write_aggregate_csv(const Summary& summary, std::ostream& out);

}  // namespace lorasim
