#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "lorasim/bandit.hpp"
#include "lorasim/caasi.hpp"
#include "lorasim/collision.hpp"
#include "lorasim/phy.hpp"

namespace lorasim {

/// Raised for invalid configuration, always before any simulation step.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Position {
  double x = 0.0;
  double y = 0.0;

  [[nodiscard]] double distance_to_origin() const;
  bool operator==(const Position&) const = default;
};

struct ChannelSwitch {
  double time_h = 0.0;
  PathLossParams params;
};

/// Path loss of one channel over time: `initial` until the first switch.
struct ChannelProfile {
  PathLossParams initial;
  std::vector<ChannelSwitch> switches;  // strictly increasing time_h
};

enum class AgentKind { Random, NaiveMab, DLoRa, CDLoRa, Static };

std::string to_string(AgentKind kind);
AgentKind agent_kind_from_string(const std::string& name);

struct ScenarioConfig {
  std::size_t n_nodes = 50;
  double radius_m = 1000.0;
  std::uint64_t topology_seed = 1;
  std::uint64_t traffic_seed = 2;
  std::uint64_t channel_seed = 3;
  double mean_interval_s = 20.0;
  int payload_bytes = 50;
  double duration_h = 2000.0;
  double window_h = 50.0;
  /// One profile per channel; empty means every channel uses `path_loss`.
  std::vector<ChannelProfile> channel_profiles;
  PathLossParams path_loss;
  double alpha1 = 0.5;
  double alpha2 = 0.5;
  std::optional<double> ee_scale;  // default: max windowed EE of the run
  RadioConstants radio;
  CollisionConfig collision;
  EnergyConvention energy = EnergyConvention::PhysicalMilliwatt;
  int probe_packets = 20;
  double pdr_min = 0.25;
  bool include_setup_in_metrics = false;
  /// r* for the regret series; the regret column is absent without it.
  std::optional<double> regret_optimal_reward;
  /// Fixed node coordinates (metres, gateway at the origin) instead of
  /// random placement.
  std::optional<std::vector<Position>> positions;
  bool record_transmissions = false;
  bool record_rewards = false;

  void validate(std::size_t n_channels) const;
};

struct RunConfig {
  ScenarioConfig scenario;
  AgentKind agent = AgentKind::DLoRa;
  AgentConfig agent_config;
  std::optional<LoRaParams> static_params;  // required for AgentKind::Static
  RewardModel static_reward_model = RewardModel::SuccessIndicator;
  std::optional<ChannelPlan> channel_plan;  // seeds CD-LoRa, skipping CAASI

  void validate() const;
};

struct WindowMetrics {
  double start_h = 0.0;
  double end_h = 0.0;
  std::uint64_t sent = 0;
  std::uint64_t received = 0;
  double energy_mj = 0.0;
  double delivered_bits = 0.0;
  double reward_sum = 0.0;
  std::optional<double> pdr;
  double ee = 0.0;
  std::optional<double> utility;
  std::optional<double> regret;  // cumulative, at window end
  std::vector<std::uint64_t> channel_usage;
  std::vector<std::uint64_t> sf_usage;  // indexed like ActionSets::sfs
  std::vector<std::uint64_t> tp_usage;  // indexed like ActionSets::tps_dbm
};

struct NodeTally {
  std::uint64_t sent = 0;
  std::uint64_t received = 0;
  std::uint64_t lost_collision = 0;
  std::uint64_t lost_signal = 0;
  double energy_mj = 0.0;

  [[nodiscard]] std::uint64_t lost() const { return lost_collision + lost_signal; }
};

struct MetricsReport {
  std::string agent;
  ActionSets actions;
  std::vector<WindowMetrics> windows;
  std::vector<NodeTally> nodes;
  std::vector<Position> positions;
  std::uint64_t gateway_received = 0;
  std::uint64_t total_sent = 0;
  double total_energy_mj = 0.0;
  double total_delivered_bits = 0.0;
  double ee_scale = 1.0;
  std::vector<std::uint64_t> channel_usage;
  std::vector<std::uint64_t> sf_usage;
  std::vector<std::uint64_t> tp_usage;
  std::optional<caasi::SetupCost> setup;
  std::optional<ChannelPlan> channel_plan;
  std::optional<LinkQualityMatrix> link_quality;
  std::vector<Transmission> transmissions;       // when record_transmissions
  std::vector<std::vector<float>> node_rewards;  // when record_rewards

  [[nodiscard]] std::optional<double> pdr() const;
  [[nodiscard]] double ee() const;
  [[nodiscard]] const WindowMetrics* final_window() const;
};

namespace engine {

/// Area-uniform points in a disk of the given radius around the gateway.
std::vector<Position> place_nodes(std::size_t n, double radius_m, std::uint64_t seed);

/// Per-channel path loss active at time t (hours).
std::vector<PathLossParams> apply_channel_schedule(const std::vector<ChannelProfile>& profiles,
                                                   double t_h);

/// Received/sent, absent when nothing was sent. Throws std::logic_error
/// when received > sent.
std::optional<double> compute_pdr(std::uint64_t sent, std::uint64_t received);

/// Delivered bits per mJ. Throws std::logic_error for zero energy with
/// nonzero deliveries.
double compute_ee(double received_payload_bits, double total_energy_mj);

double compute_utility(double pdr, double ee, double alpha1, double alpha2, double ee_scale);

/// Profiles for every channel, filling defaults from the scenario.
std::vector<ChannelProfile> resolve_profiles(const ScenarioConfig& s, std::size_t n_channels);

MetricsReport run(const RunConfig& config);

}  // namespace engine

/// A single uncontended link with frozen path loss. Transmissions draw
/// shadowing and noise per packet, exactly as the network engine does.
class FrozenLink {
 public:
  FrozenLink(double distance_m, std::vector<PathLossParams> per_channel, RadioConstants radio,
             std::uint64_t seed);

  TransmissionOutcome transmit(const LoRaParams& p);

  /// Exact delivery probability by quadrature over the shadowing draw.
  [[nodiscard]] double success_probability(const LoRaParams& p) const;

  /// E[reward] of a fixed super arm under the given reward model.
  [[nodiscard]] double expected_reward(const LoRaParams& p, RewardModel model,
                                       const AgentConfig& cfg) const;

 private:
  double distance_m_;
  std::vector<PathLossParams> per_channel_;
  RadioConstants radio_;
  std::mt19937_64 rng_;
};

}  // namespace lorasim
