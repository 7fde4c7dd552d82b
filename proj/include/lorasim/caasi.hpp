#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lorasim/bandit.hpp"
#include "lorasim/phy.hpp"

namespace lorasim {

/// Gateway-side record of collection-phase receptions, node x channel.
class LinkQualityMatrix {
 public:
  LinkQualityMatrix() = default;
  LinkQualityMatrix(std::size_t n_nodes, std::size_t n_channels);

  [[nodiscard]] std::size_t nodes() const { return n_nodes_; }
  [[nodiscard]] std::size_t channels() const { return n_channels_; }

  /// Folds one received packet into the running dBm mean.
  void record(std::size_t node, std::size_t channel, double rssi_dbm);
  /// Overwrites a cell; samples == 0 clears it.
  void set(std::size_t node, std::size_t channel, double mean_rssi_dbm, std::uint64_t samples);

  [[nodiscard]] std::uint64_t samples(std::size_t node, std::size_t channel) const;
  [[nodiscard]] std::optional<double> rssi(std::size_t node, std::size_t channel) const;

 private:
  [[nodiscard]] std::size_t cell(std::size_t node, std::size_t channel) const;

  std::size_t n_nodes_ = 0;
  std::size_t n_channels_ = 0;
  std::vector<double> mean_rssi_;
  std::vector<std::uint64_t> samples_;
};

struct ChannelPlan {
  std::vector<std::size_t> assignment;  // node -> channel index
  std::vector<std::vector<int>> pruned_sf;  // node -> surviving SFs, ascending
};

struct CollectionSlot {
  std::size_t slot = 0;
  std::size_t node = 0;
  std::size_t channel = 0;

  bool operator==(const CollectionSlot&) const = default;
};

namespace caasi {

/// TDMA collection order: batches of |CF| nodes, each batch rotating
/// through every channel so a node id uses channel (id + j) mod |CF| in
/// round j.
std::vector<CollectionSlot> collection_schedule(std::size_t n_nodes, std::size_t n_channels);

/// Sample-weighted mean RSSI on the channel, -inf when nothing was heard.
double channel_quality(const LinkQualityMatrix& m, std::size_t channel);

/// Negated mean RSSI over all of the node's receptions; +inf when never
/// heard. Larger means a weaker link.
double node_vulnerability(const LinkQualityMatrix& m, std::size_t node);

/// Channels by quality (ties: lower index first).
std::vector<std::size_t> rank_channels(const LinkQualityMatrix& m);
/// Nodes by vulnerability, most vulnerable first (ties: lower id first).
std::vector<std::size_t> rank_nodes(const LinkQualityMatrix& m);

/// Equi-sized contiguous groups of ranked nodes; group k gets the k-th
/// best channel and the first N mod |CF| groups take one extra node.
std::vector<std::size_t> allocate_channels(const LinkQualityMatrix& m);

/// SFs whose probe PDR reaches pdr_min, falling back to the largest SF.
/// Input pairs are (sf, pdr).
std::vector<int> prune_sf_actions(std::span<const std::pair<int, double>> probe_pdr,
                                  double pdr_min);

struct Options {
  int probe_packets = 20;
  double pdr_min = 0.25;
  int payload_bytes = 50;
  RadioConstants radio;
  EnergyConvention energy = EnergyConvention::PhysicalMilliwatt;
};

struct SetupCost {
  std::uint64_t sent = 0;
  std::uint64_t received = 0;
  double energy_mj = 0.0;
  double duration_s = 0.0;
};

struct Result {
  LinkQualityMatrix matrix;
  ChannelPlan plan;
  SetupCost cost;
  std::vector<std::vector<std::pair<int, double>>> probe_pdr;  // per node
};

/// Transmits one packet and returns its RSSI if the gateway decoded it.
using LinkProbe = std::function<std::optional<double>(std::size_t node, std::size_t channel,
                                                      int sf, int tp_dbm, double time_s)>;

/// Runs collection, allocation and SF pruning against a link model.
Result run(std::size_t n_nodes, const ActionSets& sets, const Options& options,
           const LinkProbe& probe);

}  // namespace caasi

/// CUCB over (pruned SF) x TP on a channel fixed by the plan.
class CDLoRaAgent final : public Agent {
 public:
  CDLoRaAgent(AgentConfig cfg, std::size_t channel, std::vector<int> pruned_sfs);

  LoRaParams select() override;
  double observe(const TransmissionOutcome& outcome) override;
  [[nodiscard]] RewardModel reward_model() const override { return RewardModel::SfTp; }
  [[nodiscard]] std::string_view kind() const override { return "cd-lora"; }
  [[nodiscard]] nlohmann::json state() const override;
  void restore(const nlohmann::json& state) override;

  [[nodiscard]] std::size_t channel() const { return channel_; }
  [[nodiscard]] const std::vector<int>& sf_actions() const { return sfs_; }
  [[nodiscard]] std::uint64_t steps() const { return t_; }

 private:
  AgentConfig cfg_;
  std::size_t channel_;
  std::vector<int> sfs_;
  ArmTable sf_, tp_;
  std::uint64_t t_ = 0;
};

nlohmann::json to_json(const ChannelPlan& plan);
ChannelPlan channel_plan_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LinkQualityMatrix& m);
LinkQualityMatrix link_quality_from_json(const nlohmann::json& j);

}  // namespace lorasim
