#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lorasim/phy.hpp"

namespace lorasim {

/// Pull count and running mean reward of one arm.
struct ArmStats {
  std::uint64_t pulls = 0;
  double mean_reward = 0.0;

  bool operator==(const ArmStats&) const = default;
};

struct AgentConfig {
  double exploration_weight = 2.0;  // c
  double sf_metric_factor = 1.0;    // xi
  double tp_metric_factor = 1.8;    // eta
  ActionSets actions;

  void validate() const;
};

struct TransmissionOutcome {
  bool success = false;
  LoRaParams params_used;
};

/// Which per-transmission reward an agent earns; used to score learners
/// and static policies on the same scale.
enum class RewardModel {
  SuccessIndicator,  // NaiveMAB, Random
  CfSfTp,            // D-LoRa: r_cf + r_sf + r_tp
  SfTp,              // CD-LoRa: r_sf + r_tp
};

namespace bandit {

/// One incremental-mean step; the divisor is the post-increment count so
/// the mean after n rewards is their arithmetic mean.
ArmStats update_mean(ArmStats stats, double reward);

/// UCB1 estimate mean + c*sqrt(ln t / (2 pulls)). Returns nullopt for an
/// unpulled arm, which must be explored unconditionally.
std::optional<double> ucb_estimate(const ArmStats& stats, std::uint64_t t, double c);

/// Exploration bonus alone (ucb_estimate minus the mean).
double ucb_bonus(std::uint64_t pulls, std::uint64_t t, double c);

/// Index of the first unpulled arm, else the UCB argmax with ties to the
/// lowest index.
std::size_t ucb_argmax(std::span<const ArmStats> arms, std::uint64_t t, double c);

/// Flat index of a super arm in lexicographic (channel, sf, tp) order.
std::size_t super_arm_index(const LoRaParams& p, const ActionSets& sets);
LoRaParams super_arm_at(std::size_t index, const ActionSets& sets);

/// Argmax over all super arms of their UCB estimate.
LoRaParams naive_select(std::span<const ArmStats> super_arm_stats, std::uint64_t t, double c,
                        const ActionSets& sets);

double reward_cf(const TransmissionOutcome& outcome);
double reward_sf(const TransmissionOutcome& outcome, double xi, std::span<const int> sf_set);
double reward_tp(const TransmissionOutcome& outcome, double eta, std::span<const int> tp_set);

/// Per-transmission reward under a given model, summing the base-arm
/// rewards for the decomposed models.
double super_arm_reward(RewardModel model, const TransmissionOutcome& outcome,
                        const AgentConfig& cfg);

/// Joint argmax of the summed base-arm estimates; decomposes into one
/// argmax per dimension.
LoRaParams cucb_select(std::span<const ArmStats> cf_stats, std::span<const ArmStats> sf_stats,
                       std::span<const ArmStats> tp_stats, std::uint64_t t, double c,
                       const ActionSets& sets);

/// R(t) = t r* - sum of the first t rewards, for every prefix.
std::vector<double> cumulative_regret(std::span<const double> rewards, double optimal_mean);

}  // namespace bandit

/// Arm statistics plus a cached 1/sqrt(2 T) per arm so a selection costs
/// one multiply-add per arm.
class ArmTable {
 public:
  ArmTable() = default;
  explicit ArmTable(std::size_t n_arms);

  [[nodiscard]] std::size_t size() const { return stats_.size(); }
  [[nodiscard]] const ArmStats& operator[](std::size_t i) const { return stats_[i]; }
  [[nodiscard]] std::span<const ArmStats> stats() const { return stats_; }

  void credit(std::size_t arm, double reward);
  void set(std::size_t arm, ArmStats stats);
  [[nodiscard]] std::size_t select(std::uint64_t t, double c) const;
  /// select() with the bonus numerator c*sqrt(ln t) precomputed.
  [[nodiscard]] std::size_t select_scaled(double scale) const;

 private:
  std::vector<ArmStats> stats_;
  std::vector<double> means_;
  std::vector<double> inv_sqrt_two_pulls_;
  std::size_t unexplored_ = 0;
  mutable std::size_t first_unexplored_hint_ = 0;
  mutable std::vector<double> scratch_;
};

/// A per-node decision maker. select() picks the parameters of the next
/// packet and observe() credits the outcome of the previous one.
class Agent {
 public:
  virtual ~Agent() = default;

  virtual LoRaParams select() = 0;
  /// Credits the outcome and returns the reward earned under reward_model().
  virtual double observe(const TransmissionOutcome& outcome) = 0;
  [[nodiscard]] virtual RewardModel reward_model() const = 0;
  [[nodiscard]] virtual std::string_view kind() const = 0;
  /// arm -> {pulls, mean}, plus the agent's step counter.
  [[nodiscard]] virtual nlohmann::json state() const = 0;
  virtual void restore(const nlohmann::json& state) = 0;
};

/// One feedback-then-select step shared by all learning agents.
LoRaParams step(Agent& agent, const TransmissionOutcome& outcome);

/// UCB1 over every (CF, SF, TP) combination with a success-only reward.
class NaiveMabAgent final : public Agent {
 public:
  explicit NaiveMabAgent(AgentConfig cfg);

  LoRaParams select() override;
  double observe(const TransmissionOutcome& outcome) override;
  [[nodiscard]] RewardModel reward_model() const override { return RewardModel::SuccessIndicator; }
  [[nodiscard]] std::string_view kind() const override { return "naive-mab"; }
  [[nodiscard]] nlohmann::json state() const override;
  void restore(const nlohmann::json& state) override;

  [[nodiscard]] std::uint64_t steps() const { return t_; }
  [[nodiscard]] const ArmTable& arms() const { return arms_; }

 private:
  AgentConfig cfg_;
  ArmTable arms_;
  std::uint64_t t_ = 0;
};

/// CUCB over per-dimension base arms with disaggregated rewards.
class DLoRaAgent final : public Agent {
 public:
  explicit DLoRaAgent(AgentConfig cfg);

  LoRaParams select() override;
  double observe(const TransmissionOutcome& outcome) override;
  [[nodiscard]] RewardModel reward_model() const override { return RewardModel::CfSfTp; }
  [[nodiscard]] std::string_view kind() const override { return "d-lora"; }
  [[nodiscard]] nlohmann::json state() const override;
  void restore(const nlohmann::json& state) override;

  [[nodiscard]] std::uint64_t steps() const { return t_; }
  [[nodiscard]] const ArmTable& cf_arms() const { return cf_; }
  [[nodiscard]] const ArmTable& sf_arms() const { return sf_; }
  [[nodiscard]] const ArmTable& tp_arms() const { return tp_; }

 private:
  AgentConfig cfg_;
  ArmTable cf_, sf_, tp_;
  std::uint64_t t_ = 0;
};

/// Shared JSON helpers for the arm -> {pulls, mean} layout.
nlohmann::json arms_to_json(const ArmTable& table, const std::vector<std::string>& labels);
void arms_from_json(ArmTable& table, const std::vector<std::string>& labels,
                    const nlohmann::json& j);
std::string arm_label(double value);

}  // namespace lorasim
