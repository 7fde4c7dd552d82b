#pragma once

#include <cstdint>
#include <random>

#include "lorasim/bandit.hpp"

namespace lorasim {

namespace baselines {

/// Independent uniform draw per dimension.
LoRaParams random_select(const ActionSets& sets, std::mt19937_64& rng);

inline LoRaParams static_oracle_select(const LoRaParams& fixed) { return fixed; }

}  // namespace baselines

class RandomAgent final : public Agent {
 public:
  RandomAgent(ActionSets sets, std::uint64_t seed);

  LoRaParams select() override { return baselines::random_select(sets_, rng_); }
  double observe(const TransmissionOutcome& outcome) override {
    return bandit::reward_cf(outcome);
  }
  [[nodiscard]] RewardModel reward_model() const override { return RewardModel::SuccessIndicator; }
  [[nodiscard]] std::string_view kind() const override { return "random"; }
  [[nodiscard]] nlohmann::json state() const override { return {{"kind", kind()}}; }
  void restore(const nlohmann::json&) override {}

 private:
  ActionSets sets_;
  std::mt19937_64 rng_;
};

/// Constant policy. It reports rewards under a chosen model so it can
/// stand in as the r* oracle for any learner.
class StaticAgent final : public Agent {
 public:
  StaticAgent(LoRaParams fixed, RewardModel model, AgentConfig cfg);

  LoRaParams select() override { return baselines::static_oracle_select(fixed_); }
  double observe(const TransmissionOutcome& outcome) override {
    return bandit::super_arm_reward(model_, outcome, cfg_);
  }
  [[nodiscard]] RewardModel reward_model() const override { return model_; }
  [[nodiscard]] std::string_view kind() const override { return "static"; }
  [[nodiscard]] nlohmann::json state() const override;
  void restore(const nlohmann::json&) override {}

 private:
  LoRaParams fixed_;
  RewardModel model_;
  AgentConfig cfg_;
};

}  // namespace lorasim
