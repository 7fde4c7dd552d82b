#include "lorasim/bandit.hpp"

#include <algorithm>

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace lorasim {

void AgentConfig::validate() const {
  if (!(exploration_weight > 0.0)) throw std::invalid_argument("exploration_weight must be > 0");
  if (!(sf_metric_factor >= 0.0)) throw std::invalid_argument("sf_metric_factor must be >= 0");
  if (!(tp_metric_factor >= 0.0)) throw std::invalid_argument("tp_metric_factor must be >= 0");
  actions.validate();
}

namespace bandit {

ArmStats update_mean(ArmStats stats, double reward) {
  stats.pulls += 1;
  stats.mean_reward += (reward - stats.mean_reward) / static_cast<double>(stats.pulls);
  return stats;
}

double ucb_bonus(std::uint64_t pulls, std::uint64_t t, double c) {
  return c * std::sqrt(std::log(static_cast<double>(t)) / (2.0 * static_cast<double>(pulls)));
}

std::optional<double> ucb_estimate(const ArmStats& stats, std::uint64_t t, double c) {
  if (stats.pulls == 0) return std::nullopt;
  if (t == 0) throw std::domain_error("ucb_estimate needs t >= 1");
  return stats.mean_reward + ucb_bonus(stats.pulls, t, c);
}

std::size_t ucb_argmax(std::span<const ArmStats> arms, std::uint64_t t, double c) {
  if (arms.empty()) throw std::invalid_argument("no arms to select from");
  for (std::size_t i = 0; i < arms.size(); ++i) {
    if (arms[i].pulls == 0) return i;
  }
  std::size_t best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < arms.size(); ++i) {
    const double v = *ucb_estimate(arms[i], t, c);
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }
  return best;
}

std::size_t super_arm_index(const LoRaParams& p, const ActionSets& sets) {
  std::size_t sf_idx = sets.sfs.size();
  for (std::size_t i = 0; i < sets.sfs.size(); ++i) {
    if (sets.sfs[i] == p.sf) sf_idx = i;
  }
  std::size_t tp_idx = sets.tps_dbm.size();
  for (std::size_t i = 0; i < sets.tps_dbm.size(); ++i) {
    if (sets.tps_dbm[i] == p.tp_dbm) tp_idx = i;
  }
  if (p.channel >= sets.channels_mhz.size() || sf_idx == sets.sfs.size() ||
      tp_idx == sets.tps_dbm.size()) {
    throw std::invalid_argument("parameters outside the action sets");
  }
  return (p.channel * sets.sfs.size() + sf_idx) * sets.tps_dbm.size() + tp_idx;
}

LoRaParams super_arm_at(std::size_t index, const ActionSets& sets) {
  const std::size_t n_tp = sets.tps_dbm.size();
  const std::size_t n_sf = sets.sfs.size();
  LoRaParams p;
  p.tp_dbm = sets.tps_dbm[index % n_tp];
  p.sf = sets.sfs[(index / n_tp) % n_sf];
  p.channel = index / (n_tp * n_sf);
  return p;
}

LoRaParams naive_select(std::span<const ArmStats> super_arm_stats, std::uint64_t t, double c,
                        const ActionSets& sets) {
  if (super_arm_stats.size() != sets.super_arm_count()) {
    throw std::invalid_argument("super arm table does not match the action sets");
  }
  return super_arm_at(ucb_argmax(super_arm_stats, t, c), sets);
}

double reward_cf(const TransmissionOutcome& outcome) { return outcome.success ? 1.0 : 0.0; }

double reward_sf(const TransmissionOutcome& outcome, double xi, std::span<const int> sf_set) {
  auto weight = [](int sf) { return sf / std::ldexp(1.0, sf); };
  double total = 0.0;
  for (int sf : sf_set) total += weight(sf);
  return reward_cf(outcome) + xi * weight(outcome.params_used.sf) / total;
}

double reward_tp(const TransmissionOutcome& outcome, double eta, std::span<const int> tp_set) {
  double total = 0.0;
  for (int tp : tp_set) total += tp;
  return reward_cf(outcome) + eta * (1.0 - outcome.params_used.tp_dbm / total);
}

double super_arm_reward(RewardModel model, const TransmissionOutcome& outcome,
                        const AgentConfig& cfg) {
  switch (model) {
    case RewardModel::SuccessIndicator:
      return reward_cf(outcome);
    case RewardModel::CfSfTp:
      return reward_cf(outcome) + reward_sf(outcome, cfg.sf_metric_factor, cfg.actions.sfs) +
             reward_tp(outcome, cfg.tp_metric_factor, cfg.actions.tps_dbm);
    case RewardModel::SfTp:
      return reward_sf(outcome, cfg.sf_metric_factor, cfg.actions.sfs) +
             reward_tp(outcome, cfg.tp_metric_factor, cfg.actions.tps_dbm);
  }
  return 0.0;
}

LoRaParams cucb_select(std::span<const ArmStats> cf_stats, std::span<const ArmStats> sf_stats,
                       std::span<const ArmStats> tp_stats, std::uint64_t t, double c,
                       const ActionSets& sets) {
  if (cf_stats.size() != sets.channels_mhz.size() || sf_stats.size() != sets.sfs.size() ||
      tp_stats.size() != sets.tps_dbm.size()) {
    throw std::invalid_argument("base arm tables do not match the action sets");
  }
  LoRaParams p;
  p.channel = ucb_argmax(cf_stats, t, c);
  p.sf = sets.sfs[ucb_argmax(sf_stats, t, c)];
  p.tp_dbm = sets.tps_dbm[ucb_argmax(tp_stats, t, c)];
  return p;
}

std::vector<double> cumulative_regret(std::span<const double> rewards, double optimal_mean) {
  std::vector<double> out;
  out.reserve(rewards.size());
  double shortfall = 0.0;
  for (double r : rewards) {
    shortfall += optimal_mean - r;
    out.push_back(shortfall);
  }
  return out;
}

}  // namespace bandit

ArmTable::ArmTable(std::size_t n_arms)
    : stats_(n_arms), means_(n_arms, 0.0), inv_sqrt_two_pulls_(n_arms, 0.0), unexplored_(n_arms) {}

void ArmTable::credit(std::size_t arm, double reward) {
  set(arm, bandit::update_mean(stats_.at(arm), reward));
}

void ArmTable::set(std::size_t arm, ArmStats stats) {
  if (stats_.at(arm).pulls == 0 && stats.pulls > 0) --unexplored_;
  if (stats_[arm].pulls > 0 && stats.pulls == 0) {
    ++unexplored_;
    first_unexplored_hint_ = std::min(first_unexplored_hint_, arm);
  }
  stats_[arm] = stats;
  means_[arm] = stats.mean_reward;
  inv_sqrt_two_pulls_[arm] =
      stats.pulls > 0 ? 1.0 / std::sqrt(2.0 * static_cast<double>(stats.pulls)) : 0.0;
}

std::size_t ArmTable::select(std::uint64_t t, double c) const {
  if (unexplored_ > 0 || stats_.empty()) return select_scaled(0.0);
  return select_scaled(c * std::sqrt(std::log(static_cast<double>(t))));
}

std::size_t ArmTable::select_scaled(double scale) const {
  if (stats_.empty()) throw std::logic_error("empty arm table");
  if (unexplored_ > 0) {
    // every arm below the hint has been pulled
    for (std::size_t i = first_unexplored_hint_; i < stats_.size(); ++i) {
      if (stats_[i].pulls == 0) {
        first_unexplored_hint_ = i;
        return i;
      }
    }
  }
  // Two passes: a branch-free max, then the lowest index attaining it.
  const std::size_t n = means_.size();
  scratch_.resize(n);
  const double* m = means_.data();
  const double* w = inv_sqrt_two_pulls_.data();
  double* v = scratch_.data();
  for (std::size_t i = 0; i < n; ++i) v[i] = m[i] + scale * w[i];
  double best_value = v[0];
  for (std::size_t i = 1; i < n; ++i) best_value = v[i] > best_value ? v[i] : best_value;
  return static_cast<std::size_t>(std::find(v, v + n, best_value) - v);
}

LoRaParams step(Agent& agent, const TransmissionOutcome& outcome) {
  agent.observe(outcome);
  return agent.select();
}

// --- NaiveMAB ---------------------------------------------------------------

NaiveMabAgent::NaiveMabAgent(AgentConfig cfg)
    : cfg_(std::move(cfg)), arms_(cfg_.actions.super_arm_count()) {
  cfg_.validate();
}

LoRaParams NaiveMabAgent::select() {
  return bandit::super_arm_at(arms_.select(t_, cfg_.exploration_weight), cfg_.actions);
}

double NaiveMabAgent::observe(const TransmissionOutcome& outcome) {
  const double r = bandit::reward_cf(outcome);
  arms_.credit(bandit::super_arm_index(outcome.params_used, cfg_.actions), r);
  ++t_;
  return r;
}

std::string arm_label(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", value);
  return buf;
}

nlohmann::json arms_to_json(const ArmTable& table, const std::vector<std::string>& labels) {
  nlohmann::json out = nlohmann::json::object();
  for (std::size_t i = 0; i < table.size(); ++i) {
    out[labels.at(i)] = {{"pulls", table[i].pulls}, {"mean", table[i].mean_reward}};
  }
  return out;
}

void arms_from_json(ArmTable& table, const std::vector<std::string>& labels,
                    const nlohmann::json& j) {
  if (j.size() != table.size()) throw std::invalid_argument("arm count mismatch in agent state");
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& entry = j.at(labels.at(i));
    ArmStats s{entry.at("pulls").get<std::uint64_t>(), entry.at("mean").get<double>()};
    if (s.pulls == 0 && s.mean_reward != 0.0) {
      throw std::invalid_argument("unpulled arm with nonzero mean in agent state");
    }
    table.set(i, s);
  }
}

namespace {

std::vector<std::string> channel_labels(const ActionSets& sets) {
  std::vector<std::string> out;
  for (double f : sets.channels_mhz) out.push_back(arm_label(f));
  return out;
}

std::vector<std::string> int_labels(const std::vector<int>& values) {
  std::vector<std::string> out;
  for (int v : values) out.push_back(std::to_string(v));
  return out;
}

std::vector<std::string> super_arm_labels(const ActionSets& sets) {
  std::vector<std::string> out;
  out.reserve(sets.super_arm_count());
  for (std::size_t i = 0; i < sets.super_arm_count(); ++i) {
    const LoRaParams p = bandit::super_arm_at(i, sets);
    out.push_back(arm_label(sets.channels_mhz[p.channel]) + "/" + std::to_string(p.sf) + "/" +
                  std::to_string(p.tp_dbm));
  }
  return out;
}

void check_kind(const nlohmann::json& j, std::string_view kind) {
  if (j.at("kind").get<std::string>() != kind) {
    throw std::invalid_argument("agent state is for a different agent kind");
  }
}

}  // namespace

nlohmann::json NaiveMabAgent::state() const {
  return {{"kind", kind()}, {"t", t_}, {"arms", arms_to_json(arms_, super_arm_labels(cfg_.actions))}};
}

void NaiveMabAgent::restore(const nlohmann::json& j) {
  check_kind(j, kind());
  arms_from_json(arms_, super_arm_labels(cfg_.actions), j.at("arms"));
  t_ = j.at("t").get<std::uint64_t>();
}

// --- D-LoRa -----------------------------------------------------------------

DLoRaAgent::DLoRaAgent(AgentConfig cfg)
    : cfg_(std::move(cfg)),
      cf_(cfg_.actions.channels_mhz.size()),
      sf_(cfg_.actions.sfs.size()),
      tp_(cfg_.actions.tps_dbm.size()) {
  cfg_.validate();
}

LoRaParams DLoRaAgent::select() {
  const double scale =
      t_ > 0 ? cfg_.exploration_weight * std::sqrt(std::log(static_cast<double>(t_))) : 0.0;
  LoRaParams p;
  p.channel = cf_.select_scaled(scale);
  p.sf = cfg_.actions.sfs[sf_.select_scaled(scale)];
  p.tp_dbm = cfg_.actions.tps_dbm[tp_.select_scaled(scale)];
  return p;
}

double DLoRaAgent::observe(const TransmissionOutcome& outcome) {
  const auto& sets = cfg_.actions;
  const double r_cf = bandit::reward_cf(outcome);
  const double r_sf = bandit::reward_sf(outcome, cfg_.sf_metric_factor, sets.sfs);
  const double r_tp = bandit::reward_tp(outcome, cfg_.tp_metric_factor, sets.tps_dbm);
  const std::size_t flat = bandit::super_arm_index(outcome.params_used, sets);
  const std::size_t n_tp = sets.tps_dbm.size();
  cf_.credit(outcome.params_used.channel, r_cf);
  sf_.credit((flat / n_tp) % sets.sfs.size(), r_sf);
  tp_.credit(flat % n_tp, r_tp);
  ++t_;
  return r_cf + r_sf + r_tp;
}

nlohmann::json DLoRaAgent::state() const {
  return {{"kind", kind()},
          {"t", t_},
          {"arms",
           {{"cf", arms_to_json(cf_, channel_labels(cfg_.actions))},
            {"sf", arms_to_json(sf_, int_labels(cfg_.actions.sfs))},
            {"tp", arms_to_json(tp_, int_labels(cfg_.actions.tps_dbm))}}}};
}

void DLoRaAgent::restore(const nlohmann::json& j) {
  check_kind(j, kind());
  const auto& arms = j.at("arms");
  arms_from_json(cf_, channel_labels(cfg_.actions), arms.at("cf"));
  arms_from_json(sf_, int_labels(cfg_.actions.sfs), arms.at("sf"));
  arms_from_json(tp_, int_labels(cfg_.actions.tps_dbm), arms.at("tp"));
  t_ = j.at("t").get<std::uint64_t>();
}

}  // namespace lorasim
