#include "lorasim/baselines.hpp"

#include <stdexcept>

namespace lorasim {

namespace baselines {

LoRaParams random_select(const ActionSets& sets, std::mt19937_64& rng) {
  auto pick = [&rng](std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  };
  LoRaParams p;
  p.channel = pick(sets.channels_mhz.size());
  p.sf = sets.sfs[pick(sets.sfs.size())];
  p.tp_dbm = sets.tps_dbm[pick(sets.tps_dbm.size())];
  return p;
}

}  // namespace baselines

RandomAgent::RandomAgent(ActionSets sets, std::uint64_t seed) : sets_(std::move(sets)), rng_(seed) {
  sets_.validate();
}

StaticAgent::StaticAgent(LoRaParams fixed, RewardModel model, AgentConfig cfg)
    : fixed_(fixed), model_(model), cfg_(std::move(cfg)) {
  if (!cfg_.actions.contains(fixed_)) {
    throw std::invalid_argument("static parameters are outside the action sets");
  }
}

nlohmann::json StaticAgent::state() const {
  return {{"kind", kind()},
          {"params", {{"channel", fixed_.channel}, {"sf", fixed_.sf}, {"tp_dbm", fixed_.tp_dbm}}}};
}

}  // namespace lorasim
