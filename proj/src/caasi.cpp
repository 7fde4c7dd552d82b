#include "lorasim/caasi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace lorasim {

LinkQualityMatrix::LinkQualityMatrix(std::size_t n_nodes, std::size_t n_channels)
    : n_nodes_(n_nodes),
      n_channels_(n_channels),
      mean_rssi_(n_nodes * n_channels, 0.0),
      samples_(n_nodes * n_channels, 0) {}

std::size_t LinkQualityMatrix::cell(std::size_t node, std::size_t channel) const {
  if (node >= n_nodes_ || channel >= n_channels_) {
    throw std::out_of_range("link quality cell out of range");
  }
  return node * n_channels_ + channel;
}

void LinkQualityMatrix::record(std::size_t node, std::size_t channel, double rssi_dbm) {
  const std::size_t i = cell(node, channel);
  samples_[i] += 1;
  mean_rssi_[i] += (rssi_dbm - mean_rssi_[i]) / static_cast<double>(samples_[i]);
}

void LinkQualityMatrix::set(std::size_t node, std::size_t channel, double mean_rssi_dbm,
                            std::uint64_t samples) {
  const std::size_t i = cell(node, channel);
  samples_[i] = samples;
  mean_rssi_[i] = samples > 0 ? mean_rssi_dbm : 0.0;
}

std::uint64_t LinkQualityMatrix::samples(std::size_t node, std::size_t channel) const {
  return samples_[cell(node, channel)];
}

std::optional<double> LinkQualityMatrix::rssi(std::size_t node, std::size_t channel) const {
  const std::size_t i = cell(node, channel);
  if (samples_[i] == 0) return std::nullopt;
  return mean_rssi_[i];
}

namespace caasi {

std::vector<CollectionSlot> collection_schedule(std::size_t n_nodes, std::size_t n_channels) {
  if (n_nodes == 0) throw std::invalid_argument("collection needs at least one node");
  if (n_channels == 0) throw std::invalid_argument("collection needs at least one channel");
  std::vector<CollectionSlot> out;
  out.reserve(n_nodes * n_channels);
  std::size_t slot = 0;
  for (std::size_t batch = 0; batch * n_channels < n_nodes; ++batch) {
    const std::size_t first = batch * n_channels;
    const std::size_t last = std::min(first + n_channels, n_nodes);
    for (std::size_t round = 0; round < n_channels; ++round, ++slot) {
      for (std::size_t id = first; id < last; ++id) {
        out.push_back({slot, id, (id + round) % n_channels});
      }
    }
  }
  return out;
}

double channel_quality(const LinkQualityMatrix& m, std::size_t channel) {
  double weighted = 0.0;
  std::uint64_t total = 0;
  for (std::size_t n = 0; n < m.nodes(); ++n) {
    const auto s = m.samples(n, channel);
    if (s == 0) continue;
    weighted += *m.rssi(n, channel) * static_cast<double>(s);
    total += s;
  }
  if (total == 0) return -std::numeric_limits<double>::infinity();
  return weighted / static_cast<double>(total);
}

double node_vulnerability(const LinkQualityMatrix& m, std::size_t node) {
  double weighted = 0.0;
  std::uint64_t total = 0;
  for (std::size_t c = 0; c < m.channels(); ++c) {
    const auto s = m.samples(node, c);
    if (s == 0) continue;
    weighted += *m.rssi(node, c) * static_cast<double>(s);
    total += s;
  }
  if (total == 0) return std::numeric_limits<double>::infinity();
  return -weighted / static_cast<double>(total);
}

std::vector<std::size_t> rank_channels(const LinkQualityMatrix& m) {
  std::vector<double> q(m.channels());
  for (std::size_t c = 0; c < q.size(); ++c) q[c] = channel_quality(m, c);
  std::vector<std::size_t> order(q.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&q](std::size_t a, std::size_t b) { return q[a] > q[b]; });
  return order;
}

std::vector<std::size_t> rank_nodes(const LinkQualityMatrix& m) {
  std::vector<double> v(m.nodes());
  for (std::size_t n = 0; n < v.size(); ++n) v[n] = node_vulnerability(m, n);
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&v](std::size_t a, std::size_t b) { return v[a] > v[b]; });
  return order;
}

std::vector<std::size_t> allocate_channels(const LinkQualityMatrix& m) {
  if (m.channels() == 0) throw std::invalid_argument("no channels to allocate");
  const auto channels = rank_channels(m);
  const auto nodes = rank_nodes(m);
  const std::size_t base = nodes.size() / channels.size();
  const std::size_t extra = nodes.size() % channels.size();

  std::vector<std::size_t> assignment(nodes.size());
  std::size_t pos = 0;
  for (std::size_t k = 0; k < channels.size(); ++k) {
    const std::size_t group = base + (k < extra ? 1 : 0);
    for (std::size_t i = 0; i < group; ++i) assignment[nodes[pos++]] = channels[k];
  }
  return assignment;
}

std::vector<int> prune_sf_actions(std::span<const std::pair<int, double>> probe_pdr,
                                  double pdr_min) {
  if (probe_pdr.empty()) throw std::invalid_argument("no probe results");
  std::vector<int> kept;
  int largest = probe_pdr.front().first;
  for (const auto& [sf, pdr] : probe_pdr) {
    largest = std::max(largest, sf);
    if (pdr >= pdr_min) kept.push_back(sf);
  }
  if (kept.empty()) kept.push_back(largest);
  std::sort(kept.begin(), kept.end());
  return kept;
}

Result run(std::size_t n_nodes, const ActionSets& sets, const Options& opt,
           const LinkProbe& probe) {
  sets.validate();
  if (opt.probe_packets <= 0) throw std::invalid_argument("probe_packets must be positive");
  const std::size_t n_channels = sets.channels_mhz.size();
  const int max_sf = sets.sfs.back();
  const int max_tp = sets.tps_dbm.back();

  Result result;
  result.matrix = LinkQualityMatrix(n_nodes, n_channels);
  double now = 0.0;

  auto transmit = [&](std::size_t node, std::size_t channel, int sf, double toa) {
    result.cost.sent += 1;
    result.cost.energy_mj += phy::tx_energy_mj(max_tp, toa, opt.energy);
    auto rssi = probe(node, channel, sf, max_tp, now);
    if (rssi) result.cost.received += 1;
    return rssi;
  };

  // Step 1: collision-free collection at the most robust settings.
  const double collect_toa = phy::time_on_air_s(opt.payload_bytes, max_sf, opt.radio);
  const auto schedule = collection_schedule(n_nodes, n_channels);
  for (std::size_t i = 0; i < schedule.size();) {
    const std::size_t slot = schedule[i].slot;
    for (; i < schedule.size() && schedule[i].slot == slot; ++i) {
      const auto& s = schedule[i];
      if (auto rssi = transmit(s.node, s.channel, max_sf, collect_toa)) {
        result.matrix.record(s.node, s.channel, *rssi);
      }
    }
    now += collect_toa;
  }

  // Step 2: rank-based allocation.
  result.plan.assignment = allocate_channels(result.matrix);

  // Step 3: one node per group probes each SF at max power; groups sit on
  // distinct channels so the probes do not interfere.
  std::vector<std::vector<std::size_t>> groups(n_channels);
  for (std::size_t node : rank_nodes(result.matrix)) {
    groups[result.plan.assignment[node]].push_back(node);
  }
  std::size_t rounds = 0;
  for (const auto& g : groups) rounds = std::max(rounds, g.size());

  result.plan.pruned_sf.assign(n_nodes, {});
  result.probe_pdr.assign(n_nodes, {});
  for (std::size_t r = 0; r < rounds; ++r) {
    for (int sf : sets.sfs) {
      const double toa = phy::time_on_air_s(opt.payload_bytes, sf, opt.radio);
      std::vector<int> delivered(n_channels, 0);
      for (int p = 0; p < opt.probe_packets; ++p) {
        for (std::size_t ch = 0; ch < n_channels; ++ch) {
          if (r >= groups[ch].size()) continue;
          if (transmit(groups[ch][r], ch, sf, toa)) ++delivered[ch];
        }
        now += toa;
      }
      for (std::size_t ch = 0; ch < n_channels; ++ch) {
        if (r >= groups[ch].size()) continue;
        result.probe_pdr[groups[ch][r]].emplace_back(
            sf, static_cast<double>(delivered[ch]) / opt.probe_packets);
      }
    }
  }
  for (std::size_t n = 0; n < n_nodes; ++n) {
    result.plan.pruned_sf[n] = prune_sf_actions(result.probe_pdr[n], opt.pdr_min);
  }
  result.cost.duration_s = now;
  return result;
}

}  // namespace caasi

// --- CD-LoRa ----------------------------------------------------------------

CDLoRaAgent::CDLoRaAgent(AgentConfig cfg, std::size_t channel, std::vector<int> pruned_sfs)
    : cfg_(std::move(cfg)),
      channel_(channel),
      sfs_(std::move(pruned_sfs)),
      sf_(sfs_.size()),
      tp_(cfg_.actions.tps_dbm.size()) {
  cfg_.validate();
  if (channel_ >= cfg_.actions.channels_mhz.size()) {
    throw std::invalid_argument("assigned channel outside the action sets");
  }
  if (sfs_.empty()) throw std::invalid_argument("pruned SF set is empty");
  for (int sf : sfs_) {
    if (std::find(cfg_.actions.sfs.begin(), cfg_.actions.sfs.end(), sf) == cfg_.actions.sfs.end()) {
      throw std::invalid_argument("pruned SF outside the action sets");
    }
  }
}

LoRaParams CDLoRaAgent::select() {
  const double scale =
      t_ > 0 ? cfg_.exploration_weight * std::sqrt(std::log(static_cast<double>(t_))) : 0.0;
  return {channel_, sfs_[sf_.select_scaled(scale)],
          cfg_.actions.tps_dbm[tp_.select_scaled(scale)]};
}

double CDLoRaAgent::observe(const TransmissionOutcome& outcome) {
  const auto& p = outcome.params_used;
  const auto sf_it = std::find(sfs_.begin(), sfs_.end(), p.sf);
  const auto& tps = cfg_.actions.tps_dbm;
  const auto tp_it = std::find(tps.begin(), tps.end(), p.tp_dbm);
  if (p.channel != channel_ || sf_it == sfs_.end() || tp_it == tps.end()) {
    throw std::invalid_argument("outcome parameters outside the CD-LoRa action space");
  }
  // SF rewards are normalised over the full SF set so every node shares one scale.
  const double r_sf = bandit::reward_sf(outcome, cfg_.sf_metric_factor, cfg_.actions.sfs);
  const double r_tp = bandit::reward_tp(outcome, cfg_.tp_metric_factor, tps);
  sf_.credit(static_cast<std::size_t>(sf_it - sfs_.begin()), r_sf);
  tp_.credit(static_cast<std::size_t>(tp_it - tps.begin()), r_tp);
  ++t_;
  return r_sf + r_tp;
}

nlohmann::json CDLoRaAgent::state() const {
  std::vector<std::string> sf_labels, tp_labels;
  for (int sf : sfs_) sf_labels.push_back(std::to_string(sf));
  for (int tp : cfg_.actions.tps_dbm) tp_labels.push_back(std::to_string(tp));
  return {{"kind", kind()},
          {"t", t_},
          {"channel", channel_},
          {"sf_actions", sfs_},
          {"arms", {{"sf", arms_to_json(sf_, sf_labels)}, {"tp", arms_to_json(tp_, tp_labels)}}}};
}

void CDLoRaAgent::restore(const nlohmann::json& j) {
  if (j.at("kind").get<std::string>() != kind()) {
    throw std::invalid_argument("agent state is for a different agent kind");
  }
  if (j.at("channel").get<std::size_t>() != channel_ ||
      j.at("sf_actions").get<std::vector<int>>() != sfs_) {
    throw std::invalid_argument("agent state was saved under a different channel plan");
  }
  std::vector<std::string> sf_labels, tp_labels;
  for (int sf : sfs_) sf_labels.push_back(std::to_string(sf));
  for (int tp : cfg_.actions.tps_dbm) tp_labels.push_back(std::to_string(tp));
  arms_from_json(sf_, sf_labels, j.at("arms").at("sf"));
  arms_from_json(tp_, tp_labels, j.at("arms").at("tp"));
  t_ = j.at("t").get<std::uint64_t>();
}

nlohmann::json to_json(const ChannelPlan& plan) {
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t n = 0; n < plan.assignment.size(); ++n) {
    nodes.push_back({{"node", n},
                     {"channel", plan.assignment[n]},
                     {"sf_actions", n < plan.pruned_sf.size() ? plan.pruned_sf[n] : std::vector<int>{}}});
  }
  return {{"nodes", nodes}};
}

ChannelPlan channel_plan_from_json(const nlohmann::json& j) {
  ChannelPlan plan;
  const auto& nodes = j.at("nodes");
  plan.assignment.resize(nodes.size());
  plan.pruned_sf.resize(nodes.size());
  for (const auto& entry : nodes) {
    const auto n = entry.at("node").get<std::size_t>();
    if (n >= nodes.size()) throw std::invalid_argument("channel plan node id out of range");
    plan.assignment[n] = entry.at("channel").get<std::size_t>();
    plan.pruned_sf[n] = entry.at("sf_actions").get<std::vector<int>>();
    if (plan.pruned_sf[n].empty()) throw std::invalid_argument("empty SF set in channel plan");
  }
  return plan;
}

nlohmann::json to_json(const LinkQualityMatrix& m) {
  nlohmann::json rssi = nlohmann::json::array();
  nlohmann::json samples = nlohmann::json::array();
  for (std::size_t n = 0; n < m.nodes(); ++n) {
    nlohmann::json rrow = nlohmann::json::array();
    nlohmann::json srow = nlohmann::json::array();
    for (std::size_t c = 0; c < m.channels(); ++c) {
      const auto r = m.rssi(n, c);
      rrow.push_back(r ? nlohmann::json(*r) : nlohmann::json(nullptr));
      srow.push_back(m.samples(n, c));
    }
    rssi.push_back(rrow);
    samples.push_back(srow);
  }
  return {{"nodes", m.nodes()}, {"channels", m.channels()}, {"rssi_dbm", rssi}, {"samples", samples}};
}

LinkQualityMatrix link_quality_from_json(const nlohmann::json& j) {
  const auto n_nodes = j.at("nodes").get<std::size_t>();
  const auto n_channels = j.at("channels").get<std::size_t>();
  LinkQualityMatrix m(n_nodes, n_channels);
  for (std::size_t n = 0; n < n_nodes; ++n) {
    for (std::size_t c = 0; c < n_channels; ++c) {
      const auto s = j.at("samples").at(n).at(c).get<std::uint64_t>();
      const auto& r = j.at("rssi_dbm").at(n).at(c);
      if (s > 0 && r.is_null()) throw std::invalid_argument("sampled cell without RSSI");
      m.set(n, c, s > 0 ? r.get<double>() : 0.0, s);
    }
  }
  return m;
}

}  // namespace lorasim
