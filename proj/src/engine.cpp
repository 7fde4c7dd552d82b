#include "lorasim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>

#include "lorasim/baselines.hpp"

namespace lorasim {

double Position::distance_to_origin() const { return std::hypot(x, y); }

std::string to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::Random: return "random";
    case AgentKind::NaiveMab: return "naive-mab";
    case AgentKind::DLoRa: return "d-lora";
    case AgentKind::CDLoRa: return "cd-lora";
    case AgentKind::Static: return "static";
  }
  return "unknown";
}

AgentKind agent_kind_from_string(const std::string& name) {
  if (name == "random") return AgentKind::Random;
  if (name == "naive-mab") return AgentKind::NaiveMab;
  if (name == "d-lora") return AgentKind::DLoRa;
  if (name == "cd-lora") return AgentKind::CDLoRa;
  if (name == "static") return AgentKind::Static;
  throw ConfigError("unknown agent kind: " + name);
}

void ScenarioConfig::validate(std::size_t n_channels) const {
  auto fail = [](const std::string& what) { throw ConfigError(what); };
  if (n_nodes == 0) fail("n_nodes must be >= 1");
  if (!(radius_m > 0.0)) fail("radius_m must be > 0");
  if (!(mean_interval_s > 0.0)) fail("mean_interval_s must be > 0");
  if (payload_bytes <= 0) fail("payload_bytes must be > 0");
  if (!(duration_h >= 0.0)) fail("duration_h must be >= 0");
  if (!(window_h > 0.0)) fail("window_h must be > 0");
  if (std::abs(alpha1 + alpha2 - 1.0) > 1e-9) fail("alpha1 + alpha2 must equal 1");
  if (alpha1 < 0.0 || alpha2 < 0.0) fail("utility weights must be non-negative");
  if (ee_scale && !(*ee_scale > 0.0)) fail("ee_scale must be > 0");
  if (probe_packets <= 0) fail("probe_packets must be > 0");
  if (pdr_min < 0.0 || pdr_min > 1.0) fail("pdr_min must be in [0, 1]");
  if (!channel_profiles.empty() && channel_profiles.size() != n_channels) {
    fail("channel_profiles needs one entry per channel");
  }
  if (positions && positions->size() != n_nodes) fail("positions must list n_nodes points");
  if (positions) {
    for (const auto& p : *positions) {
      if (!(p.distance_to_origin() > 0.0)) fail("a node cannot sit on the gateway");
    }
  }
  try {
    path_loss.validate();
    radio.validate();
    for (const auto& profile : channel_profiles) {
      profile.initial.validate();
      double last = -std::numeric_limits<double>::infinity();
      for (const auto& s : profile.switches) {
        if (!(s.time_h > last)) fail("switch times must be strictly increasing");
        if (s.time_h < 0.0) fail("switch times must be >= 0");
        s.params.validate();
        last = s.time_h;
      }
    }
    // the sensitivity table must cover the configured bandwidth
    phy::receiver_sensitivity_dbm(7, radio.bandwidth_hz);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    fail(e.what());
  }
}

void RunConfig::validate() const {
  try {
    agent_config.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  scenario.validate(agent_config.actions.channels_mhz.size());
  if (agent == AgentKind::Static) {
    if (!static_params) throw ConfigError("static agent needs static_params");
    if (!agent_config.actions.contains(*static_params)) {
      throw ConfigError("static_params outside the action sets");
    }
  }
  if (channel_plan) {
    if (channel_plan->assignment.size() != scenario.n_nodes ||
        channel_plan->pruned_sf.size() != scenario.n_nodes) {
      throw ConfigError("channel plan does not match n_nodes");
    }
    for (std::size_t ch : channel_plan->assignment) {
      if (ch >= agent_config.actions.channels_mhz.size()) {
        throw ConfigError("channel plan uses an unknown channel");
      }
    }
  }
}

std::optional<double> MetricsReport::pdr() const {
  return engine::compute_pdr(total_sent, gateway_received);
}

double MetricsReport::ee() const {
  return engine::compute_ee(total_delivered_bits, total_energy_mj);
}

const WindowMetrics* MetricsReport::final_window() const {
  return windows.empty() ? nullptr : &windows.back();
}

namespace engine {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finaliser
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Zero-mean normal draws; a zero sigma consumes no randomness.
class NormalSampler {
 public:
  double operator()(std::mt19937_64& rng, double sigma) {
    if (sigma == 0.0) return 0.0;
    return sigma * unit_(rng);
  }

 private:
  std::normal_distribution<double> unit_{0.0, 1.0};
};

struct Event {
  double time;
  int kind;  // 0 = end of a transmission, 1 = start; ends first at equal times
  std::uint64_t key;   // transmission id for ends, node for starts
  std::size_t channel = 0;  // ends only; not part of the ordering

  bool operator>(const Event& o) const {
    if (time != o.time) return time > o.time;
    if (kind != o.kind) return kind > o.kind;
    return key > o.key;
  }
};

std::size_t index_of(const std::vector<int>& values, int v) {
  return static_cast<std::size_t>(std::find(values.begin(), values.end(), v) - values.begin());
}

WindowMetrics empty_window(double start_h, double end_h, const ActionSets& sets) {
  WindowMetrics w;
  w.start_h = start_h;
  w.end_h = end_h;
  w.channel_usage.assign(sets.channels_mhz.size(), 0);
  w.sf_usage.assign(sets.sfs.size(), 0);
  w.tp_usage.assign(sets.tps_dbm.size(), 0);
  return w;
}

}  // namespace

std::vector<Position> place_nodes(std::size_t n, double radius_m, std::uint64_t seed) {
  if (!(radius_m > 0.0)) throw std::invalid_argument("radius must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Position> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = 1.0 - unit(rng);  // (0, 1], keeps nodes off the gateway
    const double theta = 2.0 * std::numbers::pi * unit(rng);
    const double r = radius_m * std::sqrt(u);
    out.push_back({r * std::cos(theta), r * std::sin(theta)});
  }
  return out;
}

std::vector<PathLossParams> apply_channel_schedule(const std::vector<ChannelProfile>& profiles,
                                                   double t_h) {
  std::vector<PathLossParams> out;
  out.reserve(profiles.size());
  for (const auto& profile : profiles) {
    const PathLossParams* active = &profile.initial;
    for (const auto& s : profile.switches) {
      if (s.time_h <= t_h) active = &s.params;
    }
    out.push_back(*active);
  }
  return out;
}

std::optional<double> compute_pdr(std::uint64_t sent, std::uint64_t received) {
  if (received > sent) throw std::logic_error("more packets received than sent");
  if (sent == 0) return std::nullopt;
  return static_cast<double>(received) / static_cast<double>(sent);
}

double compute_ee(double received_payload_bits, double total_energy_mj) {
  if (total_energy_mj <= 0.0) {
    if (received_payload_bits > 0.0) throw std::logic_error("deliveries without energy spent");
    return 0.0;
  }
  return received_payload_bits / total_energy_mj;
}

double compute_utility(double pdr, double ee, double alpha1, double alpha2, double ee_scale) {
  return alpha1 * pdr + alpha2 * (ee / ee_scale);
}

std::vector<ChannelProfile> resolve_profiles(const ScenarioConfig& s, std::size_t n_channels) {
  if (!s.channel_profiles.empty()) return s.channel_profiles;
  return std::vector<ChannelProfile>(n_channels, ChannelProfile{s.path_loss, {}});
}

MetricsReport run(const RunConfig& config) {
  config.validate();
  const ScenarioConfig& sc = config.scenario;
  const AgentConfig& acfg = config.agent_config;
  const ActionSets& sets = acfg.actions;
  const std::size_t n_channels = sets.channels_mhz.size();
  const auto profiles = resolve_profiles(sc, n_channels);

  MetricsReport report;
  report.agent = to_string(config.agent);
  report.actions = sets;
  report.positions = sc.positions ? *sc.positions
                                  : place_nodes(sc.n_nodes, sc.radius_m, sc.topology_seed);
  report.nodes.assign(sc.n_nodes, {});
  report.channel_usage.assign(n_channels, 0);
  report.sf_usage.assign(sets.sfs.size(), 0);
  report.tp_usage.assign(sets.tps_dbm.size(), 0);
  if (sc.record_rewards) report.node_rewards.assign(sc.n_nodes, {});

  std::vector<double> distance(sc.n_nodes);
  for (std::size_t i = 0; i < sc.n_nodes; ++i) distance[i] = report.positions[i].distance_to_origin();

  std::mt19937_64 traffic_rng(sc.traffic_seed);
  std::mt19937_64 channel_rng(sc.channel_seed);
  NormalSampler sample_normal;
  const double noise_floor = phy::thermal_noise_dbm(sc.radio);

  // A lone packet's reception, also used by the CAASI probes.
  auto lone_rssi = [&](std::size_t node, std::size_t channel, int sf, int tp,
                       double t_h) -> std::optional<double> {
    const auto active = apply_channel_schedule(profiles, t_h);
    Transmission t;
    t.params = {channel, sf, tp};
    t.rssi_dbm = phy::rssi_dbm(tp, distance[node], active[channel],
                               sample_normal(channel_rng, active[channel].shadow_sigma_db));
    const double noise = noise_floor + sample_normal(channel_rng, sc.radio.awgn_sigma_db);
    if (signal_lost(t, {}, noise, sc.collision, sc.radio)) return std::nullopt;
    return t.rssi_dbm;
  };

  // Agents.
  std::vector<std::unique_ptr<Agent>> agents;
  agents.reserve(sc.n_nodes);
  if (config.agent == AgentKind::CDLoRa) {
    ChannelPlan plan;
    if (config.channel_plan) {
      plan = *config.channel_plan;
    } else {
      caasi::Options opt;
      opt.probe_packets = sc.probe_packets;
      opt.pdr_min = sc.pdr_min;
      opt.payload_bytes = sc.payload_bytes;
      opt.radio = sc.radio;
      opt.energy = sc.energy;
      auto result = caasi::run(sc.n_nodes, sets, opt,
                               [&](std::size_t node, std::size_t ch, int sf, int tp, double) {
                                 return lone_rssi(node, ch, sf, tp, 0.0);
                               });
      plan = result.plan;
      report.setup = result.cost;
      report.link_quality = std::move(result.matrix);
    }
    for (std::size_t i = 0; i < sc.n_nodes; ++i) {
      agents.push_back(std::make_unique<CDLoRaAgent>(acfg, plan.assignment[i], plan.pruned_sf[i]));
    }
    report.channel_plan = std::move(plan);
  } else {
    for (std::size_t i = 0; i < sc.n_nodes; ++i) {
      switch (config.agent) {
        case AgentKind::Random:
          agents.push_back(std::make_unique<RandomAgent>(sets, mix_seed(sc.traffic_seed, i)));
          break;
        case AgentKind::NaiveMab:
          agents.push_back(std::make_unique<NaiveMabAgent>(acfg));
          break;
        case AgentKind::DLoRa:
          agents.push_back(std::make_unique<DLoRaAgent>(acfg));
          break;
        case AgentKind::Static:
          agents.push_back(
              std::make_unique<StaticAgent>(*config.static_params, config.static_reward_model, acfg));
          break;
        case AgentKind::CDLoRa:
          break;
      }
    }
  }

  // Windows.
  const double duration_s = sc.duration_h * 3600.0;
  const auto n_windows = static_cast<std::size_t>(std::ceil(sc.duration_h / sc.window_h));
  for (std::size_t w = 0; w < n_windows; ++w) {
    report.windows.push_back(empty_window(w * sc.window_h,
                                          std::min((w + 1) * sc.window_h, sc.duration_h), sets));
  }
  std::vector<double> window_regret(n_windows, 0.0);

  std::priority_queue<Event, std::vector<Event>, std::greater<>> events;
  std::exponential_distribution<double> interarrival(1.0 / sc.mean_interval_s);
  if (n_windows > 0) {
    for (std::size_t i = 0; i < sc.n_nodes; ++i) {
      events.push({interarrival(traffic_rng), 1, i});
    }
  }

  auto next_switch_after = [&profiles](double t_h) {
    double next = std::numeric_limits<double>::infinity();
    for (const auto& profile : profiles) {
      for (const auto& sw : profile.switches) {
        if (sw.time_h > t_h) next = std::min(next, sw.time_h);
      }
    }
    return next;
  };
  auto active = apply_channel_schedule(profiles, 0.0);
  double next_switch_h = next_switch_after(0.0);

  std::vector<double> toa_by_sf(sets.sfs.size());
  for (std::size_t i = 0; i < sets.sfs.size(); ++i) {
    toa_by_sf[i] = phy::time_on_air_s(sc.payload_bytes, sets.sfs[i], sc.radio);
  }

  // Per channel: packets in flight, or finished but possibly overlapping
  // one in flight. Only same-channel packets interact.
  struct Air {
    std::vector<Transmission> live;
    std::vector<char> finished;
    std::vector<double> rssi_mw;
    std::size_t in_flight = 0;
    std::uint32_t ends_since_prune = 0;
  };
  std::vector<Air> air(n_channels);
  std::uint64_t next_id = 0;

  while (!events.empty()) {
    const Event ev = events.top();
    events.pop();

    if (ev.kind == 1) {
      if (ev.time >= duration_s) continue;
      const std::size_t node = ev.key;
      const LoRaParams p = agents[node]->select();
      const double t_h = ev.time / 3600.0;
      if (t_h >= next_switch_h) {
        active = apply_channel_schedule(profiles, t_h);
        next_switch_h = next_switch_after(t_h);
      }
      const PathLossParams& pl = active[p.channel];

      Transmission tx;
      tx.id = next_id++;
      tx.node_id = node;
      tx.params = p;
      tx.payload_bytes = sc.payload_bytes;
      tx.start_s = ev.time;
      tx.toa_s = toa_by_sf[index_of(sets.sfs, p.sf)];
      tx.rssi_dbm = phy::rssi_dbm(p.tp_dbm, distance[node], pl,
                                  sample_normal(channel_rng, pl.shadow_sigma_db));
      tx.noise_dbm = noise_floor + sample_normal(channel_rng, sc.radio.awgn_sigma_db);
      Air& a = air[p.channel];
      a.live.push_back(tx);
      a.finished.push_back(0);
      a.rssi_mw.push_back(phy::dbm_to_mw(tx.rssi_dbm));
      ++a.in_flight;
      events.push({tx.end_s(), 0, tx.id, p.channel});

      // the radio is busy until the packet ends
      const double next = std::max(ev.time + interarrival(traffic_rng), tx.end_s());
      events.push({next, 1, node});
      continue;
    }

    // End of transmission ev.key.
    Air& a = air[ev.channel];
    std::size_t idx = 0;
    while (a.live[idx].id != ev.key) ++idx;
    Transmission& tx = a.live[idx];
    tx.collided = collides(tx, a.live, sc.collision, sc.radio);
    tx.signal_lost = signal_lost(tx, a.live, a.rssi_mw, tx.noise_dbm, sc.collision, sc.radio);
    a.finished[idx] = 1;
    --a.in_flight;

    const std::size_t node = tx.node_id;
    const bool ok = tx.received();
    const double energy = phy::tx_energy_mj(tx.params.tp_dbm, tx.toa_s, sc.energy);
    const double bits = ok ? 8.0 * tx.payload_bytes : 0.0;

    NodeTally& tally = report.nodes[node];
    tally.sent += 1;
    tally.energy_mj += energy;
    if (ok) {
      tally.received += 1;
    } else if (tx.collided) {
      tally.lost_collision += 1;
    } else {
      tally.lost_signal += 1;
    }

    const auto w = std::min(static_cast<std::size_t>(tx.start_s / 3600.0 / sc.window_h),
                            n_windows - 1);
    WindowMetrics& win = report.windows[w];
    win.sent += 1;
    win.received += ok ? 1 : 0;
    win.energy_mj += energy;
    win.delivered_bits += bits;
    const std::size_t sf_i = index_of(sets.sfs, tx.params.sf);
    const std::size_t tp_i = index_of(sets.tps_dbm, tx.params.tp_dbm);
    win.channel_usage[tx.params.channel] += 1;
    win.sf_usage[sf_i] += 1;
    win.tp_usage[tp_i] += 1;

    const double reward = agents[node]->observe({ok, tx.params});
    win.reward_sum += reward;
    if (sc.regret_optimal_reward) window_regret[w] += *sc.regret_optimal_reward - reward;
    if (sc.record_rewards) report.node_rewards[node].push_back(static_cast<float>(reward));
    if (sc.record_transmissions) report.transmissions.push_back(tx);

    // Drop finished packets that can no longer overlap anything in flight
    // or anything starting later. Amortised over several end events.
    if (++a.ends_since_prune >= 16 || a.in_flight == 0) {
      a.ends_since_prune = 0;
      double earliest_inflight = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < a.live.size(); ++i) {
        if (!a.finished[i]) earliest_inflight = std::min(earliest_inflight, a.live[i].start_s);
      }
      std::size_t keep = 0;
      for (std::size_t i = 0; i < a.live.size(); ++i) {
        if (a.finished[i] && a.live[i].end_s() <= earliest_inflight) continue;
        if (keep != i) {
          a.live[keep] = a.live[i];
          a.finished[keep] = a.finished[i];
          a.rssi_mw[keep] = a.rssi_mw[i];
        }
        ++keep;
      }
      a.live.resize(keep);
      a.finished.resize(keep);
      a.rssi_mw.resize(keep);
    }
  }

  if (sc.include_setup_in_metrics && report.setup && n_windows > 0) {
    WindowMetrics& first = report.windows.front();
    first.sent += report.setup->sent;
    first.received += report.setup->received;
    first.energy_mj += report.setup->energy_mj;
    first.delivered_bits += 8.0 * sc.payload_bytes * static_cast<double>(report.setup->received);
  }

  // Totals and derived series.
  double regret = 0.0;
  double max_ee = 0.0;
  for (std::size_t w = 0; w < n_windows; ++w) {
    WindowMetrics& win = report.windows[w];
    win.pdr = compute_pdr(win.sent, win.received);
    win.ee = compute_ee(win.delivered_bits, win.energy_mj);
    max_ee = std::max(max_ee, win.ee);
    report.total_sent += win.sent;
    report.gateway_received += win.received;
    report.total_energy_mj += win.energy_mj;
    report.total_delivered_bits += win.delivered_bits;
    for (std::size_t c = 0; c < n_channels; ++c) report.channel_usage[c] += win.channel_usage[c];
    for (std::size_t i = 0; i < sets.sfs.size(); ++i) report.sf_usage[i] += win.sf_usage[i];
    for (std::size_t i = 0; i < sets.tps_dbm.size(); ++i) report.tp_usage[i] += win.tp_usage[i];
    if (sc.regret_optimal_reward) {
      regret += window_regret[w];
      win.regret = regret;
    }
  }
  report.ee_scale = sc.ee_scale ? *sc.ee_scale : (max_ee > 0.0 ? max_ee : 1.0);
  for (auto& win : report.windows) {
    if (win.pdr) {
      win.utility = compute_utility(*win.pdr, win.ee, sc.alpha1, sc.alpha2, report.ee_scale);
    }
  }
  return report;
}

}  // namespace engine

// --- FrozenLink --------------------------------------------------------------

namespace {

double shadow_sigma_draw(std::mt19937_64& rng, double sigma) {
  if (sigma == 0.0) return 0.0;
  return std::normal_distribution<double>(0.0, sigma)(rng);
}

}  // namespace

FrozenLink::FrozenLink(double distance_m, std::vector<PathLossParams> per_channel,
                       RadioConstants radio, std::uint64_t seed)
    : distance_m_(distance_m), per_channel_(std::move(per_channel)), radio_(radio), rng_(seed) {
  if (!(distance_m_ > 0.0)) throw std::invalid_argument("distance must be positive");
  if (per_channel_.empty()) throw std::invalid_argument("need at least one channel");
}

TransmissionOutcome FrozenLink::transmit(const LoRaParams& p) {
  const PathLossParams& pl = per_channel_.at(p.channel);
  Transmission t;
  t.params = p;
  t.rssi_dbm = phy::rssi_dbm(p.tp_dbm, distance_m_, pl, shadow_sigma_draw(rng_, pl.shadow_sigma_db));
  const double noise =
      phy::thermal_noise_dbm(radio_) + shadow_sigma_draw(rng_, radio_.awgn_sigma_db);
  return {!signal_lost(t, {}, noise, CollisionConfig{}, radio_), p};
}

namespace {

double normal_cdf(double x, double sigma) {
  if (sigma == 0.0) return x >= 0.0 ? 1.0 : 0.0;
  return 0.5 * std::erfc(-x / (sigma * std::numbers::sqrt2));
}

}  // namespace

double FrozenLink::success_probability(const LoRaParams& p) const {
  const PathLossParams& pl = per_channel_.at(p.channel);
  // rssi = m - X, X ~ N(0, s1); noise = floor + Y, Y ~ N(0, s2).
  // Delivered iff X <= m - RS and Y <= m - X - thr - floor.
  const double m = phy::rssi_dbm(p.tp_dbm, distance_m_, pl, 0.0);
  const double rs = phy::receiver_sensitivity_dbm(p.sf, radio_.bandwidth_hz);
  const double thr = phy::sinr_threshold_db(p.sf);
  const double floor = phy::thermal_noise_dbm(radio_);
  const double s1 = pl.shadow_sigma_db;
  const double s2 = radio_.awgn_sigma_db;
  auto snr_ok = [&](double x) { return normal_cdf(m - x - thr - floor, s2); };
  if (s1 == 0.0) return m >= rs ? snr_ok(0.0) : 0.0;

  const double lo = -12.0 * s1;
  const double hi = std::min(12.0 * s1, m - rs);
  if (hi <= lo) return 0.0;
  // composite Simpson on the shadowing density times the noise CDF
  const int n = 4000;
  const double h = (hi - lo) / n;
  const double norm = 1.0 / (s1 * std::sqrt(2.0 * std::numbers::pi));
  auto f = [&](double x) { return norm * std::exp(-0.5 * (x / s1) * (x / s1)) * snr_ok(x); };
  double sum = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) sum += f(lo + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return std::clamp(sum * h / 3.0, 0.0, 1.0);
}

double FrozenLink::expected_reward(const LoRaParams& p, RewardModel model,
                                   const AgentConfig& cfg) const {
  const double ps = success_probability(p);
  return ps * bandit::super_arm_reward(model, {true, p}, cfg) +
         (1.0 - ps) * bandit::super_arm_reward(model, {false, p}, cfg);
}

}  // namespace lorasim
