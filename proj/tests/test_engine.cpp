#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "lorasim/config.hpp"
#include "lorasim/engine.hpp"

using namespace lorasim;

namespace {

RunConfig small_run(AgentKind agent, std::size_t nodes, double hours) {
  RunConfig c;
  c.agent = agent;
  c.scenario.n_nodes = nodes;
  c.scenario.duration_h = hours;
  c.scenario.window_h = hours > 0.0 ? hours / 4.0 : 1.0;
  return c;
}

RunConfig single_node(int sf, int tp, double distance_m, double sigma, double hours) {
  RunConfig c = small_run(AgentKind::Static, 1, hours);
  c.static_params = LoRaParams{0, sf, tp};
  c.scenario.path_loss.shadow_sigma_db = sigma;
  c.scenario.positions = std::vector<Position>{{distance_m, 0.0}};
  return c;
}

double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace

TEST_CASE("node placement") {
  const auto one = engine::place_nodes(1, 500.0, 7);
  REQUIRE(one.size() == 1);
  CHECK(one[0].distance_to_origin() <= 500.0);

  const auto pts = engine::place_nodes(100000, 1000.0, 3);
  double mean = 0.0;
  for (const auto& p : pts) {
    REQUIRE(p.distance_to_origin() <= 1000.0);
    mean += p.distance_to_origin();
  }
  mean /= pts.size();
  CHECK(std::abs(mean - 2000.0 / 3.0) < 0.01 * 2000.0 / 3.0);

  // quadrant balance of an area-uniform disk
  std::array<int, 4> quadrant{};
  for (const auto& p : pts) quadrant[(p.x >= 0 ? 0 : 1) + (p.y >= 0 ? 0 : 2)]++;
  for (int q : quadrant) CHECK(std::abs(q - 25000) < 800);

  CHECK(engine::place_nodes(50, 1000.0, 9) == engine::place_nodes(50, 1000.0, 9));
  CHECK(engine::place_nodes(50, 1000.0, 9) != engine::place_nodes(50, 1000.0, 10));
}

TEST_CASE("channel schedule") {
  const PathLossParams base;
  const std::vector<double> before{136, 134, 132, 130, 128, 126, 124, 122};
  const std::vector<double> after{122, 124, 126, 128, 130, 132, 134, 136};
  const auto profiles = flip_profiles(before, after, 1000.0, base);
  CHECK(engine::apply_channel_schedule(profiles, 999.0)[0].ref_loss_db == 136.0);
  CHECK(engine::apply_channel_schedule(profiles, 1000.0)[0].ref_loss_db == 122.0);
  CHECK(engine::apply_channel_schedule(profiles, 0.0)[7].ref_loss_db == 122.0);
  CHECK(engine::apply_channel_schedule(profiles, 1500.0)[7].ref_loss_db == 136.0);
  for (const auto& p : engine::apply_channel_schedule(profiles, 1500.0)) {
    CHECK(p.shadow_sigma_db == base.shadow_sigma_db);
    CHECK(p.exponent == base.exponent);
  }

  ScenarioConfig s;
  const auto stationary = engine::resolve_profiles(s, 8);
  for (double t : {0.0, 10.0, 1999.0}) {
    for (const auto& p : engine::apply_channel_schedule(stationary, t)) {
      CHECK(p.ref_loss_db == 128.95);
    }
  }
}

TEST_CASE("pdr ee and utility") {
  CHECK(*engine::compute_pdr(5355, 4330) == doctest::Approx(0.8086).epsilon(1e-4));
  CHECK(*engine::compute_pdr(10, 10) == 1.0);
  CHECK_FALSE(engine::compute_pdr(0, 0).has_value());
  CHECK_THROWS_AS(engine::compute_pdr(3, 4), std::logic_error);

  CHECK(engine::compute_ee(400.0, 2.45) == doctest::Approx(400.0 / 2.45).epsilon(1e-12));
  CHECK(engine::compute_ee(400.0, 2.45) == doctest::Approx(163.27).epsilon(1e-4));
  CHECK(engine::compute_ee(0.0, 5.0) == 0.0);
  CHECK(engine::compute_ee(400.0, 4.9) == doctest::Approx(engine::compute_ee(400.0, 2.45) / 2));
  CHECK_THROWS_AS(engine::compute_ee(400.0, 0.0), std::logic_error);

  CHECK(engine::compute_utility(0.8, 0.0, 1.0, 0.0, 100.0) == doctest::Approx(0.8));
  CHECK(engine::compute_utility(0.0, 100.0, 0.0, 1.0, 100.0) == doctest::Approx(1.0));
  CHECK(engine::compute_utility(0.8, 60.0, 0.5, 0.5, 100.0) == doctest::Approx(0.7));
}

TEST_CASE("configuration errors surface before simulation") {
  RunConfig c = small_run(AgentKind::DLoRa, 5, 1.0);
  c.scenario.n_nodes = 0;
  CHECK_THROWS_AS(engine::run(c), ConfigError);
  c = small_run(AgentKind::DLoRa, 5, 1.0);
  c.scenario.alpha1 = 0.7;
  CHECK_THROWS_AS(engine::run(c), ConfigError);
  c = small_run(AgentKind::Static, 5, 1.0);
  CHECK_THROWS_AS(engine::run(c), ConfigError);
  c = small_run(AgentKind::DLoRa, 2, 1.0);
  c.scenario.positions = std::vector<Position>{{0.0, 0.0}, {10.0, 0.0}};
  CHECK_THROWS_AS(engine::run(c), ConfigError);
  c = small_run(AgentKind::DLoRa, 2, 1.0);
  c.scenario.radio.bandwidth_hz = 200e3;
  CHECK_THROWS_AS(engine::run(c), ConfigError);
  c = small_run(AgentKind::DLoRa, 2, 1.0);
  c.scenario.channel_profiles = flip_profiles({130, 130}, {120, 120}, 1.0, PathLossParams{});
  CHECK_THROWS_AS(engine::run(c), ConfigError);
}

TEST_CASE("zero-duration run is empty") {
  const auto r = engine::run(small_run(AgentKind::DLoRa, 10, 0.0));
  CHECK(r.windows.empty());
  CHECK(r.total_sent == 0);
  CHECK_FALSE(r.pdr().has_value());
  CHECK(r.final_window() == nullptr);
}

TEST_CASE("a lone strong link delivers everything") {
  const auto r = engine::run(single_node(12, 14, 100.0, 0.0, 50.0));
  CHECK(r.total_sent > 1000);
  CHECK(*r.pdr() == 1.0);
  CHECK(r.nodes[0].lost() == 0);

  // at 10 m the SF12 margin is over 5 shadowing sigmas
  const auto shadowed = engine::run(single_node(12, 14, 10.0, 7.8, 50.0));
  CHECK(*shadowed.pdr() == 1.0);
}

TEST_CASE("more transmit power never hurts a lone node") {
  for (double d : {2500.0, 4000.0, 6000.0}) {
    double last = -1.0;
    for (int tp = 2; tp <= 14; tp += 2) {
      const auto r = engine::run(single_node(9, tp, d, 7.8, 20.0));
      const double pdr = *r.pdr();
      CHECK(pdr >= last);
      last = pdr;
    }
  }
}

TEST_CASE("lone-node pdr matches the exact link probability") {
  const double d = 4000.0;
  const auto r = engine::run(single_node(10, 8, d, 7.8, 400.0));
  FrozenLink link(d, std::vector<PathLossParams>(8), RadioConstants{}, 1);
  const double p = link.success_probability({0, 10, 8});
  const double n = static_cast<double>(r.total_sent);
  CHECK(std::abs(*r.pdr() - p) < 4.0 * std::sqrt(p * (1 - p) / n) + 1e-9);
}

TEST_CASE("conservation and window bookkeeping") {
  for (AgentKind kind : {AgentKind::Random, AgentKind::NaiveMab, AgentKind::DLoRa,
                         AgentKind::CDLoRa}) {
    RunConfig c = small_run(kind, 60, 40.0);
    c.scenario.window_h = 7.0;
    const auto r = engine::run(c);
    CHECK(r.windows.size() == 6);
    CHECK(r.windows.back().end_h == 40.0);
    std::uint64_t sent = 0, received = 0, node_received = 0;
    double energy = 0.0;
    for (const auto& t : r.nodes) {
      CHECK(t.sent == t.received + t.lost_collision + t.lost_signal);
      sent += t.sent;
      node_received += t.received;
      energy += t.energy_mj;
    }
    for (const auto& w : r.windows) {
      received += w.received;
      CHECK(w.received <= w.sent);
      CHECK(*w.pdr >= 0.0);
      CHECK(*w.pdr <= 1.0);
      CHECK(w.ee >= 0.0);
      CHECK(std::accumulate(w.sf_usage.begin(), w.sf_usage.end(), std::uint64_t{0}) == w.sent);
      CHECK(std::accumulate(w.tp_usage.begin(), w.tp_usage.end(), std::uint64_t{0}) == w.sent);
      CHECK(std::accumulate(w.channel_usage.begin(), w.channel_usage.end(), std::uint64_t{0}) ==
            w.sent);
    }
    CHECK(sent == r.total_sent);
    CHECK(received == r.gateway_received);
    CHECK(node_received == r.gateway_received);
    CHECK(energy == doctest::Approx(r.total_energy_mj).epsilon(1e-9));
    CHECK(r.total_delivered_bits == 400.0 * r.gateway_received);
    // about one packet per node per 20 s
    const double expected = 60 * 40 * 3600 / 20.0;
    CHECK(std::abs(static_cast<double>(sent) - expected) < 0.1 * expected);
  }
}

TEST_CASE("identical seeds give identical reports") {
  for (AgentKind kind : {AgentKind::Random, AgentKind::DLoRa, AgentKind::CDLoRa}) {
    const RunConfig c = small_run(kind, 40, 20.0);
    const auto a = engine::run(c);
    const auto b = engine::run(c);
    CHECK(summary_json(a).dump() == summary_json(b).dump());
    std::ostringstream ca, cb;
    write_timeseries_csv(a, ca);
    write_timeseries_csv(b, cb);
    CHECK(ca.str() == cb.str());

    RunConfig other = c;
    apply_seed(other.scenario, 2);
    std::ostringstream co;
    write_timeseries_csv(engine::run(other), co);
    CHECK(co.str() != ca.str());
  }
}

TEST_CASE("engine flags agree with a recomputation over the full log") {
  for (TimingMode mode : {TimingMode::WholePacket, TimingMode::CriticalSection}) {
    RunConfig c = small_run(AgentKind::Random, 120, 1.0);
    c.scenario.record_transmissions = true;
    c.scenario.collision.timing = mode;
    c.scenario.mean_interval_s = 5.0;
    const auto r = engine::run(c);
    auto log = r.transmissions;
    REQUIRE(log.size() == r.total_sent);
    std::sort(log.begin(), log.end(),
              [](const auto& a, const auto& b) { return a.start_s < b.start_s; });
    double longest = 0.0;
    for (const auto& t : log) longest = std::max(longest, t.toa_s);

    std::uint64_t collided = 0, lost_signal = 0;
    std::size_t first = 0;
    for (std::size_t i = 0; i < log.size(); ++i) {
      while (log[first].start_s + longest < log[i].start_s) ++first;
      std::vector<Transmission> window;
      for (std::size_t j = first; j < log.size(); ++j) {
        if (log[j].start_s > log[i].end_s()) break;
        if (log[j].end_s() + longest < log[i].start_s) continue;
        if (log[j].params.channel == log[i].params.channel) window.push_back(log[j]);
      }
      const bool c_flag = collides(log[i], window, c.scenario.collision, c.scenario.radio);
      const bool s_flag =
          signal_lost(log[i], window, log[i].noise_dbm, c.scenario.collision, c.scenario.radio);
      REQUIRE(c_flag == log[i].collided);
      REQUIRE(s_flag == log[i].signal_lost);
      collided += c_flag;
      lost_signal += s_flag && !c_flag;
    }
    std::uint64_t tally_c = 0, tally_s = 0;
    for (const auto& t : r.nodes) {
      tally_c += t.lost_collision;
      tally_s += t.lost_signal;
    }
    CHECK(collided == tally_c);
    CHECK(lost_signal == tally_s);
    CHECK(collided > 0);
  }
}

TEST_CASE("nodes never overlap their own transmissions") {
  RunConfig c = small_run(AgentKind::NaiveMab, 5, 10.0);
  c.scenario.record_transmissions = true;
  c.scenario.mean_interval_s = 1.0;
  const auto r = engine::run(c);
  std::vector<double> busy_until(5, 0.0);
  auto log = r.transmissions;
  std::sort(log.begin(), log.end(),
            [](const auto& a, const auto& b) { return a.start_s < b.start_s; });
  for (const auto& t : log) {
    CHECK(t.start_s >= busy_until[t.node_id]);
    busy_until[t.node_id] = t.end_s();
  }
}

TEST_CASE("cd-lora keeps each node on its planned channel") {
  RunConfig c = small_run(AgentKind::CDLoRa, 50, 10.0);
  c.scenario.record_transmissions = true;
  const auto r = engine::run(c);
  REQUIRE(r.channel_plan.has_value());
  REQUIRE(r.setup.has_value());
  CHECK(r.setup->sent > 0);
  for (const auto& t : r.transmissions) {
    REQUIRE(t.params.channel == r.channel_plan->assignment[t.node_id]);
    const auto& allowed = r.channel_plan->pruned_sf[t.node_id];
    REQUIRE(std::find(allowed.begin(), allowed.end(), t.params.sf) != allowed.end());
  }

  // a saved plan reproduces the run without the setup phase
  RunConfig seeded = c;
  seeded.channel_plan = r.channel_plan;
  const auto again = engine::run(seeded);
  CHECK_FALSE(again.setup.has_value());
  CHECK(again.channel_plan->assignment == r.channel_plan->assignment);
}

TEST_CASE("setup cost can be folded into the metrics") {
  RunConfig c = small_run(AgentKind::CDLoRa, 30, 8.0);
  const auto excluded = engine::run(c);
  c.scenario.include_setup_in_metrics = true;
  const auto included = engine::run(c);
  CHECK(included.total_sent == excluded.total_sent + excluded.setup->sent);
  CHECK(included.gateway_received == excluded.gateway_received + excluded.setup->received);
}

TEST_CASE("sf histogram is less concentrated than the max-sf stand-in") {
  // CAASI channel allocation with only SF12 left after pruning
  RunConfig standin = small_run(AgentKind::CDLoRa, 200, 20.0);
  const auto base = engine::run(standin);
  ChannelPlan plan = *base.channel_plan;
  for (auto& sfs : plan.pruned_sf) sfs = {12};
  standin.channel_plan = plan;
  const auto fixed = engine::run(standin);

  const auto dlora = engine::run(small_run(AgentKind::DLoRa, 200, 20.0));
  auto max_share = [](const MetricsReport& r) {
    const auto total = std::accumulate(r.sf_usage.begin(), r.sf_usage.end(), std::uint64_t{0});
    return static_cast<double>(*std::max_element(r.sf_usage.begin(), r.sf_usage.end())) / total;
  };
  CHECK(max_share(fixed) == 1.0);
  CHECK(max_share(dlora) < max_share(fixed));
}

TEST_CASE("regret column accumulates the reward shortfall") {
  RunConfig c = single_node(12, 14, 100.0, 0.0, 40.0);
  c.static_reward_model = RewardModel::CfSfTp;
  c.scenario.record_rewards = true;
  const double optimum = 5.0;
  c.scenario.regret_optimal_reward = optimum;
  const auto r = engine::run(c);
  double expected = 0.0;
  for (float reward : r.node_rewards[0]) expected += optimum - reward;
  CHECK(r.windows.back().regret.value() == doctest::Approx(expected).epsilon(1e-6));
  double last = 0.0;
  for (const auto& w : r.windows) {
    CHECK(*w.regret >= last);
    last = *w.regret;
  }
  RunConfig plain = single_node(12, 14, 100.0, 0.0, 40.0);
  CHECK_FALSE(engine::run(plain).windows.back().regret.has_value());
}

TEST_CASE("exact link probability without receiver noise") {
  RadioConstants radio;
  radio.awgn_sigma_db = 0.0;
  PathLossParams pl;
  for (double d : {500.0, 3000.0, 8000.0, 20000.0}) {
    FrozenLink link(d, std::vector<PathLossParams>(8, pl), radio, 3);
    for (int sf = 7; sf <= 12; ++sf) {
      for (int tp = 2; tp <= 14; tp += 6) {
        const double m = tp - phy::path_loss_db(d, pl, 0.0);
        const double floor = phy::thermal_noise_dbm(radio);
        const double need = std::max(phy::receiver_sensitivity_dbm(sf, 125e3),
                                     floor + phy::sinr_threshold_db(sf));
        const double expected = standard_normal_cdf((m - need) / pl.shadow_sigma_db);
        CHECK(link.success_probability({0, sf, tp}) == doctest::Approx(expected).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("exact link probability agrees with sampling") {
  PathLossParams pl;
  FrozenLink link(5000.0, std::vector<PathLossParams>(8, pl), RadioConstants{}, 17);
  for (int sf : {7, 9, 12}) {
    const LoRaParams p{2, sf, 6};
    const double exact = link.success_probability(p);
    const int n = 100000;
    int ok = 0;
    for (int i = 0; i < n; ++i) ok += link.transmit(p).success;
    const double se = std::sqrt(std::max(exact * (1 - exact), 1e-6) / n);
    CHECK(std::abs(static_cast<double>(ok) / n - exact) < 4.5 * se);
  }
  const AgentConfig cfg;
  const LoRaParams p{0, 9, 6};
  const double ps = link.success_probability(p);
  CHECK(link.expected_reward(p, RewardModel::SuccessIndicator, cfg) == doctest::Approx(ps));
  CHECK(link.expected_reward(p, RewardModel::CfSfTp, cfg) ==
        doctest::Approx(ps * bandit::super_arm_reward(RewardModel::CfSfTp, {true, p}, cfg) +
                        (1 - ps) * bandit::super_arm_reward(RewardModel::CfSfTp, {false, p}, cfg)));
}

TEST_CASE("timeseries csv layout") {
  RunConfig c = small_run(AgentKind::DLoRa, 10, 8.0);
  c.scenario.regret_optimal_reward = 2.0;
  const auto r = engine::run(c);
  std::ostringstream out;
  write_timeseries_csv(r, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == kTimeseriesHeader);
  std::getline(in, line);
  CHECK(line == kTimeseriesColumns);
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 6);
  }
  CHECK(rows == 4);

  const auto s = summary_json(r);
  CHECK(s["format"] == "lorasim-summary/1");
  CHECK(s["agent"] == "d-lora");
  CHECK(s["nodes"].size() == 10);
}
