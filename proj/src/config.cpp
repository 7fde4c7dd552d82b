#include "lorasim/config.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>

namespace lorasim {

using nlohmann::json;

namespace {

// Reads keys off one JSON object and rejects anything it did not consume.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }

  void read_optional(const char* key, std::optional<double>& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    const auto& v = j_.at(key);
    if (v.is_null()) {
      out.reset();
    } else if (v.is_number()) {
      out = v.get<double>();
    } else {
      throw ConfigError(where_ + "." + key + ": expected a number or null");
    }
  }

  const json* child(const char* key) {
    if (!j_.contains(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }

  [[nodiscard]] std::string path(const char* key) const { return where_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(where_ + ": unknown key '" + key + "'");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

PathLossParams path_loss_from_json(const json& j, const std::string& where, PathLossParams base) {
  ObjectReader r(j, where);
  r.read("ref_loss_db", base.ref_loss_db);
  r.read("ref_distance_m", base.ref_distance_m);
  r.read("exponent", base.exponent);
  r.read("shadow_sigma_db", base.shadow_sigma_db);
  r.finish();
  return base;
}

json to_json(const PathLossParams& p) {
  return {{"ref_loss_db", p.ref_loss_db},
          {"ref_distance_m", p.ref_distance_m},
          {"exponent", p.exponent},
          {"shadow_sigma_db", p.shadow_sigma_db}};
}

RadioConstants radio_from_json(const json& j) {
  RadioConstants c;
  ObjectReader r(j, "scenario.radio");
  r.read("bandwidth_hz", c.bandwidth_hz);
  r.read("coding_rate", c.coding_rate);
  r.read("preamble_symbols", c.preamble_symbols);
  r.read("crc", c.crc);
  r.read("implicit_header", c.implicit_header);
  r.read("low_dr_opt", c.low_dr_opt);
  r.read("noise_figure_db", c.noise_figure_db);
  r.read("awgn_sigma_db", c.awgn_sigma_db);
  r.finish();
  return c;
}

json to_json(const RadioConstants& c) {
  return {{"bandwidth_hz", c.bandwidth_hz},       {"coding_rate", c.coding_rate},
          {"preamble_symbols", c.preamble_symbols}, {"crc", c.crc},
          {"implicit_header", c.implicit_header}, {"low_dr_opt", c.low_dr_opt},
          {"noise_figure_db", c.noise_figure_db}, {"awgn_sigma_db", c.awgn_sigma_db}};
}

TimingMode timing_from_string(const std::string& s) {
  if (s == "whole-packet") return TimingMode::WholePacket;
  if (s == "critical-section") return TimingMode::CriticalSection;
  throw ConfigError("unknown timing mode: " + s);
}

std::string to_string(TimingMode m) {
  return m == TimingMode::WholePacket ? "whole-packet" : "critical-section";
}

RewardModel reward_model_from_string(const std::string& s) {
  if (s == "success") return RewardModel::SuccessIndicator;
  if (s == "cf-sf-tp") return RewardModel::CfSfTp;
  if (s == "sf-tp") return RewardModel::SfTp;
  throw ConfigError("unknown reward model: " + s);
}

std::string to_string(RewardModel m) {
  switch (m) {
    case RewardModel::SuccessIndicator: return "success";
    case RewardModel::CfSfTp: return "cf-sf-tp";
    case RewardModel::SfTp: return "sf-tp";
  }
  return "success";
}

ScenarioConfig scenario_from_json(const json& j) {
  ScenarioConfig s;
  ObjectReader r(j, "scenario");
  r.read("n_nodes", s.n_nodes);
  r.read("radius_m", s.radius_m);
  r.read("topology_seed", s.topology_seed);
  r.read("traffic_seed", s.traffic_seed);
  r.read("channel_seed", s.channel_seed);
  r.read("mean_interval_s", s.mean_interval_s);
  r.read("payload_bytes", s.payload_bytes);
  r.read("duration_h", s.duration_h);
  r.read("window_h", s.window_h);
  r.read("alpha1", s.alpha1);
  r.read("alpha2", s.alpha2);
  r.read_optional("ee_scale", s.ee_scale);
  r.read("probe_packets", s.probe_packets);
  r.read("pdr_min", s.pdr_min);
  r.read("include_setup_in_metrics", s.include_setup_in_metrics);
  r.read_optional("regret_optimal_reward", s.regret_optimal_reward);
  r.read("record_transmissions", s.record_transmissions);
  r.read("record_rewards", s.record_rewards);
  std::string energy = to_string(s.energy);
  r.read("energy_convention", energy);
  s.energy = energy_convention_from_string(energy);

  if (const json* pl = r.child("path_loss")) {
    s.path_loss = path_loss_from_json(*pl, r.path("path_loss"), s.path_loss);
  }
  if (const json* radio = r.child("radio")) s.radio = radio_from_json(*radio);
  if (const json* col = r.child("collision")) {
    ObjectReader cr(*col, r.path("collision"));
    cr.read("capture_threshold_db", s.collision.capture_threshold_db);
    std::string timing = to_string(s.collision.timing);
    cr.read("timing", timing);
    s.collision.timing = timing_from_string(timing);
    cr.finish();
  }
  if (const json* profiles = r.child("channel_profiles")) {
    if (!profiles->is_array()) throw ConfigError("scenario.channel_profiles: expected an array");
    for (std::size_t i = 0; i < profiles->size(); ++i) {
      const std::string where = "scenario.channel_profiles[" + std::to_string(i) + "]";
      ObjectReader pr(profiles->at(i), where);
      ChannelProfile profile{s.path_loss, {}};
      if (const json* init = pr.child("initial")) {
        profile.initial = path_loss_from_json(*init, where + ".initial", s.path_loss);
      }
      if (const json* sws = pr.child("switches")) {
        if (!sws->is_array()) throw ConfigError(where + ".switches: expected an array");
        for (const auto& sw : *sws) {
          ObjectReader swr(sw, where + ".switches");
          ChannelSwitch cs{0.0, profile.initial};
          swr.read("time_h", cs.time_h);
          if (const json* p = swr.child("params")) {
            cs.params = path_loss_from_json(*p, where + ".switches.params", profile.initial);
          }
          swr.finish();
          profile.switches.push_back(cs);
        }
      }
      pr.finish();
      s.channel_profiles.push_back(std::move(profile));
    }
  }
  if (const json* pos = r.child("positions")) {
    if (pos->is_null()) {
      s.positions.reset();
    } else {
      try {
        std::vector<Position> points;
        for (const auto& p : *pos) points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        s.positions = std::move(points);
      } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario.positions: ") + e.what());
      }
    }
  }
  r.finish();
  return s;
}

json to_json(const ScenarioConfig& s) {
  json j = {{"n_nodes", s.n_nodes},
            {"radius_m", s.radius_m},
            {"topology_seed", s.topology_seed},
            {"traffic_seed", s.traffic_seed},
            {"channel_seed", s.channel_seed},
            {"mean_interval_s", s.mean_interval_s},
            {"payload_bytes", s.payload_bytes},
            {"duration_h", s.duration_h},
            {"window_h", s.window_h},
            {"alpha1", s.alpha1},
            {"alpha2", s.alpha2},
            {"ee_scale", s.ee_scale ? json(*s.ee_scale) : json(nullptr)},
            {"energy_convention", to_string(s.energy)},
            {"path_loss", to_json(s.path_loss)},
            {"radio", to_json(s.radio)},
            {"collision",
             {{"capture_threshold_db", s.collision.capture_threshold_db},
              {"timing", to_string(s.collision.timing)}}},
            {"probe_packets", s.probe_packets},
            {"pdr_min", s.pdr_min},
            {"include_setup_in_metrics", s.include_setup_in_metrics},
            {"regret_optimal_reward",
             s.regret_optimal_reward ? json(*s.regret_optimal_reward) : json(nullptr)},
            {"record_transmissions", s.record_transmissions},
            {"record_rewards", s.record_rewards}};
  if (!s.channel_profiles.empty()) {
    json profiles = json::array();
    for (const auto& p : s.channel_profiles) {
      json switches = json::array();
      for (const auto& sw : p.switches) {
        switches.push_back({{"time_h", sw.time_h}, {"params", to_json(sw.params)}});
      }
      profiles.push_back({{"initial", to_json(p.initial)}, {"switches", switches}});
    }
    j["channel_profiles"] = profiles;
  }
  if (s.positions) {
    json pts = json::array();
    for (const auto& p : *s.positions) pts.push_back({p.x, p.y});
    j["positions"] = pts;
  }
  return j;
}

AgentConfig agent_config_from_json(const json& j) {
  AgentConfig c;
  ObjectReader r(j, "agent_config");
  r.read("exploration_weight", c.exploration_weight);
  r.read("sf_metric_factor", c.sf_metric_factor);
  r.read("tp_metric_factor", c.tp_metric_factor);
  r.read("channels_mhz", c.actions.channels_mhz);
  r.read("sfs", c.actions.sfs);
  r.read("tps_dbm", c.actions.tps_dbm);
  r.finish();
  return c;
}

json to_json(const AgentConfig& c) {
  return {{"exploration_weight", c.exploration_weight},
          {"sf_metric_factor", c.sf_metric_factor},
          {"tp_metric_factor", c.tp_metric_factor},
          {"channels_mhz", c.actions.channels_mhz},
          {"sfs", c.actions.sfs},
          {"tps_dbm", c.actions.tps_dbm}};
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

json histogram(const std::vector<std::uint64_t>& counts, const std::vector<std::string>& labels) {
  json h = json::object();
  for (std::size_t i = 0; i < counts.size(); ++i) h[labels[i]] = counts[i];
  return h;
}

json window_json(const WindowMetrics& w) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return {{"start_h", w.start_h}, {"end_h", w.end_h},   {"sent", w.sent},
          {"received", w.received}, {"pdr", opt(w.pdr)}, {"ee", w.ee},
          {"utility", opt(w.utility)}, {"regret", opt(w.regret)}, {"energy_mj", w.energy_mj}};
}

}  // namespace

EnergyConvention energy_convention_from_string(const std::string& s) {
  if (s == "physical-milliwatt" || s == "physical") return EnergyConvention::PhysicalMilliwatt;
  if (s == "paper-literal" || s == "literal") return EnergyConvention::PaperLiteral;
  throw ConfigError("unknown energy convention: " + s);
}

std::string to_string(EnergyConvention e) {
  return e == EnergyConvention::PhysicalMilliwatt ? "physical-milliwatt" : "paper-literal";
}

namespace {

RunConfig parse_run_config(const json& j) {
  RunConfig c;
  ObjectReader r(j, "config");
  std::string agent = to_string(c.agent);
  r.read("agent", agent);
  c.agent = agent_kind_from_string(agent);
  if (const json* s = r.child("scenario")) c.scenario = scenario_from_json(*s);
  if (const json* a = r.child("agent_config")) c.agent_config = agent_config_from_json(*a);
  if (const json* p = r.child("static_params"); p && !p->is_null()) {
    ObjectReader pr(*p, "config.static_params");
    LoRaParams params;
    pr.read("channel", params.channel);
    pr.read("sf", params.sf);
    pr.read("tp_dbm", params.tp_dbm);
    pr.finish();
    c.static_params = params;
  }
  std::string model = to_string(c.static_reward_model);
  r.read("static_reward_model", model);
  c.static_reward_model = reward_model_from_string(model);
  if (const json* plan = r.child("channel_plan"); plan && !plan->is_null()) {
    try {
      c.channel_plan = channel_plan_from_json(*plan);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config.channel_plan: ") + e.what());
    }
  }
  r.finish();
  return c;
}

}  // namespace

RunConfig run_config_from_json(const json& j) {
  RunConfig c = parse_run_config(j);
  c.validate();
  return c;
}

json to_json(const RunConfig& c) {
  json j = {{"agent", to_string(c.agent)},
            {"scenario", to_json(c.scenario)},
            {"agent_config", to_json(c.agent_config)},
            {"static_reward_model", to_string(c.static_reward_model)}};
  if (c.static_params) {
    j["static_params"] = {{"channel", c.static_params->channel},
                          {"sf", c.static_params->sf},
                          {"tp_dbm", c.static_params->tp_dbm}};
  }
  if (c.channel_plan) j["channel_plan"] = to_json(*c.channel_plan);
  return j;
}

void ExperimentSpec::validate() const {
  if (agents.empty()) throw ConfigError("experiment needs at least one agent");
  if (seeds.empty()) throw ConfigError("experiment needs at least one seed");
  if (output_dir.empty()) throw ConfigError("experiment needs an output_dir");
  if (sweep) {
    if (sweep->axis != "n_nodes" && sweep->axis != "radius_m") {
      throw ConfigError("sweep axis must be n_nodes or radius_m");
    }
    if (sweep->values.empty()) throw ConfigError("sweep needs at least one value");
    for (double v : sweep->values) {
      if (!(v > 0.0)) throw ConfigError("sweep values must be positive");
      if (sweep->axis == "n_nodes" && v != std::floor(v)) {
        throw ConfigError("n_nodes sweep values must be integers");
      }
    }
  }
  for (AgentKind a : agents) {
    RunConfig probe = base;
    probe.agent = a;
    if (sweep && sweep->axis == "n_nodes") probe.scenario.n_nodes = static_cast<std::size_t>(sweep->values.front());
    if (sweep && sweep->axis == "radius_m") probe.scenario.radius_m = sweep->values.front();
    if (probe.scenario.positions && sweep && sweep->axis == "n_nodes") {
      throw ConfigError("fixed positions cannot be combined with an n_nodes sweep");
    }
    probe.validate();
  }
}

ExperimentSpec experiment_from_json(const json& j) {
  ExperimentSpec spec;
  ObjectReader r(j, "experiment");
  if (const json* p = r.child("preset"); p && !p->is_null()) {
    spec = preset(p->get<std::string>());
  }
  // explicit sections override the preset wholesale
  json run = to_json(spec.base);
  for (const char* key :
       {"scenario", "agent_config", "static_params", "static_reward_model", "channel_plan"}) {
    if (const json* section = r.child(key)) run[key] = *section;
  }
  spec.base = parse_run_config(run);
  if (const json* agents = r.child("agents")) {
    spec.agents.clear();
    for (const auto& a : *agents) spec.agents.push_back(agent_kind_from_string(a.get<std::string>()));
  }
  r.read("seeds", spec.seeds);
  if (const json* sw = r.child("sweep")) {
    if (sw->is_null()) {
      spec.sweep.reset();
    } else {
      ObjectReader sr(*sw, "experiment.sweep");
      Sweep sweep;
      sr.read("axis", sweep.axis);
      sr.read("values", sweep.values);
      sr.finish();
      spec.sweep = sweep;
    }
  }
  r.read("output_dir", spec.output_dir);
  r.finish();
  spec.validate();
  return spec;
}

json to_json(const ExperimentSpec& spec) {
  json agents = json::array();
  for (AgentKind a : spec.agents) agents.push_back(to_string(a));
  json j = {{"preset", spec.preset.empty() ? json(nullptr) : json(spec.preset)},
            {"scenario", to_json(spec.base.scenario)},
            {"agent_config", to_json(spec.base.agent_config)},
            {"agents", agents},
            {"seeds", spec.seeds},
            {"output_dir", spec.output_dir}};
  j["sweep"] = spec.sweep ? json{{"axis", spec.sweep->axis}, {"values", spec.sweep->values}}
                          : json(nullptr);
  const json base = to_json(spec.base);
  j["static_reward_model"] = base["static_reward_model"];
  j["static_params"] = base.value("static_params", json(nullptr));
  j["channel_plan"] = base.value("channel_plan", json(nullptr));
  return j;
}

std::vector<ChannelProfile> flip_profiles(const std::vector<double>& before,
                                          const std::vector<double>& after, double switch_h,
                                          const PathLossParams& base) {
  if (before.size() != after.size()) throw std::invalid_argument("profile tables differ in size");
  std::vector<ChannelProfile> out;
  for (std::size_t i = 0; i < before.size(); ++i) {
    ChannelProfile p{base, {}};
    p.initial.ref_loss_db = before[i];
    PathLossParams flipped = base;
    flipped.ref_loss_db = after[i];
    p.switches.push_back({switch_h, flipped});
    out.push_back(p);
  }
  return out;
}

void apply_seed(ScenarioConfig& s, std::uint64_t seed) {
  s.topology_seed = seed * 1000 + 1;
  s.traffic_seed = seed * 1000 + 2;
  s.channel_seed = seed * 1000 + 3;
}

std::vector<std::string> preset_names() {
  return {"stationary", "fig4", "fig6", "fig7", "fig8-9"};
}

ExperimentSpec preset(const std::string& name) {
  ExperimentSpec spec;
  spec.preset = name;
  spec.seeds = {1, 2, 3, 4, 5};
  spec.output_dir = "lorasim-" + name;
  auto& sc = spec.base.scenario;
  sc.duration_h = 2000.0;
  const std::vector<AgentKind> all{AgentKind::Random, AgentKind::NaiveMab, AgentKind::DLoRa,
                                   AgentKind::CDLoRa};
  if (name == "stationary") {
    spec.agents = all;
  } else if (name == "fig4") {
    spec.agents = all;
    spec.sweep = Sweep{"n_nodes", {50, 100, 150, 200, 250}};
  } else if (name == "fig6") {
    spec.agents = all;
    sc.n_nodes = 100;
    spec.sweep = Sweep{"radius_m", {1000, 1500, 2000, 2500, 3000}};
  } else if (name == "fig7") {
    spec.agents = {AgentKind::NaiveMab, AgentKind::DLoRa};
    sc.n_nodes = 100;
  } else if (name == "fig8-9") {
    spec.agents = {AgentKind::NaiveMab, AgentKind::DLoRa, AgentKind::CDLoRa};
    sc.n_nodes = 100;
    sc.channel_profiles = flip_profiles({136, 134, 132, 130, 128, 126, 124, 122},
                                        {122, 124, 126, 128, 130, 132, 134, 136}, 1000.0,
                                        sc.path_loss);
  } else {
    throw ConfigError("unknown preset: " + name);
  }
  return spec;
}

void write_timeseries_csv(const MetricsReport& report, std::ostream& out) {
  out << kTimeseriesHeader << '\n' << kTimeseriesColumns << '\n';
  for (const auto& w : report.windows) {
    out << fmt(w.end_h) << ',' << w.sent << ',' << w.received << ',';
    if (w.pdr) out << fmt(*w.pdr);
    out << ',' << fmt(w.ee) << ',';
    if (w.utility) out << fmt(*w.utility);
    out << ',';
    if (w.regret) out << fmt(*w.regret);
    out << '\n';
  }
}

json summary_json(const MetricsReport& report) {
  const ActionSets& sets = report.actions;
  std::vector<std::string> ch_labels, sf_labels, tp_labels;
  for (double f : sets.channels_mhz) ch_labels.push_back(arm_label(f));
  for (int sf : sets.sfs) sf_labels.push_back(std::to_string(sf));
  for (int tp : sets.tps_dbm) tp_labels.push_back(std::to_string(tp));

  const auto pdr = report.pdr();
  json j = {{"format", "lorasim-summary/1"},
            {"agent", report.agent},
            {"totals",
             {{"sent", report.total_sent},
              {"received", report.gateway_received},
              {"pdr", pdr ? json(*pdr) : json(nullptr)},
              {"ee", report.ee()},
              {"energy_mj", report.total_energy_mj}}},
            {"ee_scale", report.ee_scale},
            {"histograms",
             {{"channel", histogram(report.channel_usage, ch_labels)},
              {"sf", histogram(report.sf_usage, sf_labels)},
              {"tp", histogram(report.tp_usage, tp_labels)}}}};
  if (const auto* w = report.final_window()) {
    j["final_window"] = window_json(*w);
    j["final_window_histograms"] = {{"channel", histogram(w->channel_usage, ch_labels)},
                                    {"sf", histogram(w->sf_usage, sf_labels)},
                                    {"tp", histogram(w->tp_usage, tp_labels)}};
  } else {
    j["final_window"] = nullptr;
  }
  json nodes = json::array();
  for (const auto& n : report.nodes) {
    nodes.push_back({{"sent", n.sent},
                     {"received", n.received},
                     {"lost", n.lost()},
                     {"lost_collision", n.lost_collision},
                     {"lost_signal", n.lost_signal},
                     {"energy_mj", n.energy_mj}});
  }
  j["nodes"] = nodes;
  if (report.setup) {
    j["setup"] = {{"sent", report.setup->sent},
                  {"received", report.setup->received},
                  {"energy_mj", report.setup->energy_mj},
                  {"duration_s", report.setup->duration_s}};
  }
  if (report.channel_plan) j["channel_plan"] = to_json(*report.channel_plan);
  return j;
}

}  // namespace lorasim
