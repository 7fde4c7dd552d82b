#include "lorasim/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#ifndef LORASIM_VERSION
#define LORASIM_VERSION "0.0.0"
#endif

namespace lorasim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ArtifactError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Stats {
  double mean = 0.0;
  double sd = 0.0;
};

Stats stats(const std::vector<double>& xs) {
  Stats s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::size_t ExperimentResult::failures() const {
  std::size_t n = 0;
  for (const auto& r : runs) n += r.ok ? 0 : 1;
  return n;
}

std::string code_version() { return LORASIM_VERSION; }

std::string config_hash(const ExperimentSpec& spec) {
  const std::string text = to_json(spec).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string run_stem(AgentKind agent, std::uint64_t seed, const std::optional<Sweep>& sweep,
                     std::optional<double> value) {
  std::string stem = to_string(agent) + "__seed" + std::to_string(seed);
  if (sweep && value) stem += "__" + sweep->axis + fmt(*value);
  return stem;
}

RunConfig expand_run(const ExperimentSpec& spec, AgentKind agent, std::uint64_t seed,
                     std::optional<double> sweep_value) {
  RunConfig c = spec.base;
  c.agent = agent;
  apply_seed(c.scenario, seed);
  if (spec.sweep && sweep_value) {
    if (spec.sweep->axis == "n_nodes") {
      c.scenario.n_nodes = static_cast<std::size_t>(*sweep_value);
    } else {
      c.scenario.radius_m = *sweep_value;
    }
  }
  return c;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

ExperimentResult run_experiment(const ExperimentSpec& spec, unsigned jobs, std::ostream* log) {
  spec.validate();
  const fs::path root(spec.output_dir);
  fs::create_directories(root / "runs");

  ExperimentResult result;
  result.output_dir = spec.output_dir;
  result.config_hash = config_hash(spec);

  std::vector<std::optional<double>> points;
  if (spec.sweep) {
    for (double v : spec.sweep->values) points.emplace_back(v);
  } else {
    points.emplace_back(std::nullopt);
  }
  for (const auto& point : points) {
    for (AgentKind agent : spec.agents) {
      for (std::uint64_t seed : spec.seeds) {
        RunRecord r;
        r.agent = agent;
        r.seed = seed;
        r.sweep_value = point;
        r.stem = run_stem(agent, seed, spec.sweep, point);
        result.runs.push_back(r);
      }
    }
  }

  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < result.runs.size(); i = next++) {
      RunRecord& r = result.runs[i];
      try {
        const RunConfig cfg = expand_run(spec, r.agent, r.seed, r.sweep_value);
        const MetricsReport report = engine::run(cfg);
        std::ostringstream csv;
        write_timeseries_csv(report, csv);
        json summary = summary_json(report);
        summary["run"] = {{"stem", r.stem},
                          {"agent", to_string(r.agent)},
                          {"seed", r.seed},
                          {"sweep_axis", spec.sweep ? json(spec.sweep->axis) : json(nullptr)},
                          {"sweep_value", opt_json(r.sweep_value)},
                          {"regret_configured", cfg.scenario.regret_optimal_reward.has_value()}};
        summary["config"] = to_json(cfg);
        const fs::path base = root / "runs" / r.stem;
        write_file_atomic(base.string() + ".csv", csv.str());
        write_file_atomic(base.string() + ".json", summary.dump(2) + "\n");
        r.ok = true;
      } catch (const std::exception& e) {
        r.ok = false;
        r.error = e.what();
      }
      if (log) {
        std::lock_guard lock(log_mutex);
        *log << (r.ok ? "done   " : "FAILED ") << r.stem;
        if (!r.ok) *log << ": " << r.error;
        *log << '\n';
      }
    }
  };
  const unsigned n_threads =
      std::max(1u, std::min<unsigned>(jobs == 0 ? 1 : jobs,
                                      static_cast<unsigned>(result.runs.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  json runs = json::array();
  for (const auto& r : result.runs) {
    runs.push_back({{"stem", r.stem},
                    {"agent", to_string(r.agent)},
                    {"seed", r.seed},
                    {"sweep_value", opt_json(r.sweep_value)},
                    {"status", r.ok ? "ok" : "failed"},
                    {"error", r.ok ? json(nullptr) : json(r.error)},
                    {"csv", "runs/" + r.stem + ".csv"},
                    {"summary", "runs/" + r.stem + ".json"}});
  }
  const json manifest = {{"format", kManifestFormat},
                         {"code_version", code_version()},
                         {"config_hash", result.config_hash},
                         {"seeds", spec.seeds},
                         {"spec", to_json(spec)},
                         {"runs", runs}};
  write_file_atomic((root / "manifest.json").string(), manifest.dump(2) + "\n");

  if (result.failures() < result.runs.size()) {
    std::ostringstream agg;
    write_aggregate_csv(summarize(spec.output_dir), agg);
    write_file_atomic((root / "aggregate.csv").string(), agg.str());
  }
  return result;
}

Summary summarize(const std::string& dir) {
  const fs::path root(dir);
  const fs::path manifest_path = root / "manifest.json";
  if (!fs::exists(manifest_path)) {
    throw ArtifactError("missing files in " + dir + ":\n  " + manifest_path.string());
  }
  json manifest;
  try {
    manifest = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    throw ArtifactError("unreadable manifest " + manifest_path.string() + ": " + e.what());
  }

  Summary summary;
  std::vector<std::string> missing;
  struct Cell {
    std::string agent;
    std::optional<double> point;
    std::vector<double> sent, received, pdr, ee, regret;
  };
  std::vector<Cell> cells;
  std::map<std::pair<std::string, double>, std::size_t> index;
  try {
    const json& spec = manifest.at("spec");
    if (!spec.at("sweep").is_null()) summary.sweep_axis = spec.at("sweep").at("axis").get<std::string>();
    std::vector<json> loaded;
    for (const auto& run : manifest.at("runs")) {
      if (run.at("status") != "ok") continue;
      for (const char* key : {"csv", "summary"}) {
        const fs::path p = root / run.at(key).get<std::string>();
        if (!fs::exists(p)) missing.push_back(p.string());
      }
    }
    if (!missing.empty()) {
      std::string msg = "missing files in " + dir + ":";
      for (const auto& m : missing) msg += "\n  " + m;
      throw ArtifactError(msg);
    }
    for (const auto& run : manifest.at("runs")) {
      if (run.at("status") != "ok") continue;
      const json s = json::parse(read_file(root / run.at("summary").get<std::string>()));
      const std::string agent = run.at("agent").get<std::string>();
      std::optional<double> point;
      if (!run.at("sweep_value").is_null()) point = run.at("sweep_value").get<double>();
      const auto key = std::make_pair(agent, point.value_or(0.0));
      auto it = index.find(key);
      if (it == index.end()) {
        it = index.emplace(key, cells.size()).first;
        cells.push_back({agent, point, {}, {}, {}, {}, {}});
      }
      Cell& c = cells[it->second];
      const json& w = s.at("final_window");
      if (w.is_null()) continue;
      c.sent.push_back(w.at("sent").get<double>());
      c.received.push_back(w.at("received").get<double>());
      if (!w.at("pdr").is_null()) c.pdr.push_back(w.at("pdr").get<double>());
      c.ee.push_back(w.at("ee").get<double>());
      if (!w.at("regret").is_null()) c.regret.push_back(w.at("regret").get<double>());
    }
  } catch (const json::exception& e) {
    throw ArtifactError("malformed artifact in " + dir + ": " + e.what());
  }

  for (const auto& c : cells) {
    SummaryRow row;
    row.agent = c.agent;
    row.sweep_value = c.point;
    row.seeds = c.ee.size();
    row.sent_mean = stats(c.sent).mean;
    row.received_mean = stats(c.received).mean;
    if (!c.pdr.empty()) {
      const Stats p = stats(c.pdr);
      row.pdr_mean = p.mean;
      row.pdr_std = p.sd;
    }
    const Stats e = stats(c.ee);
    row.ee_mean = e.mean;
    row.ee_std = e.sd;
    if (!c.regret.empty()) row.regret_mean = stats(c.regret).mean;
    summary.rows.push_back(row);
  }
  return summary;
}

void write_aggregate_csv(const Summary& summary, std::ostream& out) {
  out << kAggregateHeader << '\n'
      << "agent," << summary.sweep_axis.value_or("sweep")
      << ",seeds,sent_mean,received_mean,pdr_mean,pdr_std,ee_mean,ee_std,regret_mean\n";
  for (const auto& r : summary.rows) {
    out << r.agent << ',';
    if (r.sweep_value) out << fmt(*r.sweep_value);
    out << ',' << r.seeds << ',' << fmt(r.sent_mean) << ',' << fmt(r.received_mean) << ',';
    if (r.pdr_mean) out << fmt(*r.pdr_mean);
    out << ',';
    if (r.pdr_std) out << fmt(*r.pdr_std);
    out << ',' << fmt(r.ee_mean) << ',' << fmt(r.ee_std) << ',';
    if (r.regret_mean) out << fmt(*r.regret_mean);
    out << '\n';
  }
}

void print_summary(const Summary& summary, std::ostream& out) {
  const bool regret = std::any_of(summary.rows.begin(), summary.rows.end(),
                                  [](const SummaryRow& r) { return r.regret_mean.has_value(); });
  char line[256];
  std::snprintf(line, sizeof line, "%-10s %10s %5s %12s %12s %16s %20s", "agent",
                summary.sweep_axis.value_or("").c_str(), "seeds", "Sent", "Received",
                "PDR", "EE (bits/mJ)");
  out << line << (regret ? "  Regret" : "") << '\n';
  for (const auto& r : summary.rows) {
    std::string pdr = "n/a";
    if (r.pdr_mean) {
      char b[64];
      std::snprintf(b, sizeof b, "%.4f±%.4f", *r.pdr_mean, r.pdr_std.value_or(0.0));
      pdr = b;
    }
    char ee[64];
    std::snprintf(ee, sizeof ee, "%.4g±%.3g", r.ee_mean, r.ee_std);
    std::snprintf(line, sizeof line, "%-10s %10s %5zu %12.1f %12.1f %16s %20s", r.agent.c_str(),
                  r.sweep_value ? fmt(*r.sweep_value).c_str() : "", r.seeds, r.sent_mean,
                  r.received_mean, pdr.c_str(), ee);
    out << line;
    if (regret) {
      if (r.regret_mean) {
        out << "  " << fmt(*r.regret_mean);
      } else {
        out << "  n/a";
      }
    }
    out << '\n';
  }
  out << "(final-window means over seeds)\n";
}

}  // namespace lorasim
