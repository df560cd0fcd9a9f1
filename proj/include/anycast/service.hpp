#pragma once

// Application plumbing: configuration, run records on disk, and the request
// handlers behind the HTTP API. Handlers take and return JSON so they can be
// exercised without a socket.

#include <openssl/evp.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <sstream>
#include <stop_token>
#include <string>
#include <thread>

#include "replay.hpp"

namespace anycast {

namespace fs = std::filesystem;

inline std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// ---------------------------------------------------------------------------
// AppConfig

inline const char* kConfigEnv = "ANYCAST_CONFIG";
inline const char* kBindEnv = "ANYCAST_BIND";

struct AppConfig {
  std::string topology_path;
  std::string playbook_path;
  std::map<std::string, double> capacities;
  ControllerConfig controller;
  std::string bind = "127.0.0.1:8080";
  std::string data_dir = "data";

  std::string host() const { return bind.substr(0, bind.rfind(':')); }
  int port() const {
    const auto pos = bind.rfind(':');
    if (pos == std::string::npos) throw ValidationError("bind address needs host:port, got " + bind);
    try {
      const int p = std::stoi(bind.substr(pos + 1));
      if (p < 0 || p > 65535) throw std::out_of_range("port");
      return p;
    } catch (const std::exception&) {
      throw ValidationError("bad port in bind address " + bind);
    }
  }
};

inline void validate_config(const AppConfig& c) {
  if (c.topology_path.empty() || !fs::exists(c.topology_path))
    throw ValidationError("topology file not found: " + c.topology_path);
  if (c.playbook_path.empty() || !fs::exists(c.playbook_path))
    throw ValidationError("playbook file not found: " + c.playbook_path);
  if (!(c.controller.eval_interval > 0) || !(c.controller.revert_after > 0) || c.controller.detect_hold < 0)
    throw ValidationError("controller timers must be positive");
  for (const auto& [site, cap] : c.capacities)
    if (!(cap > 0)) throw ValidationError("capacity for " + site + " must be positive");
  (void)c.port();
}

// Relative paths in the file resolve against the file's directory.
inline AppConfig config_from_json(const json& j, const fs::path& base_dir = {}) {
  AppConfig c;
  auto resolve = [&](const std::string& p) {
    if (p.empty()) return p;
    fs::path fp(p);
    return (fp.is_relative() && !base_dir.empty() ? base_dir / fp : fp).string();
  };
  try {
    c.topology_path = resolve(j.at("topology").get<std::string>());
    c.playbook_path = resolve(j.at("playbook").get<std::string>());
    if (j.contains("capacities")) c.capacities = j["capacities"].get<std::map<std::string, double>>();
    if (j.contains("controller")) c.controller = controller_config_from_json(j["controller"]);
    c.bind = j.value("bind", c.bind);
    c.data_dir = resolve(j.value("data_dir", c.data_dir));
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  return c;
}

// `path` may be empty, in which case ANYCAST_CONFIG names the file.
// ANYCAST_BIND overrides the bind address either way.
inline AppConfig load_config(std::string path) {
  if (path.empty()) {
    const char* env = std::getenv(kConfigEnv);
    if (!env || !*env) throw ValidationError(std::string("no config file given and ") + kConfigEnv + " unset");
    path = env;
  }
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError("config " + path + ": " + e.what());
  }
  auto c = config_from_json(j, fs::path(path).parent_path());
  if (const char* b = std::getenv(kBindEnv); b && *b) c.bind = b;
  validate_config(c);
  return c;
}

// ---------------------------------------------------------------------------
// RunRecord: one immutable file per finished replay.

struct RunInputs {
  std::string topology;
  std::string playbook;
  std::string trace;
  std::string options;

  bool operator==(const RunInputs&) const = default;
};

struct RunRecord {
  std::string run_id;
  RunInputs inputs;  // sha256 of the canonical serialization of each input
  json options;      // ReplayOptions, kept so the run can be repeated
  ScenarioReport report;
  std::string created_at;
};

inline RunInputs hash_inputs(const AsGraph& g, const Playbook& pb, const std::vector<TraceEvent>& trace,
                             const ReplayOptions& opt) {
  return {sha256_hex(to_json(g).dump()), sha256_hex(to_json(pb).dump()), sha256_hex(trace_csv(trace)),
          sha256_hex(to_json(opt).dump())};
}

inline json to_json(const RunRecord& r) {
  return {{"run_id", r.run_id},
          {"inputs",
           {{"topology", r.inputs.topology},
            {"playbook", r.inputs.playbook},
            {"trace", r.inputs.trace},
            {"options", r.inputs.options}}},
          {"options", r.options},
          {"report", to_json(r.report)},
          {"created_at", r.created_at}};
}

inline RunRecord run_record_from_json(const json& j) {
  try {
    RunRecord r;
    r.run_id = j.at("run_id").get<std::string>();
    const auto& in = j.at("inputs");
    r.inputs = {in.at("topology").get<std::string>(), in.at("playbook").get<std::string>(),
                in.at("trace").get<std::string>(), in.at("options").get<std::string>()};
    r.options = j.at("options");
    r.report = report_from_json(j.at("report"));
    r.created_at = j.at("created_at").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("run record: ") + e.what());
  }
}

class RunStore {
 public:
  explicit RunStore(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_ / "runs"); }

  const fs::path& dir() const { return dir_; }

  fs::path path_of(const std::string& run_id) const { return dir_ / "runs" / (run_id + ".json"); }

  // Writes the record under a fresh run_id and appends it to the index.
  RunRecord save(RunRecord r) {
    std::lock_guard lock(mu_);
    const std::string stem = "run-" + r.inputs.trace.substr(0, 8) + "-" + std::to_string(util::now_unix());
    for (int n = 0;; ++n) {
      r.run_id = n == 0 ? stem : stem + "-" + std::to_string(n);
      if (!fs::exists(path_of(r.run_id))) break;
    }
    {
      std::ofstream out(path_of(r.run_id), std::ios::binary);
      if (!out) throw std::runtime_error("cannot write " + path_of(r.run_id).string());
      out << to_json(r).dump(2) << '\n';
    }
    std::ofstream idx(dir_ / "runs.jsonl", std::ios::app);
    idx << json{{"run_id", r.run_id}, {"created_at", r.created_at}, {"outcome", to_string(r.report.outcome)}}.dump()
        << '\n';
    return r;
  }

  RunRecord load(const std::string& run_id) const {
    const auto p = path_of(run_id);
    if (!fs::exists(p)) throw UnknownIdError("run " + run_id);
    return run_record_from_json(json::parse(read_file(p.string())));
  }

 private:
  fs::path dir_;
  mutable std::mutex mu_;
};

// ---------------------------------------------------------------------------
// Handlers

struct Response {
  int status = 200;
  json body;
};

inline Response error_response(int status, const std::string& msg) { return {status, {{"error", msg}}}; }

inline json playbook_view(const Playbook& pb) {
  json j = to_json(pb);
  j["options_count"] = json::object();
  for (const auto& s : pb.sites()) j["options_count"][s] = pb.options_count(s);
  return j;
}

inline json scenario_state_json(const ScenarioRunner& r, std::size_t since) {
  const auto& st = r.state();
  json j{{"tick", st.tick_index}, {"now", st.now}, {"active_policy", st.active_policy}, {"done", st.done}};
  j["pending"] = st.pending ? json{{"policy_id", st.pending->policy_id}, {"effective_at", st.pending->effective_at}}
                            : json(nullptr);
  j["sites"] = json::object();
  for (const auto& [site, t] : st.per_site) j["sites"][site] = to_json(t);
  j["controller"] = to_json(r.controller().state());
  j["samples"] = json::array();
  const auto& tl = r.timeline();
  for (std::size_t i = since; i < tl.size(); ++i) {
    json s{{"tick", i}, {"t", tl[i].t}, {"active_policy", tl[i].active_policy}};
    s["sites"] = json::object();
    for (const auto& [site, t] : tl[i].sites) s["sites"][site] = to_json(t);
    j["samples"].push_back(s);
  }
  return j;
}

// One replay driven by the service. `advance` and reads share `mu`.
struct ScenarioSession {
  std::string id;
  std::vector<TraceEvent> trace;
  ReplayOptions options;
  std::unique_ptr<ScenarioRunner> runner;
  std::string mode;  // manual | realtime | batch
  std::optional<std::string> run_id;
  mutable std::mutex mu;
  std::jthread worker;
};

class Service {
 public:
  Service(AsGraph g, Playbook pb, AppConfig cfg)
      : graph_(std::move(g)), pb_(std::move(pb)), cfg_(std::move(cfg)), store_(cfg_.data_dir) {}

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  ~Service() {
    std::unique_lock lock(mu_);
    for (auto& [id, s] : sessions_) s->worker.request_stop();
    for (auto& [id, s] : sessions_)
      if (s->worker.joinable()) s->worker.join();
  }

  static std::unique_ptr<Service> from_config(const AppConfig& cfg) {
    validate_config(cfg);
    return std::make_unique<Service>(load_topology(cfg.topology_path), load_playbook(cfg.playbook_path), cfg);
  }

  const AsGraph& graph() const { return graph_; }
  const Playbook& playbook() const { return pb_; }
  const AppConfig& config() const { return cfg_; }
  RunStore& store() { return store_; }

  Response get_playbook() const { return {200, playbook_view(pb_)}; }

  // Body: {trace: [..] | trace_csv: "..." | trace_spec: {..}, options: {..}, mode, tick_ms}
  Response post_scenario(const json& body) {
    auto s = std::make_shared<ScenarioSession>();
    double spec_duration = 0;
    try {
      if (body.contains("trace_csv")) {
        std::istringstream in(body["trace_csv"].get<std::string>());
        s->trace = parse_trace_csv(in);
      } else if (body.contains("trace_spec")) {
        const auto spec = trace_spec_from_json(body["trace_spec"]);
        s->trace = synthesize_trace(spec);
        spec_duration = spec.duration;
      } else if (body.contains("trace")) {
        for (const auto& e : body["trace"])
          s->trace.push_back({e.at("t").get<double>(), e.at("src").get<std::string>(), e.at("rate").get<double>(),
                              traffic_class_from_string(e.at("class").get<std::string>())});
      } else {
        return error_response(400, "scenario needs trace, trace_csv or trace_spec");
      }
      ReplayOptions base;
      base.capacities = cfg_.capacities;
      base.controller = cfg_.controller;
      s->options = replay_options_from_json(body.value("options", json::object()), base);
      // a synthesized trace runs for its stated length, not to its last event
      if (!(s->options.duration > 0)) s->options.duration = spec_duration;
      s->mode = body.value("mode", std::string("realtime"));
      if (s->mode != "manual" && s->mode != "realtime" && s->mode != "batch")
        return error_response(400, "mode must be manual, realtime or batch");
      s->runner = std::make_unique<ScenarioRunner>(graph_, pb_, s->trace, s->options);
    } catch (const UnknownIdError& e) {
      return error_response(404, e.what());
    } catch (const std::exception& e) {
      return error_response(400, e.what());
    }
    {
      std::unique_lock lock(mu_);
      s->id = "sc" + std::to_string(++next_id_);
      sessions_[s->id] = s;
      latest_ = s->id;
    }
    if (s->mode == "batch") {
      std::lock_guard lock(s->mu);
      while (!s->runner->done()) s->runner->advance();
      finish(*s);
    } else if (s->mode == "realtime") {
      const auto tick_ms = std::chrono::milliseconds(body.value("tick_ms", 100));
      ScenarioSession* sp = s.get();
      s->worker = std::jthread([this, s = sp, tick_ms](std::stop_token stop) {
        while (!stop.stop_requested()) {
          {
            std::lock_guard lock(s->mu);
            if (s->runner->done()) {
              finish(*s);
              return;
            }
            s->runner->advance();
          }
          std::this_thread::sleep_for(tick_ms);
        }
      });
    }
    return {201, {{"scenario_id", s->id}, {"mode", s->mode}}};
  }

  // Manual mode only: step the simulated clock.
  Response post_advance(const std::string& id, const json& body) {
    auto s = session(id);
    if (!s) return error_response(404, "unknown scenario " + id);
    if (s->mode != "manual") return error_response(409, "scenario " + id + " is not in manual mode");
    const int ticks = body.value("ticks", 1);
    if (ticks < 1) return error_response(400, "ticks must be >= 1");
    std::lock_guard lock(s->mu);
    for (int i = 0; i < ticks && !s->runner->done(); ++i) s->runner->advance();
    if (s->runner->done()) finish(*s);
    return {200, {{"tick", s->runner->state().tick_index}, {"done", s->runner->done()}}};
  }

  Response get_scenario_state(const std::string& id, std::size_t since = 0) const {
    auto s = session(id);
    if (!s) return error_response(404, "unknown scenario " + id);
    std::lock_guard lock(s->mu);
    auto j = scenario_state_json(*s->runner, since);
    j["scenario_id"] = id;
    j["run_id"] = s->run_id ? json(*s->run_id) : json(nullptr);
    if (s->runner->done()) j["outcome"] = to_string(s->runner->report().outcome);
    return {200, j};
  }

  Response get_scenario_report(const std::string& id) const {
    auto s = session(id);
    if (!s) return error_response(404, "unknown scenario " + id);
    std::lock_guard lock(s->mu);
    if (!s->runner->done()) return error_response(409, "scenario " + id + " still running");
    return {200, to_json(s->runner->report())};
  }

  // Body: {policy_id, scenario_id?}
  Response post_deploy(const json& body) {
    if (!body.is_object() || !body.contains("policy_id") || !body["policy_id"].is_string())
      return error_response(400, "body needs policy_id");
    const auto pid = body["policy_id"].get<std::string>();
    if (!pb_.find(pid)) return error_response(404, "unknown policy " + pid);
    auto s = session(body.value("scenario_id", std::string()));
    if (!s) return error_response(404, "no such scenario");
    std::lock_guard lock(s->mu);
    switch (s->runner->deploy(pid)) {
      case DeployStatus::ok: break;
      case DeployStatus::unknown_policy: return error_response(404, "unknown policy " + pid);
      case DeployStatus::propagation_pending:
        return {409,
                {{"error", "a routing change is still propagating"},
                 {"effective_at", s->runner->state().pending->effective_at}}};
      case DeployStatus::finished: return error_response(409, "scenario finished");
    }
    const auto& p = *s->runner->state().pending;
    return {202, {{"scenario_id", s->id}, {"policy_id", p.policy_id}, {"effective_at", p.effective_at}}};
  }

  Response get_controller_state(const std::string& scenario_id = "") const {
    auto s = session(scenario_id);
    if (!s) return error_response(404, "no such scenario");
    std::lock_guard lock(s->mu);
    json j = to_json(s->runner->controller().state());
    j["scenario_id"] = s->id;
    j["now"] = s->runner->state().now;
    return {200, j};
  }

  Response get_controller_log(const std::string& scenario_id = "", std::size_t since = 0) const {
    auto s = session(scenario_id);
    if (!s) return error_response(404, "no such scenario");
    std::lock_guard lock(s->mu);
    const auto& log = s->runner->controller().log();
    json records = json::array();
    for (std::size_t i = since; i < log.size(); ++i) records.push_back(to_json(log[i]));
    return {200, {{"scenario_id", s->id}, {"next", log.size()}, {"records", records}}};
  }

  Response get_estimate(const std::string& site, const std::string& scenario_id = "") const {
    if (!pb_.has_site(site)) return error_response(404, "unknown site " + site);
    auto s = session(scenario_id);
    if (!s) return error_response(404, "no such scenario");
    std::lock_guard lock(s->mu);
    const auto& est = s->runner->latest_estimates();
    auto it = est.find(site);
    if (it == est.end()) return {200, {{"site_id", site}, {"estimate", nullptr}}};
    return {200,
            {{"site_id", site},
             {"window_start", it->second.window_start},
             {"window_end", it->second.window_end},
             {"alpha", it->second.alpha},
             {"t_observed", it->second.t_observed},
             {"t_offered_hat", it->second.t_offered_hat},
             {"confidence", to_string(it->second.confidence)}}};
  }

  Response get_run(const std::string& run_id) const {
    try {
      return {200, to_json(store_.load(run_id))};
    } catch (const UnknownIdError& e) {
      return error_response(404, e.what());
    }
  }

  // Blocks until a realtime scenario has finished (tests and CLI).
  void wait(const std::string& id) const {
    auto s = session(id);
    if (!s) return;
    for (;;) {
      {
        std::lock_guard lock(s->mu);
        if (s->runner->done() && s->run_id) return;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
  }

 private:
  std::shared_ptr<ScenarioSession> session(const std::string& id) const {
    std::shared_lock lock(mu_);
    const auto& key = id.empty() ? latest_ : id;
    auto it = sessions_.find(key);
    return it == sessions_.end() ? nullptr : it->second;
  }

  // Caller holds s.mu.
  void finish(ScenarioSession& s) {
    if (s.run_id) return;
    RunRecord r;
    r.inputs = hash_inputs(graph_, pb_, s.trace, s.options);
    r.options = to_json(s.options);
    r.report = s.runner->report();
    r.created_at = util::format_utc(util::now_unix());
    s.run_id = store_.save(std::move(r)).run_id;
  }

  AsGraph graph_;
  Playbook pb_;
  AppConfig cfg_;
  RunStore store_;
  mutable std::shared_mutex mu_;
  std::map<std::string, std::shared_ptr<ScenarioSession>> sessions_;
  std::string latest_;
  std::size_t next_id_ = 0;
};

}  // namespace anycast
