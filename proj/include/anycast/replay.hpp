#pragma once

// Trace replay on a simulated clock. Traffic is assigned to sites by the
// active catchment map, policy changes take effect after a fixed propagation
// delay, and overloaded sites drop proportionally across all sources.

#include <algorithm>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "catchment.hpp"
#include "controller.hpp"
#include "estimator.hpp"
#include "playbook.hpp"

namespace anycast {

enum class TrafficClass { legit, known_good, attack };

inline std::string to_string(TrafficClass c) {
  switch (c) {
    case TrafficClass::legit: return "legit";
    case TrafficClass::known_good: return "known-good";
    case TrafficClass::attack: return "attack";
  }
  return "?";
}

inline TrafficClass traffic_class_from_string(const std::string& s) {
  if (s == "legit") return TrafficClass::legit;
  if (s == "known-good") return TrafficClass::known_good;
  if (s == "attack") return TrafficClass::attack;
  throw ParseError("unknown traffic class '" + s + "'");
}

// `rate` holds for (src, cls) until the next event for the same pair.
struct TraceEvent {
  double t = 0.0;
  std::string src;
  double rate = 0.0;
  TrafficClass cls = TrafficClass::attack;

  bool operator==(const TraceEvent&) const = default;
};

inline void validate_trace(const std::vector<TraceEvent>& trace) {
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (!(trace[i].rate >= 0)) throw ValidationError("trace event " + std::to_string(i) + " has negative rate");
    if (i > 0 && trace[i].t < trace[i - 1].t)
      throw ValidationError("trace event " + std::to_string(i) + " goes back in time");
  }
}

inline std::vector<TraceEvent> parse_trace_csv(std::istream& in) {
  std::vector<TraceEvent> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (util::trim(line).empty() || line[0] == '#') continue;
    const auto c = util::split(line, ',');
    if (lineno == 1 && !c.empty() && c[0] == "t") continue;
    const std::string where = "trace line " + std::to_string(lineno);
    if (c.size() != 4) throw ParseError(where + ": expected t,src,rate,class");
    out.push_back({util::parse_double(c[0], where + " t"), c[1], util::parse_double(c[2], where + " rate"),
                   traffic_class_from_string(c[3])});
  }
  try {
    validate_trace(out);
  } catch (const ValidationError& e) {
    throw ParseError(e.what());
  }
  return out;
}

inline std::vector<TraceEvent> load_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open trace " + path);
  return parse_trace_csv(in);
}

inline std::string trace_csv(const std::vector<TraceEvent>& trace) {
  std::ostringstream os;
  os.precision(17);
  os << "t,src,rate,class\n";
  for (const auto& e : trace) os << e.t << ',' << e.src << ',' << e.rate << ',' << to_string(e.cls) << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Synthetic traces

struct PhaseSpec {
  double start = 0.0;
  double duration = 0.0;
  double total_rate = 0.0;
  double skew = 0.0;  // Zipf exponent over a seeded ranking of the sources; 0 = even
  std::map<TrafficClass, double> mix{{TrafficClass::attack, 1.0}};
  std::vector<std::string> sources;  // empty: TraceSpec::sources
};

// Steady traffic for the whole trace, independent of the attack phases.
struct BackgroundSpec {
  double legit_rate = 0.0;
  std::vector<std::string> legit_sources;  // empty: TraceSpec::sources
  std::vector<std::string> known_good_members;
  double known_good_rate = 0.0;    // per member
  double known_good_jitter = 0.0;  // relative, uniform in [-j, +j]
  double jitter_interval = 10.0;
};

struct TraceSpec {
  double duration = 0.0;
  std::vector<std::string> sources;
  BackgroundSpec background;
  std::vector<PhaseSpec> phases;  // non-overlapping, in start order
  std::uint64_t seed = 0;
};

namespace detail {

inline std::vector<double> zipf_shares(std::size_t n, double skew, std::mt19937_64& rng) {
  std::vector<std::size_t> rank(n);
  for (std::size_t i = 0; i < n; ++i) rank[i] = i + 1;
  util::shuffle(rank, rng);
  std::vector<double> w(n);
  double sum = 0;
  for (std::size_t i = 0; i < n; ++i) sum += w[i] = std::pow(static_cast<double>(rank[i]), -skew);
  for (auto& x : w) x /= sum;
  return w;
}

}  // namespace detail

inline std::vector<TraceEvent> synthesize_trace(const TraceSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  for (std::size_t i = 0; i < spec.phases.size(); ++i) {
    const auto& p = spec.phases[i];
    const std::string where = "phase " + std::to_string(i);
    if (p.start < 0 || !(p.duration > 0) || p.total_rate < 0 || p.skew < 0)
      throw ValidationError(where + ": needs start >= 0, duration > 0, rate >= 0, skew >= 0");
    if (i > 0 && p.start < spec.phases[i - 1].start + spec.phases[i - 1].duration)
      throw ValidationError(where + ": overlaps or precedes the previous phase");
    double share = 0;
    for (const auto& [c, f] : p.mix) {
      if (f < 0) throw ValidationError(where + ": negative class share");
      share += f;
    }
    if (std::abs(share - 1.0) > 1e-9) throw ValidationError(where + ": class mix must sum to 1");
    if (p.sources.empty() && spec.sources.empty()) throw ValidationError(where + ": no sources");
  }
  std::vector<TraceEvent> ev;
  const auto& bg = spec.background;
  const auto& legit_src = bg.legit_sources.empty() ? spec.sources : bg.legit_sources;
  if (bg.legit_rate > 0) {
    if (legit_src.empty()) throw ValidationError("background: legit traffic without sources");
    const double each = bg.legit_rate / static_cast<double>(legit_src.size());
    for (const auto& s : legit_src) ev.push_back({0.0, s, each, TrafficClass::legit});
  }
  if (bg.known_good_rate > 0) {
    if (bg.known_good_jitter > 0 && !(bg.jitter_interval > 0)) throw ValidationError("background: jitter interval");
    for (double t = 0; t < spec.duration || t == 0; t += bg.jitter_interval) {
      for (const auto& m : bg.known_good_members) {
        const double j = bg.known_good_jitter > 0 ? util::uniform_real(rng, -bg.known_good_jitter, bg.known_good_jitter) : 0.0;
        ev.push_back({t, m, bg.known_good_rate * (1.0 + j), TrafficClass::known_good});
      }
      if (!(bg.known_good_jitter > 0)) break;
    }
  }
  for (const auto& p : spec.phases) {
    const auto& src = p.sources.empty() ? spec.sources : p.sources;
    const auto shares = detail::zipf_shares(src.size(), p.skew, rng);
    for (const auto& [cls, f] : p.mix) {
      if (!(f > 0)) continue;
      for (std::size_t i = 0; i < src.size(); ++i) {
        ev.push_back({p.start, src[i], p.total_rate * f * shares[i], cls});
        ev.push_back({p.start + p.duration, src[i], 0.0, cls});
      }
    }
  }
  std::stable_sort(ev.begin(), ev.end(), [](const TraceEvent& a, const TraceEvent& b) { return a.t < b.t; });
  return ev;
}

// ---------------------------------------------------------------------------
// Scenario execution

struct ReplayOptions {
  double propagation_delay = 300.0;
  double tick = 10.0;
  double duration = 0.0;                   // 0: through the last trace event
  std::map<std::string, double> capacities;  // overrides the topology's
  bool controller_enabled = true;
  ControllerConfig controller;
  WindowConfig window;
  std::map<std::string, double> known_good_expected;  // member -> rate; empty: derived from the trace
  double settle_window = 300.0;                        // tail that decides "mitigated"
};

struct SiteTick {
  double offered = 0.0;
  double observed = 0.0;
  double dropped = 0.0;
  double capacity = 0.0;
  double estimated_offered = 0.0;
  double alpha = 1.0;
  double known_offered = 0.0;  // expected known-good under the active map
  double known_observed = 0.0;
  double attack_offered = 0.0;  // ground truth, for reports only
  bool overload = false;

  bool operator==(const SiteTick&) const = default;
};

struct TimelineSample {
  double t = 0.0;
  std::string active_policy;
  std::map<std::string, SiteTick> sites;
  double unreachable_rate = 0.0;

  bool overloaded() const {
    return std::any_of(sites.begin(), sites.end(), [](const auto& kv) { return kv.second.overload; });
  }
  bool operator==(const TimelineSample&) const = default;
};

struct ReplayAction {
  double time = 0.0;
  std::string policy_id;
  std::string trigger;  // controller | revert | operator
  double effective_at = 0.0;

  bool operator==(const ReplayAction&) const = default;
};

enum class Outcome { mitigated, escalated, ended_under_attack };

inline std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::mitigated: return "mitigated";
    case Outcome::escalated: return "escalated";
    case Outcome::ended_under_attack: return "ended-under-attack";
  }
  return "?";
}

inline Outcome outcome_from_string(const std::string& s) {
  if (s == "mitigated") return Outcome::mitigated;
  if (s == "escalated") return Outcome::escalated;
  if (s == "ended-under-attack") return Outcome::ended_under_attack;
  throw ParseError("unknown outcome '" + s + "'");
}

struct ScenarioReport {
  double tick = 0.0;
  double propagation_delay = 0.0;
  std::map<std::string, double> capacities;
  std::vector<TimelineSample> timeline;
  std::vector<ReplayAction> actions;
  std::vector<json> decision_log;
  Outcome outcome = Outcome::mitigated;

  // First time at or after `from` with no overloaded site, if any.
  std::optional<double> first_clear_after(double from) const {
    for (const auto& s : timeline)
      if (s.t >= from && !s.overloaded()) return s.t;
    return std::nullopt;
  }
  // True when no sample in [from, to] is overloaded.
  bool clear_between(double from, double to) const {
    for (const auto& s : timeline)
      if (s.t >= from && s.t <= to && s.overloaded()) return false;
    return true;
  }
};

struct PendingChange {
  std::string policy_id;
  double effective_at = 0.0;
};

struct ScenarioState {
  double now = 0.0;
  std::size_t tick_index = 0;
  std::string active_policy;
  std::optional<PendingChange> pending;
  std::map<std::string, SiteTick> per_site;
  bool done = false;
};

enum class DeployStatus { ok, unknown_policy, propagation_pending, finished };

class ScenarioRunner {
 public:
  ScenarioRunner(const AsGraph& g, const Playbook& pb, std::vector<TraceEvent> trace, ReplayOptions opt)
      : graph_(&g), pb_(&pb), trace_(std::move(trace)), opt_(std::move(opt)), controller_(pb, opt_.controller) {
    validate_trace(trace_);
    if (!(opt_.tick > 0)) throw RangeError("tick must be positive");
    if (opt_.propagation_delay < 0) throw RangeError("propagation delay must be >= 0");
    for (const auto& e : trace_)
      if (!g.has_block(e.src)) throw UnknownIdError("trace source " + e.src + " is not a topology block");
    for (const auto& site : pb.sites()) {
      if (!g.has_site(site)) throw ValidationError("playbook site " + site + " not in topology");
      auto it = opt_.capacities.find(site);
      const double cap = it != opt_.capacities.end() ? it->second : g.site(site).capacity;
      if (!(cap > 0)) throw ValidationError("capacity of " + site + " must be positive");
      capacity_[site] = cap;
    }
    for (const auto& [site, cap] : opt_.capacities)
      if (!pb.has_site(site)) throw UnknownIdError("capacity given for unknown site " + site);
    for (const auto& e : pb.entries()) maps_[e.policy_id()] = map_catchment(g, e.config);

    if (opt_.known_good_expected.empty()) {
      std::map<std::string, std::vector<double>> seen;
      for (const auto& e : trace_)
        if (e.cls == TrafficClass::known_good && e.rate > 0) seen[e.src].push_back(e.rate);
      for (auto& [src, v] : seen) {
        std::sort(v.begin(), v.end());
        known_expected_[src] = v[v.size() / 2];
      }
    } else {
      known_expected_ = opt_.known_good_expected;
    }
    end_time_ = opt_.duration > 0 ? opt_.duration : (trace_.empty() ? 0.0 : trace_.back().t);
    state_.active_policy = pb.baseline_id();
    history_len_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(opt_.window.length / opt_.tick)));
  }

  bool done() const { return state_.done; }
  const ScenarioState& state() const { return state_; }
  const Controller& controller() const { return controller_; }
  const std::map<std::string, EstimateResult>& latest_estimates() const { return estimates_; }
  const std::vector<TimelineSample>& timeline() const { return timeline_; }
  const CatchmentMap& map_for(const std::string& policy) const { return maps_.at(policy); }
  double end_time() const { return end_time_; }

  // Operator override; refused while a previous change is still propagating.
  DeployStatus deploy(const std::string& policy_id) {
    if (state_.done) return DeployStatus::finished;
    if (!pb_->find(policy_id)) return DeployStatus::unknown_policy;
    if (state_.pending) return DeployStatus::propagation_pending;
    controller_.manual_deploy(policy_id, state_.now);
    schedule(policy_id, "operator");
    return DeployStatus::ok;
  }

  void advance() {
    if (state_.done) return;
    const double now = static_cast<double>(state_.tick_index) * opt_.tick;
    state_.now = now;

    if (state_.pending && state_.pending->effective_at <= now + 1e-9) {
      state_.active_policy = state_.pending->policy_id;
      state_.pending.reset();
      history_.clear();  // estimates never mix samples from two maps
    }
    while (cursor_ < trace_.size() && trace_[cursor_].t <= now + 1e-9) {
      const auto& e = trace_[cursor_++];
      rates_[{e.src, e.cls}] = e.rate;
    }

    const auto& map = maps_.at(state_.active_policy);
    TimelineSample sample;
    sample.t = now;
    sample.active_policy = state_.active_policy;
    for (const auto& [site, cap] : capacity_) sample.sites[site].capacity = cap;
    for (const auto& [key, rate] : rates_) {
      if (rate <= 0) continue;
      const auto& site = map.site_of(key.first);
      if (site == kUnreachable) {
        sample.unreachable_rate += rate;
        continue;
      }
      auto& st = sample.sites[site];
      st.offered += rate;
      if (key.second == TrafficClass::known_good) st.known_observed += rate;  // scaled below
      if (key.second == TrafficClass::attack) st.attack_offered += rate;
    }
    for (const auto& [member, rate] : known_expected_) {
      const auto& site = map.site_of(member);
      if (site != kUnreachable) sample.sites[site].known_offered += rate;
    }

    std::vector<SiteStatus> statuses;
    double total = 0;
    for (auto& [site, st] : sample.sites) {
      st.observed = std::min(st.offered, st.capacity);
      st.dropped = st.offered - st.observed;
      st.overload = st.offered > st.capacity;
      const double delivery = st.offered > 0 ? st.observed / st.offered : 1.0;
      st.known_observed *= delivery;

      auto& hist = history_[site];
      hist.push_back({now, st.observed, st.known_observed, st.known_offered});
      while (hist.size() > history_len_) hist.pop_front();
      const std::vector<RateObservation> window(hist.begin(), hist.end());
      EstimateResult est;
      try {
        est = estimate_window(site, window, opt_.window);
      } catch (const ZeroKnownOfferedError&) {
        est = {site, window.front().t, now, 1.0, st.observed, st.observed, Confidence::low_signal};
      }
      estimates_[site] = est;
      st.estimated_offered = est.t_offered_hat;
      st.alpha = est.alpha;
      statuses.push_back({site, st.capacity, est.t_offered_hat, st.observed, true});
      total += est.t_offered_hat;
    }

    if (opt_.controller_enabled) {
      const auto d = controller_.tick(statuses, total, now);
      if (d.kind == DecisionKind::deploy) schedule(d.policy_id, "controller");
      if (d.kind == DecisionKind::revert) schedule(d.policy_id, "revert");
    }
    state_.per_site = sample.sites;
    timeline_.push_back(std::move(sample));
    ++state_.tick_index;
    if (static_cast<double>(state_.tick_index) * opt_.tick > end_time_ + 1e-9) state_.done = true;
  }

  ScenarioReport report() const {
    ScenarioReport r;
    r.tick = opt_.tick;
    r.propagation_delay = opt_.propagation_delay;
    r.capacities = capacity_;
    r.timeline = timeline_;
    r.actions = actions_;
    for (const auto& l : controller_.log()) r.decision_log.push_back(to_json(l));
    const double tail_start = end_time_ - opt_.settle_window;
    bool tail_clear = true;
    for (const auto& s : timeline_)
      if (s.t > tail_start - 1e-9 && s.overloaded()) tail_clear = false;
    if (tail_clear)
      r.outcome = Outcome::mitigated;
    else if (controller_.state().phase == Phase::escalated)
      r.outcome = Outcome::escalated;
    else
      r.outcome = Outcome::ended_under_attack;
    return r;
  }

 private:
  void schedule(const std::string& policy_id, const std::string& trigger) {
    const double eff = state_.now + opt_.propagation_delay;
    state_.pending = PendingChange{policy_id, eff};
    actions_.push_back({state_.now, policy_id, trigger, eff});
  }

  const AsGraph* graph_;
  const Playbook* pb_;
  std::vector<TraceEvent> trace_;
  ReplayOptions opt_;
  Controller controller_;
  std::map<std::string, double> capacity_;
  std::map<std::string, CatchmentMap> maps_;
  std::map<std::string, double> known_expected_;
  std::map<std::pair<std::string, TrafficClass>, double> rates_;
  std::map<std::string, std::deque<RateObservation>> history_;
  std::map<std::string, EstimateResult> estimates_;
  std::vector<TimelineSample> timeline_;
  std::vector<ReplayAction> actions_;
  ScenarioState state_;
  std::size_t cursor_ = 0;
  std::size_t history_len_ = 6;
  double end_time_ = 0.0;
};

inline ScenarioReport run_scenario(const AsGraph& g, const Playbook& pb, const std::vector<TraceEvent>& trace,
                                   const ReplayOptions& opt = {}) {
  ScenarioRunner runner(g, pb, trace, opt);
  while (!runner.done()) runner.advance();
  return runner.report();
}

// ---------------------------------------------------------------------------
// Report serialization

inline json to_json(const SiteTick& s) {
  return {{"offered", s.offered},
          {"observed", s.observed},
          {"dropped", s.dropped},
          {"capacity", s.capacity},
          {"estimated_offered", s.estimated_offered},
          {"alpha", s.alpha},
          {"known_offered", s.known_offered},
          {"known_observed", s.known_observed},
          {"attack_offered", s.attack_offered},
          {"overload", s.overload}};
}

inline SiteTick site_tick_from_json(const json& j) {
  SiteTick s;
  s.offered = j.at("offered").get<double>();
  s.observed = j.at("observed").get<double>();
  s.dropped = j.at("dropped").get<double>();
  s.capacity = j.at("capacity").get<double>();
  s.estimated_offered = j.at("estimated_offered").get<double>();
  s.alpha = j.at("alpha").get<double>();
  s.known_offered = j.at("known_offered").get<double>();
  s.known_observed = j.at("known_observed").get<double>();
  s.attack_offered = j.at("attack_offered").get<double>();
  s.overload = j.at("overload").get<bool>();
  return s;
}

inline json to_json(const ScenarioReport& r) {
  json j;
  j["outcome"] = to_string(r.outcome);
  j["tick"] = r.tick;
  j["propagation_delay"] = r.propagation_delay;
  j["capacities"] = r.capacities;
  j["actions"] = json::array();
  for (const auto& a : r.actions)
    j["actions"].push_back(
        {{"time", a.time}, {"policy_id", a.policy_id}, {"trigger", a.trigger}, {"effective_at", a.effective_at}});
  j["timeline"] = json::array();
  for (const auto& s : r.timeline) {
    json js{{"t", s.t}, {"active_policy", s.active_policy}, {"unreachable_rate", s.unreachable_rate}};
    js["sites"] = json::object();
    for (const auto& [site, st] : s.sites) js["sites"][site] = to_json(st);
    j["timeline"].push_back(js);
  }
  j["decision_log"] = r.decision_log;
  return j;
}

inline ScenarioReport report_from_json(const json& j) {
  try {
    ScenarioReport r;
    r.outcome = outcome_from_string(j.at("outcome").get<std::string>());
    r.tick = j.at("tick").get<double>();
    r.propagation_delay = j.at("propagation_delay").get<double>();
    r.capacities = j.at("capacities").get<std::map<std::string, double>>();
    for (const auto& a : j.at("actions"))
      r.actions.push_back({a.at("time").get<double>(), a.at("policy_id").get<std::string>(),
                           a.at("trigger").get<std::string>(), a.at("effective_at").get<double>()});
    for (const auto& js : j.at("timeline")) {
      TimelineSample s;
      s.t = js.at("t").get<double>();
      s.active_policy = js.at("active_policy").get<std::string>();
      s.unreachable_rate = js.at("unreachable_rate").get<double>();
      for (const auto& [site, st] : js.at("sites").items()) s.sites[site] = site_tick_from_json(st);
      r.timeline.push_back(std::move(s));
    }
    for (const auto& l : j.at("decision_log")) r.decision_log.push_back(l);
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("scenario report: ") + e.what());
  }
}

inline json to_json(const ReplayOptions& o) {
  json kg = json::object();
  for (const auto& [m, r] : o.known_good_expected) kg[m] = r;
  return {{"propagation_delay", o.propagation_delay},
          {"tick", o.tick},
          {"duration", o.duration},
          {"capacities", o.capacities},
          {"controller_enabled", o.controller_enabled},
          {"controller", to_json(o.controller)},
          {"window", {{"length", o.window.length},
                      {"step", o.window.step},
                      {"aggregation", o.window.aggregation == WindowAggregation::pooled ? "pooled" : "per-sample"},
                      {"min_known_per_minute", o.window.min_known_per_minute}}},
          {"known_good_expected", kg},
          {"settle_window", o.settle_window}};
}

inline ReplayOptions replay_options_from_json(const json& j, ReplayOptions o = {}) {
  if (!j.is_object()) throw ParseError("replay options must be an object");
  try {
    if (j.contains("propagation_delay")) o.propagation_delay = j["propagation_delay"].get<double>();
    if (j.contains("tick")) o.tick = j["tick"].get<double>();
    if (j.contains("duration")) o.duration = j["duration"].get<double>();
    if (j.contains("capacities"))
      for (const auto& [site, c] : j["capacities"].items()) o.capacities[site] = c.get<double>();
    if (j.contains("controller_enabled")) o.controller_enabled = j["controller_enabled"].get<bool>();
    if (j.contains("controller")) o.controller = controller_config_from_json(j["controller"], o.controller);
    if (j.contains("window")) {
      const auto& w = j["window"];
      if (w.contains("length")) o.window.length = w["length"].get<double>();
      if (w.contains("step")) o.window.step = w["step"].get<double>();
      if (w.contains("aggregation"))
        o.window.aggregation =
            w["aggregation"].get<std::string>() == "pooled" ? WindowAggregation::pooled : WindowAggregation::per_sample;
      if (w.contains("min_known_per_minute")) o.window.min_known_per_minute = w["min_known_per_minute"].get<double>();
    }
    if (j.contains("known_good_expected"))
      o.known_good_expected = j["known_good_expected"].get<std::map<std::string, double>>();
    if (j.contains("settle_window")) o.settle_window = j["settle_window"].get<double>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("replay options: ") + e.what());
  }
  return o;
}

inline TraceSpec trace_spec_from_json(const json& j) {
  try {
    TraceSpec t;
    t.duration = j.at("duration").get<double>();
    t.seed = j.value("seed", std::uint64_t{0});
    t.sources = j.value("sources", std::vector<std::string>{});
    if (j.contains("background")) {
      const auto& b = j["background"];
      t.background.legit_rate = b.value("legit_rate", 0.0);
      t.background.legit_sources = b.value("legit_sources", std::vector<std::string>{});
      t.background.known_good_members = b.value("known_good_members", std::vector<std::string>{});
      t.background.known_good_rate = b.value("known_good_rate", 0.0);
      t.background.known_good_jitter = b.value("known_good_jitter", 0.0);
      t.background.jitter_interval = b.value("jitter_interval", 10.0);
    }
    for (const auto& p : j.value("phases", json::array())) {
      PhaseSpec ph;
      ph.start = p.at("start").get<double>();
      ph.duration = p.at("duration").get<double>();
      ph.total_rate = p.at("total_rate").get<double>();
      ph.skew = p.value("skew", 0.0);
      ph.sources = p.value("sources", std::vector<std::string>{});
      if (p.contains("mix")) {
        ph.mix.clear();
        for (const auto& [cls, f] : p["mix"].items()) ph.mix[traffic_class_from_string(cls)] = f.get<double>();
      }
      t.phases.push_back(std::move(ph));
    }
    return t;
  } catch (const json::exception& e) {
    throw ParseError(std::string("trace spec: ") + e.what());
  }
}

// A self-contained scenario file: topology, playbook (or a menu to build one
// from), trace (or a spec to synthesize it) and replay options. Paths are
// relative to the bundle.
struct ScenarioBundle {
  AsGraph graph;
  Playbook playbook;
  std::vector<TraceEvent> trace;
  ReplayOptions options;
};

inline ScenarioBundle load_scenario_bundle(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  const auto dir = std::filesystem::path(path).parent_path();
  auto rel = [&](const char* key) { return (dir / j.at(key).get<std::string>()).string(); };
  auto read = [](const std::string& p) {
    std::ifstream f(p);
    if (!f) throw ParseError("cannot open " + p);
    return json::parse(f);
  };
  try {
    ScenarioBundle b{load_topology(rel("topology")), {}, {}, {}};
    if (j.contains("playbook"))
      b.playbook = load_playbook(rel("playbook"));
    else
      b.playbook = build_playbook(b.graph, enumerate_policies(b.graph, menu_from_json(b.graph, read(rel("menu")))), 0);
    if (j.contains("trace"))
      b.trace = load_trace_csv(rel("trace"));
    else
      b.trace = synthesize_trace(trace_spec_from_json(j.at("trace_spec")));
    if (j.contains("options")) b.options = replay_options_from_json(j["options"]);
    if (!(b.options.duration > 0) && !j.contains("trace")) b.options.duration = j["trace_spec"].value("duration", 0.0);
    return b;
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace anycast
