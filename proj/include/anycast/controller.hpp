#pragma once

// Automated defense loop: detect overloaded sites, pick a playbook option
// predicted to relieve them, deploy, wait, re-evaluate, retry, escalate to a
// human after three failed attempts, and revert once things stay quiet.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "playbook.hpp"

namespace anycast {

struct SiteStatus {
  std::string site_id;
  double capacity = 0.0;
  double estimated_offered = 0.0;
  double observed = 0.0;
  bool reachable = true;  // false: the controller lost contact; assume saturated

  double utilization() const { return capacity > 0 ? estimated_offered / capacity : std::numeric_limits<double>::infinity(); }
};

struct ControllerConfig {
  double eval_interval = 300.0;
  double revert_after = 1800.0;
  double detect_hold = 60.0;  // overload must persist this long before the first deploy
  int max_attempts = 3;
  double overload_threshold = 1.0;  // utilization above this is overloaded
  double ok_threshold = 0.9;        // predicted utilization at or below this is acceptable
  std::optional<FractionView> view;  // nullopt: the playbook's default view
};

enum class Phase { idle, mitigating, escalated, reverting };

inline std::string to_string(Phase p) {
  switch (p) {
    case Phase::idle: return "idle";
    case Phase::mitigating: return "mitigating";
    case Phase::escalated: return "escalated";
    case Phase::reverting: return "reverting";
  }
  return "?";
}

struct ControllerState {
  Phase phase = Phase::idle;
  std::string active_policy;
  int attempt = 0;
  std::set<std::string> candidate_set;  // empty at incident start: whole playbook
  std::optional<double> last_action;
  std::optional<double> incident_start;
  std::optional<double> quiet_since;
  bool incident_clear = false;  // an evaluation found every site OK since the last deploy

  bool operator==(const ControllerState&) const = default;
};

enum class DecisionKind { no_action, deploy, escalate, revert };

inline std::string to_string(DecisionKind k) {
  switch (k) {
    case DecisionKind::no_action: return "no-action";
    case DecisionKind::deploy: return "deploy";
    case DecisionKind::escalate: return "escalate";
    case DecisionKind::revert: return "revert";
  }
  return "?";
}

struct Decision {
  DecisionKind kind = DecisionKind::no_action;
  std::string policy_id;
  std::string rationale;
  bool least_bad = false;
};

struct Assessment {
  Decision decision;
  std::set<std::string> feasible;  // options relieving every site (step 2)
  std::vector<std::string> overloaded;
};

struct AssessContext {
  std::string active_policy;
  std::optional<std::set<std::string>> candidates;  // restrict the search; nullopt = all entries
  int attempt = 0;
  ControllerConfig config;
};

inline bool is_overloaded(const SiteStatus& s, double threshold) {
  return !s.reachable || s.utilization() > threshold;
}

namespace detail {

struct OptionScore {
  std::string id;
  int distance = 0;
  double variance = 0.0;
  double excess = 0.0;
  bool feasible = false;
};

inline OptionScore score_option(const PlaybookEntry& e, const PlaybookEntry& active,
                                const std::map<std::string, double>& capacity, double total_offered,
                                FractionView view, double ok_threshold) {
  OptionScore s;
  s.id = e.policy_id();
  s.distance = policy_distance(e.config, active.config);
  s.feasible = true;
  std::vector<double> util;
  for (const auto& [site, cap] : capacity) {
    const double predicted = total_offered * e.view(view).at(site);
    const double u = cap > 0 ? predicted / cap : std::numeric_limits<double>::infinity();
    if (!(u <= ok_threshold)) s.feasible = false;
    s.excess += std::max(0.0, predicted - cap);
    auto it = e.config.per_site.find(site);
    if (it == e.config.per_site.end() || !it->second.withdrawn) util.push_back(u);
  }
  if (!util.empty()) {
    double mean = 0;
    for (double u : util) mean += u;
    mean /= static_cast<double>(util.size());
    for (double u : util) s.variance += (u - mean) * (u - mean);
    s.variance /= static_cast<double>(util.size());
  }
  return s;
}

}  // namespace detail

// Steps (1)-(3): find overloaded sites, the options predicted to bring every
// site to an acceptable utilization, and pick the smallest change, then the
// most uniform utilization, then the lowest policy id. With no feasible
// option, pick the one with the least total excess over capacity, or
// escalate once the attempt budget is spent.
inline Assessment assess(const std::vector<SiteStatus>& statuses, double total_offered, const Playbook& pb,
                         const AssessContext& ctx) {
  Assessment out;
  const auto& cfg = ctx.config;
  const FractionView view = cfg.view.value_or(pb.default_view());
  std::map<std::string, double> capacity;
  for (const auto& s : statuses) {
    if (!pb.has_site(s.site_id)) throw UnknownIdError("site " + s.site_id);
    capacity[s.site_id] = s.capacity;
    if (is_overloaded(s, cfg.overload_threshold)) out.overloaded.push_back(s.site_id);
  }
  for (const auto& site : pb.sites())
    if (!capacity.count(site)) throw ValidationError("assess: no status for site " + site);
  if (out.overloaded.empty()) {
    out.decision = {DecisionKind::no_action, "", "no site over capacity", false};
    return out;
  }
  const std::string active_id = ctx.active_policy.empty() ? pb.baseline_id() : ctx.active_policy;
  const auto& active = pb.entry(active_id);

  std::vector<detail::OptionScore> scores;
  for (const auto& e : pb.entries()) {
    if (e.policy_id() == active_id) continue;
    if (ctx.candidates && !ctx.candidates->count(e.policy_id())) continue;
    scores.push_back(detail::score_option(e, active, capacity, total_offered, view, cfg.ok_threshold));
    if (scores.back().feasible) out.feasible.insert(e.policy_id());
  }
  if (scores.empty()) {
    out.decision = {DecisionKind::escalate, "", "no candidate options left", false};
    return out;
  }
  if (!out.feasible.empty()) {
    const auto best = std::min_element(scores.begin(), scores.end(), [](const auto& a, const auto& b) {
      if (a.feasible != b.feasible) return a.feasible;
      return std::tie(a.distance, a.variance, a.id) < std::tie(b.distance, b.variance, b.id);
    });
    out.decision = {DecisionKind::deploy, best->id,
                    "feasible option at distance " + std::to_string(best->distance) + " from " + active_id, false};
    return out;
  }
  if (ctx.attempt >= cfg.max_attempts) {
    out.decision = {DecisionKind::escalate, "", "no feasible option and attempt budget spent", false};
    return out;
  }
  const auto best = std::min_element(scores.begin(), scores.end(), [](const auto& a, const auto& b) {
    return std::tie(a.excess, a.distance, a.variance, a.id) < std::tie(b.excess, b.distance, b.variance, b.id);
  });
  out.decision = {DecisionKind::deploy, best->id, "least-bad option (no option fits every site)", true};
  return out;
}

// ---------------------------------------------------------------------------
// State machine

struct LogRecord {
  double time = 0.0;
  std::vector<SiteStatus> statuses;
  double total_offered = 0.0;
  Decision decision;
  Phase phase_before = Phase::idle;
  Phase phase_after = Phase::idle;
  int attempt = 0;
  std::vector<std::string> candidates;
  bool manual = false;
};

struct StepResult {
  ControllerState state;
  Decision action;
  std::optional<LogRecord> log;  // set whenever the controller evaluated
};

// One tick of the loop. Acts only when `eval_interval` has elapsed since the
// last action; re-evaluations search only the options found feasible by the
// previous iteration; the budget resets once an evaluation sees every site OK.
inline StepResult step(ControllerState st, const std::vector<SiteStatus>& statuses, double total_offered,
                       const Playbook& pb, double now, const ControllerConfig& cfg = {}) {
  if (st.active_policy.empty()) st.active_policy = pb.baseline_id();
  StepResult out;
  const Phase before = st.phase;
  const bool overloaded = std::any_of(statuses.begin(), statuses.end(),
                                      [&](const SiteStatus& s) { return is_overloaded(s, cfg.overload_threshold); });
  const bool timer_ok = !st.last_action || now - *st.last_action >= cfg.eval_interval - 1e-9;

  auto log = [&](const Decision& d) {
    LogRecord r;
    r.time = now;
    r.statuses = statuses;
    r.total_offered = total_offered;
    r.decision = d;
    r.phase_before = before;
    r.phase_after = st.phase;
    r.attempt = st.attempt;
    r.candidates.assign(st.candidate_set.begin(), st.candidate_set.end());
    out.log = r;
  };
  auto deploy = [&](const Assessment& a) {
    st.active_policy = a.decision.policy_id;
    st.attempt += 1;
    // Carry forward what step (2) considered, never growing the set.
    std::set<std::string> next = a.feasible.empty() ? st.candidate_set : a.feasible;
    if (next.empty()) next = all_policy_ids(pb);
    if (!st.candidate_set.empty()) {
      std::set<std::string> inter;
      for (const auto& id : next)
        if (st.candidate_set.count(id)) inter.insert(id);
      next = std::move(inter);
    }
    next.erase(a.decision.policy_id);
    st.candidate_set = std::move(next);
    st.phase = Phase::mitigating;
    st.last_action = now;
    st.quiet_since.reset();
    st.incident_clear = false;
    out.action = a.decision;
  };
  auto start_incident = [&]() {
    st.attempt = 0;
    st.candidate_set.clear();
    st.incident_clear = false;
  };

  switch (st.phase) {
    case Phase::escalated:
      // Hands off until an operator deploys something.
      break;

    case Phase::reverting:
      if (!timer_ok) break;
      st.phase = Phase::idle;
      st.incident_start.reset();
      [[fallthrough]];

    case Phase::idle:
      if (!overloaded) {
        st.incident_start.reset();
        break;
      }
      if (!st.incident_start) {
        st.incident_start = now;
        start_incident();
      }
      if (now - *st.incident_start + 1e-9 < cfg.detect_hold || !timer_ok) break;
      {
        const auto a = assess(statuses, total_offered, pb, {st.active_policy, std::nullopt, st.attempt, cfg});
        if (a.decision.kind == DecisionKind::deploy) {
          deploy(a);
        } else if (a.decision.kind == DecisionKind::escalate) {
          st.phase = Phase::escalated;
          out.action = a.decision;
        }
        log(out.action.kind == DecisionKind::no_action ? a.decision : out.action);
      }
      break;

    case Phase::mitigating:
      if (!timer_ok) break;
      if (!overloaded) {
        st.incident_clear = true;
        if (!st.quiet_since) st.quiet_since = now;
        // Going back to the baseline must not recreate the overload.
        bool baseline_fits = true;
        if (st.active_policy != pb.baseline_id()) {
          std::map<std::string, double> capacity;
          for (const auto& s : statuses) capacity[s.site_id] = s.capacity;
          baseline_fits = detail::score_option(pb.baseline(), pb.baseline(), capacity, total_offered,
                                               cfg.view.value_or(pb.default_view()), cfg.ok_threshold)
                              .feasible;
        }
        if (baseline_fits && now - *st.quiet_since + 1e-9 >= cfg.revert_after) {
          const bool at_baseline = st.active_policy == pb.baseline_id();
          st.phase = at_baseline ? Phase::idle : Phase::reverting;
          st.attempt = 0;
          st.candidate_set.clear();
          st.incident_start.reset();
          st.quiet_since.reset();
          if (!at_baseline) {
            st.active_policy = pb.baseline_id();
            st.last_action = now;
            out.action = {DecisionKind::revert, pb.baseline_id(), "no overload for the quiet period", false};
            log(out.action);
          }
        }
        break;
      }
      st.quiet_since.reset();
      if (st.incident_clear) {
        // Overload came back after an all-clear: a new incident, fresh budget.
        start_incident();
        st.incident_start = now;
      }
      if (st.attempt >= cfg.max_attempts) {
        st.phase = Phase::escalated;
        out.action = {DecisionKind::escalate, "", "still overloaded after " + std::to_string(st.attempt) + " attempts",
                      false};
        log(out.action);
        break;
      }
      {
        AssessContext ctx{st.active_policy, std::nullopt, st.attempt, cfg};
        if (!st.candidate_set.empty() || st.attempt > 0) ctx.candidates = st.candidate_set;
        const auto a = assess(statuses, total_offered, pb, ctx);
        if (a.decision.kind == DecisionKind::deploy) {
          deploy(a);
        } else {
          st.phase = Phase::escalated;
          out.action = {DecisionKind::escalate, "", a.decision.rationale, false};
        }
        log(out.action);
      }
      break;
  }
  out.state = st;
  return out;
}

// Controller with its append-only decision log.
class Controller {
 public:
  Controller(const Playbook& pb, ControllerConfig cfg = {}) : pb_(&pb), cfg_(cfg) {
    state_.active_policy = pb.baseline_id();
  }

  Decision tick(const std::vector<SiteStatus>& statuses, double total_offered, double now) {
    auto r = step(state_, statuses, total_offered, *pb_, now, cfg_);
    state_ = std::move(r.state);
    if (r.log) log_.push_back(std::move(*r.log));
    return r.action;
  }

  // Operator override: deploy `policy_id` now and reset the attempt budget.
  Decision manual_deploy(const std::string& policy_id, double now) {
    (void)pb_->entry(policy_id);
    const Phase before = state_.phase;
    state_.active_policy = policy_id;
    state_.attempt = 0;
    state_.candidate_set.clear();
    state_.incident_clear = false;
    state_.quiet_since.reset();
    state_.last_action = now;
    state_.phase = policy_id == pb_->baseline_id() ? Phase::reverting : Phase::mitigating;
    Decision d{DecisionKind::deploy, policy_id, "operator override", false};
    LogRecord r;
    r.time = now;
    r.decision = d;
    r.phase_before = before;
    r.phase_after = state_.phase;
    r.manual = true;
    log_.push_back(r);
    return d;
  }

  const ControllerState& state() const { return state_; }
  const std::vector<LogRecord>& log() const { return log_; }
  const ControllerConfig& config() const { return cfg_; }

 private:
  const Playbook* pb_;
  ControllerConfig cfg_;
  ControllerState state_;
  std::vector<LogRecord> log_;
};

inline json to_json(const SiteStatus& s) {
  return {{"site_id", s.site_id},
          {"capacity", s.capacity},
          {"estimated_offered", s.estimated_offered},
          {"observed", s.observed},
          {"reachable", s.reachable}};
}

inline json to_json(const Decision& d) {
  json j{{"kind", to_string(d.kind)}, {"rationale", d.rationale}, {"least_bad", d.least_bad}};
  if (!d.policy_id.empty()) j["policy_id"] = d.policy_id;
  return j;
}

inline json to_json(const LogRecord& r) {
  json st = json::array();
  for (const auto& s : r.statuses) st.push_back(to_json(s));
  return {{"time", r.time},
          {"statuses", st},
          {"total_offered", r.total_offered},
          {"decision", to_json(r.decision)},
          {"phase_before", to_string(r.phase_before)},
          {"phase_after", to_string(r.phase_after)},
          {"attempt", r.attempt},
          {"candidates", r.candidates},
          {"manual", r.manual}};
}

inline json to_json(const ControllerState& s) {
  json j{{"phase", to_string(s.phase)},
         {"active_policy", s.active_policy},
         {"attempt", s.attempt},
         {"candidate_set", s.candidate_set}};
  j["last_action"] = s.last_action ? json(*s.last_action) : json(nullptr);
  return j;
}

inline json to_json(const ControllerConfig& c) {
  json j{{"eval_interval", c.eval_interval},
         {"revert_after", c.revert_after},
         {"detect_hold", c.detect_hold},
         {"max_attempts", c.max_attempts},
         {"overload_threshold", c.overload_threshold},
         {"ok_threshold", c.ok_threshold}};
  j["view"] = c.view ? json(to_string(*c.view)) : json(nullptr);
  return j;
}

// Missing keys keep the values in `base`.
inline ControllerConfig controller_config_from_json(const json& j, ControllerConfig base = {}) {
  if (!j.is_object()) throw ParseError("controller config must be an object");
  try {
    if (j.contains("eval_interval")) base.eval_interval = j["eval_interval"].get<double>();
    if (j.contains("revert_after")) base.revert_after = j["revert_after"].get<double>();
    if (j.contains("detect_hold")) base.detect_hold = j["detect_hold"].get<double>();
    if (j.contains("max_attempts")) base.max_attempts = j["max_attempts"].get<int>();
    if (j.contains("overload_threshold")) base.overload_threshold = j["overload_threshold"].get<double>();
    if (j.contains("ok_threshold")) base.ok_threshold = j["ok_threshold"].get<double>();
    if (j.contains("view") && !j["view"].is_null())
      base.view = fraction_view_from_string(j["view"].get<std::string>());
  } catch (const json::exception& e) {
    throw ParseError(std::string("controller config: ") + e.what());
  }
  if (!(base.eval_interval > 0) || !(base.revert_after > 0) || base.detect_hold < 0 || base.max_attempts < 1)
    throw ValidationError("controller timers must be positive and max_attempts >= 1");
  return base;
}

}  // namespace anycast
