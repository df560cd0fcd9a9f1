#pragma once

// Checks shared by the replay unit tests and the acceptance binary: the
// estimator closed loop over randomized replays, and the mitigation pattern
// expected of the bundled scenarios.

#include <cmath>
#include <sstream>
#include <string>

#include "support.hpp"

namespace scenario_checks {

using namespace anycast;

struct ClosedLoop {
  std::size_t windows = 0;  // (site, sample) pairs that qualified
  double worst = 0.0;       // largest relative error seen
  std::string where;
  std::size_t cutovers = 0;
  std::size_t dropping = 0;  // qualified windows with losses in them
};

struct World {
  AsGraph graph;
  Playbook playbook;
  std::vector<TraceEvent> trace;
  ReplayOptions options;
};

// A random generated topology, a prepend playbook over it, background and
// known-good traffic plus one to three attack phases, and capacities below
// the attack peak at some sites.
inline World random_scenario(std::uint64_t seed) {
  std::mt19937_64 rng(seed * 7919 + 13);
  GeneratorSpec gs;
  gs.seed = seed;
  gs.n_tier1 = testing_support::pick(rng, 1, 3);
  gs.n_mid = testing_support::pick(rng, 3, 8);
  gs.n_stub = testing_support::pick(rng, 6, 20);
  gs.n_sites = testing_support::pick(rng, 2, 4);
  gs.n_clients = testing_support::pick(rng, 60, 160);
  auto g = generate_topology(gs);
  PolicyMenu menu;
  menu.max_prepend = 2;
  menu.include_negative = true;
  auto pb = build_playbook(g, enumerate_policies(g, menu), 0);

  TraceSpec ts;
  ts.seed = seed;
  ts.duration = 3000;
  for (const auto& b : g.clients()) ts.sources.push_back(b.block_id);
  ts.background.legit_rate = 1000 + 4000 * util::uniform_unit(rng);
  for (const auto& b : g.clients())
    if (testing_support::coin(rng, 0.3)) ts.background.known_good_members.push_back(b.block_id);
  if (ts.background.known_good_members.empty()) ts.background.known_good_members.push_back(g.clients()[0].block_id);
  ts.background.known_good_rate = 0.5 + 3 * util::uniform_unit(rng);
  ts.background.known_good_jitter = 0.02;
  double at = 200 + 200 * util::uniform_unit(rng);
  const int phases = testing_support::pick(rng, 1, 3);
  double peak = 0;
  for (int i = 0; i < phases && at < ts.duration - 200; ++i) {
    PhaseSpec p;
    p.start = at;
    p.duration = std::min(ts.duration - at, 400 + 1200 * util::uniform_unit(rng));
    p.total_rate = 5000 + 60000 * util::uniform_unit(rng);
    p.skew = 1.5 * util::uniform_unit(rng);
    peak = std::max(peak, p.total_rate);
    ts.phases.push_back(p);
    at = p.start + p.duration + 60 + 300 * util::uniform_unit(rng);
  }
  auto trace = synthesize_trace(ts);

  ReplayOptions opt;
  opt.duration = ts.duration;
  const double per_site = (peak + ts.background.legit_rate) / static_cast<double>(g.sites().size());
  for (const auto& s : g.site_ids()) opt.capacities[s] = per_site * (0.3 + 1.2 * util::uniform_unit(rng));
  return {std::move(g), std::move(pb), std::move(trace), opt};
}

// Compares every site's offered-load estimate against the mean true offered
// load over the same window of samples (never reaching across a cutover).
// A window qualifies when every sample in it expects at least 40 known-good
// queries per minute at the site.
inline ClosedLoop closed_loop_trial(std::uint64_t seed) {
  const auto w = random_scenario(seed);
  const auto report = run_scenario(w.graph, w.playbook, w.trace, w.options);
  const auto& tl = report.timeline;
  const auto len = static_cast<std::size_t>(std::llround(w.options.window.length / w.options.tick));
  ClosedLoop out;
  std::size_t segment_start = 0;
  for (std::size_t i = 0; i < tl.size(); ++i) {
    if (i > 0 && tl[i].active_policy != tl[i - 1].active_policy) {
      segment_start = i;
      ++out.cutovers;
    }
    const std::size_t from = std::max(segment_start, i + 1 >= len ? i + 1 - len : 0);
    for (const auto& [site, st] : tl[i].sites) {
      bool qualifies = true, dropping = false;
      double offered = 0;
      for (std::size_t j = from; j <= i; ++j) {
        const auto& sj = tl[j].sites.at(site);
        if (sj.known_offered * 60.0 < kMinKnownPerMinute) qualifies = false;
        offered += sj.offered;
        dropping = dropping || sj.dropped > 0;
      }
      if (!qualifies) continue;
      offered /= static_cast<double>(i - from + 1);
      if (!(offered > 0)) continue;
      ++out.windows;
      out.dropping += dropping;
      const double err = std::abs(st.estimated_offered / offered - 1.0);
      if (err > out.worst) {
        out.worst = err;
        std::ostringstream os;
        os << "seed " << seed << " t=" << tl[i].t << " " << site << " est " << st.estimated_offered << " true "
           << offered;
        out.where = os.str();
      }
    }
  }
  return out;
}

struct Expectation {
  std::string first_policy_prefix;  // empty: any
  std::size_t min_controller_deploys = 1;
  bool first_deploy_must_fail = false;
};

// Empty on success, else why the report misses the expected pattern: the
// outcome is mitigated and the last corrective deployment clears all overload
// within one propagation delay, staying clear to the end.
inline std::string check_mitigation(const ScenarioReport& r, const Expectation& want) {
  std::vector<ReplayAction> deploys;
  for (const auto& a : r.actions)
    if (a.trigger == "controller") deploys.push_back(a);
  if (r.outcome != Outcome::mitigated) return "outcome " + to_string(r.outcome);
  if (deploys.size() < want.min_controller_deploys)
    return std::to_string(deploys.size()) + " controller deploys, want >= " +
           std::to_string(want.min_controller_deploys);
  if (!want.first_policy_prefix.empty() && deploys.front().policy_id.rfind(want.first_policy_prefix, 0) != 0)
    return "first deploy " + deploys.front().policy_id + ", want " + want.first_policy_prefix + "*";
  if (want.first_deploy_must_fail && deploys.size() >= 2 &&
      r.clear_between(deploys[0].effective_at, deploys[1].time))
    return "first deploy already cleared the overload";
  const auto& fix = deploys.back();
  const auto clear = r.first_clear_after(fix.time);
  if (!clear) return "never clear after " + fix.policy_id;
  if (*clear > fix.time + r.propagation_delay + 1e-9)
    return "clear at " + std::to_string(*clear) + ", deploy at " + std::to_string(fix.time);
  const double end = r.timeline.empty() ? 0.0 : r.timeline.back().t;
  if (!r.clear_between(fix.effective_at, end)) return "overload returns after " + fix.policy_id + " took effect";
  return "";
}

inline std::string scenario_path(const std::string& name) {
  return testing_support::fixture("scenarios/" + name + ".json");
}

inline const std::vector<std::pair<std::string, Expectation>>& bundled() {
  static const std::vector<std::pair<std::string, Expectation>> v{
      {"transit1_2017", {"announce-AMS-Transit-1", 1, false}},
      {"enterprise_2021", {"", 1, false}},
      {"supersite_2021", {"negprepend-BOS", 1, false}},
      {"iterating_2021", {"", 2, true}},
  };
  return v;
}

}  // namespace scenario_checks
