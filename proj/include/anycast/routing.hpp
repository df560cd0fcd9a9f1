#pragma once

// Policy routing over an AsGraph: relationship-based route selection with
// Gao-Rexford export rules, plus the traffic-engineering knobs an anycast
// operator controls (prepending, selective announcement, poisoning, withdraw).

#include <algorithm>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "error.hpp"
#include "topology.hpp"

namespace anycast {

inline constexpr int kMaxPrepend = 5;

struct SitePolicy {
  int prepend = 0;
  std::optional<std::set<Asn>> announce_to;  // nullopt: every declared neighbor
  std::set<Asn> poison;
  bool withdrawn = false;

  bool operator==(const SitePolicy&) const = default;
};

struct PolicyConfig {
  std::string policy_id;
  std::string label;  // human description, e.g. "1xPrepend AMS"
  std::map<std::string, SitePolicy> per_site;

  // Same routing actions, regardless of naming.
  bool same_actions(const PolicyConfig& o) const { return per_site == o.per_site; }
  bool operator==(const PolicyConfig&) const = default;
};

inline PolicyConfig baseline_policy(const AsGraph& g, std::string id = "baseline") {
  PolicyConfig c;
  c.policy_id = std::move(id);
  c.label = "Baseline";
  for (const auto& s : g.sites())
    if (s.active) c.per_site[s.site_id] = SitePolicy{};
  return c;
}

inline void validate_policy(const AsGraph& g, const PolicyConfig& c) {
  const std::string where = "policy " + c.policy_id;
  const auto active = g.active_site_ids();
  if (c.per_site.size() != active.size())
    throw ValidationError(where + ": must cover every active site exactly once");
  bool any_up = false;
  for (const auto& id : active) {
    auto it = c.per_site.find(id);
    if (it == c.per_site.end()) throw ValidationError(where + ": missing site " + id);
    const auto& p = it->second;
    const auto& site = g.site(id);
    if (p.prepend < 0 || p.prepend > kMaxPrepend)
      throw ValidationError(where + ": prepend at " + id + " outside 0.." + std::to_string(kMaxPrepend));
    if (p.announce_to) {
      if (p.announce_to->empty()) throw ValidationError(where + ": empty announce_to at " + id + " (use withdrawn)");
      for (Asn a : *p.announce_to)
        if (!site.has_neighbor(a))
          throw ValidationError(where + ": announce_to at " + id + " names non-neighbor AS" + std::to_string(a));
      if (!site.supports_selective) throw ValidationError(where + ": " + id + " has no selective announcement");
    }
    for (Asn a : p.poison) {
      if (a == site.host_asn) throw ValidationError(where + ": " + id + " poisons its own host asn");
      if (a == 0) throw ValidationError(where + ": poison asn must be positive");
    }
    if (!p.poison.empty() && !site.supports_poisoning)
      throw ValidationError(where + ": " + id + " does not support poisoning");
    if (!p.withdrawn) any_up = true;
  }
  if (!any_up) throw ValidationError(where + ": every site withdrawn");
}

// Prepend k at every announcing site except `favored_site`, which announces
// unprepended; draws traffic toward the favored site.
inline PolicyConfig expand_negative_prepend(const PolicyConfig& base, const std::string& favored_site, int k) {
  auto it = base.per_site.find(favored_site);
  if (it == base.per_site.end()) throw UnknownIdError("site " + favored_site);
  if (it->second.withdrawn) throw ValidationError("site " + favored_site + " is withdrawn in " + base.policy_id);
  if (k < 1 || k > kMaxPrepend)
    throw RangeError("negative prepend k=" + std::to_string(k) + " outside 1.." + std::to_string(kMaxPrepend));
  PolicyConfig out = base;
  out.policy_id = "negprepend-" + favored_site + "-" + std::to_string(k);
  out.label = "-" + std::to_string(k) + "xPrepend " + favored_site;
  for (auto& [id, p] : out.per_site) {
    if (p.withdrawn) continue;
    p.prepend = (id == favored_site) ? 0 : k;
  }
  return out;
}

struct Announcement {
  std::string origin_site;
  std::vector<Asn> as_path;            // as emitted at the origin
  std::vector<SiteNeighbor> targets;   // neighbors that receive it
  int effective_prepend = 0;
  bool prepend_implied_by_poison = false;
};

// One announcement per non-withdrawn site. A poisoned path carries the origin
// on both ends ([own.., poisoned.., own]); when any site poisons, every
// non-poisoning site is raised to at least two prepends so that poisoning
// does not by itself lengthen the poisoning site's path relative to others.
inline std::vector<Announcement> build_announcements(const AsGraph& g, const PolicyConfig& c) {
  validate_policy(g, c);
  bool any_poison = false;
  for (const auto& [id, p] : c.per_site)
    if (!p.withdrawn && !p.poison.empty()) any_poison = true;

  std::vector<Announcement> out;
  for (const auto& site : g.sites()) {
    if (!site.active) continue;
    const auto& p = c.per_site.at(site.site_id);
    if (p.withdrawn) continue;
    Announcement a;
    a.origin_site = site.site_id;
    a.effective_prepend = p.prepend;
    if (any_poison && p.poison.empty() && p.prepend < 2) {
      a.effective_prepend = 2;
      a.prepend_implied_by_poison = true;
    }
    a.as_path.assign(static_cast<std::size_t>(a.effective_prepend) + 1, site.host_asn);
    if (!p.poison.empty()) {
      a.as_path.insert(a.as_path.end(), p.poison.begin(), p.poison.end());
      a.as_path.push_back(site.host_asn);
    }
    for (const auto& n : site.neighbors)
      if (!p.announce_to || p.announce_to->count(n.asn)) a.targets.push_back(n);
    out.push_back(std::move(a));
  }
  return out;
}

enum class LearnedFrom { customer = 0, peer = 1, provider = 2 };

inline std::string to_string(LearnedFrom l) {
  switch (l) {
    case LearnedFrom::customer: return "customer";
    case LearnedFrom::peer: return "peer";
    case LearnedFrom::provider: return "provider";
  }
  return "?";
}

struct RouteEntry {
  std::string origin_site;
  std::vector<Asn> as_path;  // as installed: next hop first, origin last
  LearnedFrom learned_from = LearnedFrom::provider;
  Asn next_hop = 0;
  std::size_t announcement_length = 0;  // trailing part of as_path emitted by the origin

  // Hops the route actually traversed (excludes the origin's own emission).
  std::vector<Asn> forwarding_hops() const {
    return {as_path.begin(), as_path.end() - static_cast<std::ptrdiff_t>(announcement_length)};
  }
  bool operator==(const RouteEntry&) const = default;
};

struct RouteTable {
  std::map<Asn, std::optional<RouteEntry>> best;  // every AS; nullopt = no route

  const RouteEntry* find(Asn a) const {
    auto it = best.find(a);
    if (it == best.end() || !it->second) return nullptr;
    return &*it->second;
  }
  std::set<Asn> catchment(const std::string& site) const {
    std::set<Asn> out;
    for (const auto& [a, r] : best)
      if (r && r->origin_site == site) out.insert(a);
    return out;
  }
  bool operator==(const RouteTable&) const = default;
};

struct RoutingOptions {
  bool tier1_leak_filter = true;
  bool length_filter = true;
};

namespace detail {

struct RouteSource {
  Asn neighbor = 0;        // 0 when the source is a site announcement
  std::size_t announcement = 0;
  LearnedFrom learned_from = LearnedFrom::provider;
};

// Import filters applied by `holder` to a candidate path.
inline bool accepts(const AsGraph& g, const AsNode& holder, const std::vector<Asn>& path, LearnedFrom via,
                    const RoutingOptions& opt) {
  if (std::find(path.begin(), path.end(), holder.asn) != path.end()) return false;
  if (opt.length_filter && path.size() > static_cast<std::size_t>(holder.edge_filter_maxlen)) return false;
  if (opt.tier1_leak_filter && holder.tier1 && via == LearnedFrom::customer) {
    for (Asn a : path)
      if (a != holder.asn && g.has_node(a) && g.node(a).tier1) return false;
  }
  return true;
}

inline auto rank(const RouteEntry& r) {
  return std::make_tuple(static_cast<int>(r.learned_from), r.as_path.size(), r.next_hop, r.origin_site);
}

}  // namespace detail

// Best route from every AS to the anycast prefix. Synchronous path-vector
// iteration to a fixed point; selection is local preference by learning
// relationship (customer > peer > provider), then shortest AS path, then
// lowest next-hop ASN. Route servers are transparent: their members learn
// from each other (and from sites announcing to the server) as peers.
inline RouteTable compute_routes(const AsGraph& g, const PolicyConfig& c, const RoutingOptions& opt = {}) {
  const auto anns = build_announcements(g, c);

  std::map<Asn, std::vector<detail::RouteSource>> sources;
  for (const auto& n : g.nodes()) {
    if (n.route_server) continue;
    auto& src = sources[n.asn];
    const auto& adj = g.adjacency(n.asn);
    std::set<Asn> direct;
    for (Asn y : adj.customers) {
      src.push_back({y, 0, LearnedFrom::customer});
      direct.insert(y);
    }
    for (Asn y : adj.providers) {
      src.push_back({y, 0, LearnedFrom::provider});
      direct.insert(y);
    }
    std::set<Asn> via_rs;
    for (Asn y : adj.peers) {
      if (g.node(y).route_server) {
        for (Asn m : g.route_server_members(y))
          if (m != n.asn && !g.node(m).route_server) via_rs.insert(m);
      } else {
        src.push_back({y, 0, LearnedFrom::peer});
        direct.insert(y);
      }
    }
    for (Asn m : via_rs)
      if (!direct.count(m)) src.push_back({m, 0, LearnedFrom::peer});
  }
  for (std::size_t i = 0; i < anns.size(); ++i) {
    for (const auto& t : anns[i].targets) {
      if (t.cls == NeighborClass::route_server) {
        for (Asn m : g.route_server_members(t.asn))
          if (!g.node(m).route_server) sources[m].push_back({0, i, LearnedFrom::peer});
      } else {
        sources[t.asn].push_back({0, i, t.cls == NeighborClass::transit ? LearnedFrom::customer : LearnedFrom::peer});
      }
    }
  }

  RouteTable table;
  for (const auto& n : g.nodes()) table.best[n.asn] = std::nullopt;

  const std::size_t max_passes = 10 * g.nodes().size() + 50;
  for (std::size_t pass = 0;; ++pass) {
    if (pass >= max_passes) throw std::runtime_error("route computation did not converge");
    bool changed = false;
    for (const auto& n : g.nodes()) {
      if (n.route_server) continue;
      std::optional<RouteEntry> best;
      for (const auto& s : sources[n.asn]) {
        RouteEntry cand;
        cand.learned_from = s.learned_from;
        if (s.neighbor == 0) {
          const auto& a = anns[s.announcement];
          cand.origin_site = a.origin_site;
          cand.as_path = a.as_path;
          cand.next_hop = a.as_path.front();
          cand.announcement_length = a.as_path.size();
        } else {
          const auto* r = table.find(s.neighbor);
          if (!r) continue;
          // Export rule: only customer-learned routes go to peers/providers.
          const bool to_customer = g.relationship(n.asn, s.neighbor) == Relationship::customer_of;
          if (r->learned_from != LearnedFrom::customer && !to_customer) continue;
          cand.origin_site = r->origin_site;
          cand.as_path.reserve(r->as_path.size() + 1);
          cand.as_path.push_back(s.neighbor);
          cand.as_path.insert(cand.as_path.end(), r->as_path.begin(), r->as_path.end());
          cand.next_hop = s.neighbor;
          cand.announcement_length = r->announcement_length;
        }
        if (!detail::accepts(g, n, cand.as_path, cand.learned_from, opt)) continue;
        if (!best || detail::rank(cand) < detail::rank(*best)) best = std::move(cand);
      }
      auto& slot = table.best[n.asn];
      if (slot != best) {
        slot = std::move(best);
        changed = true;
      }
    }
    if (!changed) break;
  }
  return table;
}

// Field-level edit distance between two configs over the same site set.
inline int policy_distance(const PolicyConfig& a, const PolicyConfig& b) {
  if (a.per_site.size() != b.per_site.size())
    throw ValidationError("policy_distance: site sets differ (" + a.policy_id + ", " + b.policy_id + ")");
  int d = 0;
  for (const auto& [id, pa] : a.per_site) {
    auto it = b.per_site.find(id);
    if (it == b.per_site.end()) throw ValidationError("policy_distance: site " + id + " missing in " + b.policy_id);
    const auto& pb = it->second;
    d += std::abs(pa.prepend - pb.prepend);
    d += pa.announce_to != pb.announce_to ? 1 : 0;
    d += pa.poison != pb.poison ? 1 : 0;
    d += pa.withdrawn != pb.withdrawn ? 1 : 0;
  }
  return d;
}

// ---------------------------------------------------------------------------
// Serialization (embedded in playbook files)

inline json to_json(const SitePolicy& p) {
  json j{{"prepend", p.prepend}, {"withdrawn", p.withdrawn}};
  if (p.announce_to)
    j["announce_to"] = std::vector<Asn>(p.announce_to->begin(), p.announce_to->end());
  else
    j["announce_to"] = "all";
  j["poison"] = std::vector<Asn>(p.poison.begin(), p.poison.end());
  return j;
}

inline SitePolicy site_policy_from_json(const json& j) {
  SitePolicy p;
  p.prepend = detail::field_or<int>(j, "prepend", 0, "site policy");
  p.withdrawn = detail::field_or<bool>(j, "withdrawn", false, "site policy");
  if (j.contains("announce_to")) {
    const auto& a = j.at("announce_to");
    if (a.is_string()) {
      if (a.get<std::string>() != "all") throw ParseError("announce_to must be \"all\" or a list of asns");
    } else if (a.is_array()) {
      p.announce_to = a.get<std::set<Asn>>();
    } else {
      throw ParseError("announce_to must be \"all\" or a list of asns");
    }
  }
  if (j.contains("poison")) p.poison = j.at("poison").get<std::set<Asn>>();
  return p;
}

inline json to_json(const PolicyConfig& c) {
  json j{{"policy_id", c.policy_id}, {"label", c.label}};
  j["per_site"] = json::object();
  for (const auto& [id, p] : c.per_site) j["per_site"][id] = to_json(p);
  return j;
}

inline PolicyConfig policy_from_json(const json& j) {
  PolicyConfig c;
  c.policy_id = detail::field<std::string>(j, "policy_id", "policy");
  c.label = detail::field_or<std::string>(j, "label", "", "policy " + c.policy_id);
  if (!j.contains("per_site") || !j.at("per_site").is_object())
    throw ParseError("policy " + c.policy_id + ": missing per_site object");
  for (const auto& [id, jp] : j.at("per_site").items()) c.per_site[id] = site_policy_from_json(jp);
  return c;
}

}  // namespace anycast
