#pragma once

// Shared helpers for unit and acceptance tests: random worlds richer than
// generate_topology's (multi-neighbor sites, peers, route servers, short
// length filters), random policies, and the oracle comparison.

#include <random>
#include <string>

#include "anycast/anycast.hpp"
#include "oracle/route_oracle.hpp"

namespace testing_support {

using namespace anycast;

inline std::string fixture(const std::string& name) { return std::string(FIXTURES_DIR) + "/" + name; }

struct WorldSpec {
  int max_ases = 8;
  int max_sites = 3;
  bool route_server = true;
  bool short_filters = true;
};

inline int pick(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(util::uniform_index(rng, static_cast<std::uint64_t>(hi - lo + 1)));
}
inline bool coin(std::mt19937_64& rng, double p) { return util::uniform_unit(rng) < p; }

inline AsGraph random_world(std::uint64_t seed, const WorldSpec& spec = {}) {
  std::mt19937_64 rng(seed);
  const bool rs = spec.route_server && spec.max_ases >= 5 && coin(rng, 0.4);
  const int budget = spec.max_ases - (rs ? 1 : 0);
  const int n_t1 = pick(rng, 1, std::max(1, std::min(3, budget / 4)));
  const int n_mid = pick(rng, 1, std::max(1, (budget - n_t1) / 2));
  const int n_stub = std::max(1, pick(rng, 1, budget - n_t1 - n_mid));

  std::vector<AsNode> nodes;
  std::vector<AsLink> links;
  std::vector<Asn> t1, mid, stub;
  Asn next = 1;
  for (int i = 0; i < n_t1; ++i) t1.push_back(next++);
  for (int i = 0; i < n_mid; ++i) mid.push_back(next++);
  for (int i = 0; i < n_stub; ++i) stub.push_back(next++);
  auto maxlen = [&](int dflt) { return spec.short_filters && coin(rng, 0.15) ? pick(rng, 2, 5) : dflt; };
  for (Asn a : t1) nodes.push_back({a, true, maxlen(50), false});
  for (Asn a : mid) nodes.push_back({a, false, maxlen(50), false});
  for (Asn a : stub) nodes.push_back({a, false, maxlen(10), false});
  for (std::size_t i = 0; i < t1.size(); ++i)
    for (std::size_t k = i + 1; k < t1.size(); ++k) links.push_back({t1[i], t1[k], Relationship::peer});
  auto providers = [&](Asn c, const std::vector<Asn>& pool) {
    std::vector<Asn> p = pool;
    util::shuffle(p, rng);
    const int n = std::min<int>(static_cast<int>(p.size()), coin(rng, 0.5) ? 2 : 1);
    for (int i = 0; i < n; ++i) links.push_back({c, p[static_cast<std::size_t>(i)], Relationship::customer_of});
  };
  for (Asn m : mid) providers(m, t1);
  for (std::size_t i = 0; i < mid.size(); ++i)
    for (std::size_t k = i + 1; k < mid.size(); ++k)
      if (coin(rng, 0.3)) links.push_back({mid[i], mid[k], Relationship::peer});
  for (Asn s : stub) {
    std::vector<Asn> pool = mid;
    if (coin(rng, 0.2)) pool.insert(pool.end(), t1.begin(), t1.end());
    providers(s, pool);
  }
  Asn rs_asn = 0;
  if (rs) {
    rs_asn = next++;
    nodes.push_back({rs_asn, false, 50, true});
    std::vector<Asn> cand = mid;
    cand.insert(cand.end(), stub.begin(), stub.end());
    util::shuffle(cand, rng);
    const int members = std::min<int>(static_cast<int>(cand.size()), pick(rng, 2, 4));
    for (int i = 0; i < members; ++i) links.push_back({rs_asn, cand[static_cast<std::size_t>(i)], Relationship::peer});
  }

  std::vector<Asn> hosts = mid;
  hosts.insert(hosts.end(), stub.begin(), stub.end());
  const int n_sites = pick(rng, 1, std::min<int>(spec.max_sites, static_cast<int>(hosts.size())));
  std::vector<AnycastSite> sites;
  for (int i = 0; i < n_sites; ++i) {
    AnycastSite s;
    s.site_id = "S" + std::to_string(i + 1);
    s.host_asn = 64500;
    s.capacity = 100;
    std::vector<Asn> pool = hosts;
    pool.insert(pool.end(), t1.begin(), t1.end());
    util::shuffle(pool, rng);
    const int nn = pick(rng, 1, std::min<int>(3, static_cast<int>(pool.size())));
    for (int k = 0; k < nn; ++k) {
      const bool as_peer = k > 0 && coin(rng, 0.3);
      s.neighbors.push_back({pool[static_cast<std::size_t>(k)], as_peer ? NeighborClass::peer : NeighborClass::transit,
                             "N" + std::to_string(k + 1)});
    }
    if (rs && coin(rng, 0.5)) s.neighbors.push_back({rs_asn, NeighborClass::route_server, "RS"});
    sites.push_back(std::move(s));
  }
  std::vector<ClientBlock> clients;
  std::vector<Asn> attach = hosts;
  attach.insert(attach.end(), t1.begin(), t1.end());
  const int n_clients = pick(rng, 4, 24);
  for (int i = 0; i < n_clients; ++i) {
    const Asn at = coin(rng, 0.7) ? stub[util::uniform_index(rng, stub.size())]
                                  : attach[util::uniform_index(rng, attach.size())];
    clients.push_back({"b" + std::to_string(i), at, static_cast<double>(pick(rng, 1, 5))});
  }
  return AsGraph(std::move(nodes), std::move(links), std::move(sites), std::move(clients));
}

// A valid random policy: prepends, selective subsets, poisons, withdraws.
inline PolicyConfig random_policy(const AsGraph& g, std::mt19937_64& rng, const std::string& id = "rand") {
  auto c = baseline_policy(g, id);
  std::vector<Asn> asns;
  for (const auto& n : g.nodes()) asns.push_back(n.asn);
  for (auto& [sid, p] : c.per_site) {
    const auto& s = g.site(sid);
    if (coin(rng, 0.5)) p.prepend = pick(rng, 0, 3);
    if (s.supports_selective && s.neighbors.size() > 1 && coin(rng, 0.3)) {
      std::set<Asn> sub;
      for (const auto& n : s.neighbors)
        if (coin(rng, 0.5)) sub.insert(n.asn);
      if (!sub.empty()) p.announce_to = sub;
    }
    if (s.supports_poisoning && coin(rng, 0.2)) p.poison.insert(asns[util::uniform_index(rng, asns.size())]);
    if (coin(rng, 0.15)) p.withdrawn = true;
  }
  bool any_up = false;
  for (auto& [sid, p] : c.per_site) any_up = any_up || !p.withdrawn;
  if (!any_up) c.per_site.begin()->second.withdrawn = false;
  return c;
}

inline std::map<std::string, oracle::SiteAction> to_actions(const PolicyConfig& c) {
  std::map<std::string, oracle::SiteAction> out;
  for (const auto& [id, p] : c.per_site) out[id] = {p.prepend, p.announce_to, p.poison, p.withdrawn};
  return out;
}

// Empty string on agreement, else a description of the first mismatch.
inline std::string compare_with_oracle(const AsGraph& g, const PolicyConfig& c, const RoutingOptions& opt = {}) {
  const auto rt = compute_routes(g, c, opt);
  const auto ref = oracle::solve(g, to_actions(c), {opt.tier1_leak_filter, opt.length_filter});
  if (!ref.resolved) return "oracle could not resolve a stable assignment";
  for (const auto& n : g.nodes()) {
    if (n.route_server) continue;
    const auto* r = rt.find(n.asn);
    const auto& o = ref.best.at(n.asn);
    if (!r && !o) continue;
    if (!r || !o)
      return "AS" + std::to_string(n.asn) + ": engine " + (r ? r->origin_site : "none") + " oracle " +
             (o ? o->origin : "none");
    if (r->as_path != o->hops || r->origin_site != o->origin ||
        static_cast<int>(r->learned_from) != static_cast<int>(o->cls))
      return "AS" + std::to_string(n.asn) + ": engine " + r->origin_site + "/" + std::to_string(r->as_path.size()) +
             " oracle " + o->origin + "/" + std::to_string(o->hops.size());
  }
  return "";
}

inline const Playbook& reference_playbook() {
  static const Playbook pb = load_playbook(fixture("reference_playbook.json"));
  return pb;
}

}  // namespace testing_support
