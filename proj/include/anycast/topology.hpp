#pragma once

// AS-level world model: ASes, business relationships, anycast sites and the
// client /24 blocks whose catchments we care about.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "util.hpp"

namespace anycast {

using Asn = std::uint32_t;
using json = nlohmann::json;

inline constexpr int kDefaultTransitMaxLen = 50;
inline constexpr int kDefaultStubMaxLen = 10;

enum class Relationship { customer_of, provider_of, peer };
enum class NeighborClass { transit, peer, route_server };

inline std::string to_string(Relationship r) {
  switch (r) {
    case Relationship::customer_of: return "customer-of";
    case Relationship::provider_of: return "provider-of";
    case Relationship::peer: return "peer";
  }
  return "?";
}

inline Relationship relationship_from_string(const std::string& s) {
  if (s == "customer-of") return Relationship::customer_of;
  if (s == "provider-of") return Relationship::provider_of;
  if (s == "peer") return Relationship::peer;
  throw ParseError("unknown relationship '" + s + "'");
}

inline std::string to_string(NeighborClass c) {
  switch (c) {
    case NeighborClass::transit: return "transit";
    case NeighborClass::peer: return "peer";
    case NeighborClass::route_server: return "route-server";
  }
  return "?";
}

inline NeighborClass neighbor_class_from_string(const std::string& s) {
  if (s == "transit") return NeighborClass::transit;
  if (s == "peer") return NeighborClass::peer;
  if (s == "route-server") return NeighborClass::route_server;
  throw ParseError("unknown neighbor class '" + s + "'");
}

struct AsNode {
  Asn asn = 0;
  bool tier1 = false;
  int edge_filter_maxlen = kDefaultTransitMaxLen;  // longest AS path (hops) accepted
  bool route_server = false;                       // IXP route server: fans out, never forwards

  bool operator==(const AsNode&) const = default;
};

struct AsLink {
  Asn from = 0;
  Asn to = 0;
  Relationship relationship = Relationship::peer;

  bool operator==(const AsLink&) const = default;
};

struct SiteNeighbor {
  Asn asn = 0;
  NeighborClass cls = NeighborClass::transit;
  std::string label;  // operator-facing name, e.g. "Transit-1"

  bool operator==(const SiteNeighbor&) const = default;
};

struct AnycastSite {
  std::string site_id;
  Asn host_asn = 0;
  std::vector<SiteNeighbor> neighbors;
  double capacity = 0.0;  // packets/s
  bool active = true;
  bool supports_selective = true;  // community-driven selective announcement
  bool supports_poisoning = true;

  bool has_neighbor(Asn a) const {
    return std::any_of(neighbors.begin(), neighbors.end(), [a](const SiteNeighbor& n) { return n.asn == a; });
  }
  bool operator==(const AnycastSite&) const = default;
};

struct ClientBlock {
  std::string block_id;  // stands for one /24
  Asn attach_asn = 0;
  double weight = 1.0;   // relative query load

  bool operator==(const ClientBlock&) const = default;
};

// Validated, immutable AS graph. Construction checks every structural
// invariant and throws ValidationError naming the violated one.
class AsGraph {
 public:
  struct Adjacency {
    std::vector<Asn> customers;
    std::vector<Asn> providers;
    std::vector<Asn> peers;
  };

  AsGraph() = default;

  AsGraph(std::vector<AsNode> nodes, std::vector<AsLink> links, std::vector<AnycastSite> sites,
          std::vector<ClientBlock> clients)
      : nodes_(std::move(nodes)), sites_(std::move(sites)), clients_(std::move(clients)) {
    std::sort(nodes_.begin(), nodes_.end(), [](const AsNode& a, const AsNode& b) { return a.asn < b.asn; });
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (nodes_[i].asn == 0) throw ValidationError("asn must be positive");
      if (i > 0 && nodes_[i].asn == nodes_[i - 1].asn)
        throw ValidationError("duplicate asn " + std::to_string(nodes_[i].asn));
      if (nodes_[i].edge_filter_maxlen < 1)
        throw ValidationError("edge_filter_maxlen of AS" + std::to_string(nodes_[i].asn) + " must be >= 1");
      if (nodes_[i].route_server && nodes_[i].tier1)
        throw ValidationError("AS" + std::to_string(nodes_[i].asn) + " cannot be both tier1 and route server");
      index_[nodes_[i].asn] = i;
      adjacency_[nodes_[i].asn];
    }
    normalize_links(std::move(links));
    validate_sites();
    validate_clients();
  }

  const std::vector<AsNode>& nodes() const { return nodes_; }
  const std::vector<AsLink>& links() const { return links_; }
  const std::vector<AnycastSite>& sites() const { return sites_; }
  const std::vector<ClientBlock>& clients() const { return clients_; }

  bool has_node(Asn a) const { return index_.count(a) != 0; }
  const AsNode& node(Asn a) const {
    auto it = index_.find(a);
    if (it == index_.end()) throw UnknownIdError("AS" + std::to_string(a));
    return nodes_[it->second];
  }
  const Adjacency& adjacency(Asn a) const {
    auto it = adjacency_.find(a);
    if (it == adjacency_.end()) throw UnknownIdError("AS" + std::to_string(a));
    return it->second;
  }

  // Relationship of `a` towards `b` (customer_of means a is b's customer).
  std::optional<Relationship> relationship(Asn a, Asn b) const {
    auto it = relationships_.find({a, b});
    if (it == relationships_.end()) return std::nullopt;
    return it->second;
  }

  // Members reachable through a route server: its peers.
  const std::vector<Asn>& route_server_members(Asn rs) const { return adjacency(rs).peers; }

  bool has_site(const std::string& id) const { return site_index(id).has_value(); }
  std::optional<std::size_t> site_index(const std::string& id) const {
    for (std::size_t i = 0; i < sites_.size(); ++i)
      if (sites_[i].site_id == id) return i;
    return std::nullopt;
  }
  const AnycastSite& site(const std::string& id) const {
    auto i = site_index(id);
    if (!i) throw UnknownIdError("site " + id);
    return sites_[*i];
  }
  std::vector<std::string> site_ids() const {
    std::vector<std::string> out;
    for (const auto& s : sites_) out.push_back(s.site_id);
    return out;
  }
  std::vector<std::string> active_site_ids() const {
    std::vector<std::string> out;
    for (const auto& s : sites_)
      if (s.active) out.push_back(s.site_id);
    return out;
  }

  bool has_block(const std::string& id) const { return block_index_.count(id) != 0; }
  const ClientBlock& block(const std::string& id) const {
    auto it = block_index_.find(id);
    if (it == block_index_.end()) throw UnknownIdError("block " + id);
    return clients_[it->second];
  }

  // A stub has no customers.
  bool is_stub(Asn a) const { return adjacency(a).customers.empty(); }

  bool operator==(const AsGraph& o) const {
    return nodes_ == o.nodes_ && links_ == o.links_ && sites_ == o.sites_ && clients_ == o.clients_;
  }

 private:
  void normalize_links(std::vector<AsLink> links) {
    // Canonical form: one record per unordered pair, customer-of rather than
    // provider-of, lower asn first for peers.
    std::map<std::pair<Asn, Asn>, AsLink> canon;
    for (const auto& l : links) {
      if (l.from == l.to) throw ValidationError("self-link on AS" + std::to_string(l.from));
      for (Asn a : {l.from, l.to})
        if (!has_node(a)) throw ValidationError("link references unknown AS" + std::to_string(a));
      AsLink c = l;
      if (c.relationship == Relationship::provider_of) c = {l.to, l.from, Relationship::customer_of};
      if (c.relationship == Relationship::peer && c.from > c.to) std::swap(c.from, c.to);
      const auto key = std::minmax(c.from, c.to);
      auto [it, fresh] = canon.emplace(key, c);
      if (!fresh && !(it->second == c))
        throw ValidationError("conflicting relationships between AS" + std::to_string(key.first) + " and AS" +
                              std::to_string(key.second));
    }
    for (auto& [key, l] : canon) {
      links_.push_back(l);
      if (l.relationship == Relationship::customer_of) {
        relationships_[{l.from, l.to}] = Relationship::customer_of;
        relationships_[{l.to, l.from}] = Relationship::provider_of;
        adjacency_[l.from].providers.push_back(l.to);
        adjacency_[l.to].customers.push_back(l.from);
      } else {
        relationships_[{l.from, l.to}] = Relationship::peer;
        relationships_[{l.to, l.from}] = Relationship::peer;
        adjacency_[l.from].peers.push_back(l.to);
        adjacency_[l.to].peers.push_back(l.from);
      }
    }
    for (auto& [asn, adj] : adjacency_) {
      std::sort(adj.customers.begin(), adj.customers.end());
      std::sort(adj.providers.begin(), adj.providers.end());
      std::sort(adj.peers.begin(), adj.peers.end());
      const auto& n = node(asn);
      if (n.route_server && (!adj.customers.empty() || !adj.providers.empty()))
        throw ValidationError("route server AS" + std::to_string(asn) + " may only have peer links");
    }
  }

  void validate_sites() {
    std::set<std::string> ids;
    for (const auto& s : sites_) {
      if (s.site_id.empty()) throw ValidationError("empty site_id");
      if (!ids.insert(s.site_id).second) throw ValidationError("duplicate site_id " + s.site_id);
      if (s.host_asn == 0) throw ValidationError("site " + s.site_id + " has no host_asn");
      if (has_node(s.host_asn))
        throw ValidationError("site " + s.site_id + " host_asn AS" + std::to_string(s.host_asn) +
                              " collides with a graph AS");
      if (s.capacity < 0) throw ValidationError("site " + s.site_id + " has negative capacity");
      if (s.active && !(s.capacity > 0)) throw ValidationError("active site " + s.site_id + " needs capacity > 0");
      if (s.neighbors.empty()) throw ValidationError("site " + s.site_id + " has no neighbors");
      std::set<Asn> seen;
      for (const auto& n : s.neighbors) {
        if (!has_node(n.asn))
          throw ValidationError("site " + s.site_id + " neighbor AS" + std::to_string(n.asn) + " not in nodes");
        if (!seen.insert(n.asn).second)
          throw ValidationError("site " + s.site_id + " lists neighbor AS" + std::to_string(n.asn) + " twice");
        const bool rs = node(n.asn).route_server;
        if (rs != (n.cls == NeighborClass::route_server))
          throw ValidationError("site " + s.site_id + " neighbor AS" + std::to_string(n.asn) +
                                " class does not match its route_server flag");
      }
    }
  }

  void validate_clients() {
    for (std::size_t i = 0; i < clients_.size(); ++i) {
      const auto& c = clients_[i];
      if (c.block_id.empty()) throw ValidationError("empty block_id");
      if (!has_node(c.attach_asn))
        throw ValidationError("block " + c.block_id + " attaches to unknown AS" + std::to_string(c.attach_asn));
      if (node(c.attach_asn).route_server)
        throw ValidationError("block " + c.block_id + " attaches to a route server");
      if (!(c.weight >= 0)) throw ValidationError("block " + c.block_id + " has negative weight");
      if (!block_index_.emplace(c.block_id, i).second) throw ValidationError("duplicate block_id " + c.block_id);
    }
  }

  std::vector<AsNode> nodes_;
  std::vector<AsLink> links_;
  std::vector<AnycastSite> sites_;
  std::vector<ClientBlock> clients_;
  std::map<Asn, std::size_t> index_;
  std::map<Asn, Adjacency> adjacency_;
  std::map<std::pair<Asn, Asn>, Relationship> relationships_;
  std::map<std::string, std::size_t> block_index_;
};

// ---------------------------------------------------------------------------
// Serialization

inline json to_json(const AsGraph& g) {
  json j;
  j["nodes"] = json::array();
  for (const auto& n : g.nodes()) {
    json jn{{"asn", n.asn}, {"tier1", n.tier1}, {"edge_filter_maxlen", n.edge_filter_maxlen}};
    if (n.route_server) jn["route_server"] = true;
    j["nodes"].push_back(jn);
  }
  j["links"] = json::array();
  for (const auto& l : g.links())
    j["links"].push_back({{"from", l.from}, {"to", l.to}, {"relationship", to_string(l.relationship)}});
  j["sites"] = json::array();
  for (const auto& s : g.sites()) {
    json js{{"site_id", s.site_id},
            {"host_asn", s.host_asn},
            {"capacity", s.capacity},
            {"active", s.active},
            {"supports_selective", s.supports_selective},
            {"supports_poisoning", s.supports_poisoning}};
    js["neighbors"] = json::array();
    for (const auto& n : s.neighbors) {
      json jn{{"asn", n.asn}, {"class", to_string(n.cls)}};
      if (!n.label.empty()) jn["label"] = n.label;
      js["neighbors"].push_back(jn);
    }
    j["sites"].push_back(js);
  }
  j["clients"] = json::array();
  for (const auto& c : g.clients())
    j["clients"].push_back({{"block_id", c.block_id}, {"attach_asn", c.attach_asn}, {"weight", c.weight}});
  return j;
}

namespace detail {

template <typename T>
T field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ParseError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(where + ": field '" + key + "': " + e.what());
  }
}

template <typename T>
T field_or(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  return field<T>(j, key, where);
}

}  // namespace detail

// Builds and validates a graph from the documented topology document. Nodes
// without `edge_filter_maxlen` get 10 when they end up as stubs, else 50.
inline AsGraph topology_from_json(const json& j) {
  using detail::field;
  using detail::field_or;
  if (!j.is_object()) throw ParseError("topology must be a JSON object");
  for (const char* key : {"nodes", "links", "sites", "clients"})
    if (!j.contains(key) || !j.at(key).is_array()) throw ParseError(std::string("missing array '") + key + "'");

  std::vector<AsNode> nodes;
  std::set<Asn> explicit_len;
  for (const auto& jn : j.at("nodes")) {
    AsNode n;
    n.asn = field<Asn>(jn, "asn", "node");
    n.tier1 = field_or<bool>(jn, "tier1", false, "node");
    n.route_server = field_or<bool>(jn, "route_server", false, "node");
    if (jn.contains("edge_filter_maxlen")) {
      n.edge_filter_maxlen = field<int>(jn, "edge_filter_maxlen", "node");
      explicit_len.insert(n.asn);
    }
    nodes.push_back(n);
  }
  std::vector<AsLink> links;
  for (const auto& jl : j.at("links")) {
    links.push_back({field<Asn>(jl, "from", "link"), field<Asn>(jl, "to", "link"),
                     relationship_from_string(field<std::string>(jl, "relationship", "link"))});
  }
  std::vector<AnycastSite> sites;
  for (const auto& js : j.at("sites")) {
    AnycastSite s;
    s.site_id = field<std::string>(js, "site_id", "site");
    const std::string where = "site " + s.site_id;
    s.host_asn = field<Asn>(js, "host_asn", where);
    s.capacity = field_or<double>(js, "capacity", 0.0, where);
    s.active = field_or<bool>(js, "active", true, where);
    s.supports_selective = field_or<bool>(js, "supports_selective", true, where);
    s.supports_poisoning = field_or<bool>(js, "supports_poisoning", true, where);
    if (!js.contains("neighbors") || !js.at("neighbors").is_array()) throw ParseError(where + ": missing neighbors");
    for (const auto& jn : js.at("neighbors")) {
      SiteNeighbor n;
      n.asn = field<Asn>(jn, "asn", where);
      n.cls = neighbor_class_from_string(field_or<std::string>(jn, "class", "transit", where));
      n.label = field_or<std::string>(jn, "label", "", where);
      s.neighbors.push_back(n);
    }
    sites.push_back(std::move(s));
  }
  std::vector<ClientBlock> clients;
  for (const auto& jc : j.at("clients")) {
    const Asn attach = field<Asn>(jc, "attach_asn", "client");
    const double weight = field_or<double>(jc, "weight", 1.0, "client");
    if (jc.contains("count")) {
      // Compact form: `count` blocks named <block_prefix>-0 .. -(count-1).
      const auto prefix = field<std::string>(jc, "block_prefix", "client");
      const int count = field<int>(jc, "count", "client");
      if (count < 0) throw ParseError("client group " + prefix + ": negative count");
      for (int i = 0; i < count; ++i) clients.push_back({prefix + "-" + std::to_string(i), attach, weight});
    } else {
      clients.push_back({field<std::string>(jc, "block_id", "client"), attach, weight});
    }
  }

  // Stub-aware default filter length needs the customer sets.
  std::set<Asn> has_customer;
  for (const auto& l : links) {
    if (l.relationship == Relationship::customer_of) has_customer.insert(l.to);
    if (l.relationship == Relationship::provider_of) has_customer.insert(l.from);
  }
  for (auto& n : nodes)
    if (!explicit_len.count(n.asn))
      n.edge_filter_maxlen = has_customer.count(n.asn) ? kDefaultTransitMaxLen : kDefaultStubMaxLen;

  return AsGraph(std::move(nodes), std::move(links), std::move(sites), std::move(clients));
}

inline AsGraph load_topology(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open topology file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  return topology_from_json(j);
}

inline void save_topology(const AsGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << to_json(g).dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Random worlds

struct GeneratorSpec {
  int n_tier1 = 1;
  int n_mid = 2;
  int n_stub = 4;
  int n_clients = 20;
  int n_sites = 2;
  std::uint64_t seed = 0;
  double mid_peer_prob = 0.3;   // chance of a peer link between two mids
  double multihome_prob = 0.5;  // chance a mid/stub buys transit from a second provider
  double site_capacity = 100.0;
};

inline constexpr Asn kGeneratedAnycastAsn = 64500;

// Tier-1s (ASNs 1..) form a peering clique; mids buy transit from Tier-1s;
// stubs buy transit from mids. Sites attach as customers of distinct
// mid/stub ASes and share one origin ASN, as a real anycast prefix does.
inline AsGraph generate_topology(const GeneratorSpec& spec) {
  if (spec.n_tier1 < 1 || spec.n_mid < 1 || spec.n_stub < 1 || spec.n_clients < 1 || spec.n_sites < 1)
    throw ValidationError("generator counts must all be >= 1");
  if (spec.n_sites > spec.n_mid + spec.n_stub)
    throw ValidationError("unsatisfiable spec: n_sites (" + std::to_string(spec.n_sites) +
                          ") exceeds n_mid + n_stub (" + std::to_string(spec.n_mid + spec.n_stub) + ")");
  std::mt19937_64 rng(spec.seed);

  std::vector<AsNode> nodes;
  std::vector<AsLink> links;
  std::vector<Asn> tier1, mids, stubs;
  Asn next = 1;
  for (int i = 0; i < spec.n_tier1; ++i) tier1.push_back(next++);
  for (int i = 0; i < spec.n_mid; ++i) mids.push_back(next++);
  for (int i = 0; i < spec.n_stub; ++i) stubs.push_back(next++);
  for (Asn a : tier1) nodes.push_back({a, true, kDefaultTransitMaxLen, false});
  for (Asn a : mids) nodes.push_back({a, false, kDefaultTransitMaxLen, false});
  for (Asn a : stubs) nodes.push_back({a, false, kDefaultStubMaxLen, false});

  for (std::size_t i = 0; i < tier1.size(); ++i)
    for (std::size_t k = i + 1; k < tier1.size(); ++k) links.push_back({tier1[i], tier1[k], Relationship::peer});

  auto pick_providers = [&](Asn customer, const std::vector<Asn>& pool) {
    const Asn first = pool[util::uniform_index(rng, pool.size())];
    links.push_back({customer, first, Relationship::customer_of});
    if (pool.size() > 1 && util::uniform_unit(rng) < spec.multihome_prob) {
      Asn second = first;
      while (second == first) second = pool[util::uniform_index(rng, pool.size())];
      links.push_back({customer, second, Relationship::customer_of});
    }
  };
  for (Asn m : mids) pick_providers(m, tier1);
  for (std::size_t i = 0; i < mids.size(); ++i)
    for (std::size_t k = i + 1; k < mids.size(); ++k)
      if (util::uniform_unit(rng) < spec.mid_peer_prob) links.push_back({mids[i], mids[k], Relationship::peer});
  for (Asn s : stubs) pick_providers(s, mids);

  std::vector<Asn> hosts = mids;
  hosts.insert(hosts.end(), stubs.begin(), stubs.end());
  util::shuffle(hosts, rng);
  std::vector<AnycastSite> sites;
  for (int i = 0; i < spec.n_sites; ++i) {
    AnycastSite s;
    s.site_id = "S" + std::to_string(i + 1);
    s.host_asn = kGeneratedAnycastAsn;
    s.capacity = spec.site_capacity;
    s.neighbors.push_back({hosts[static_cast<std::size_t>(i)], NeighborClass::transit, "Transit-1"});
    sites.push_back(std::move(s));
  }

  std::vector<ClientBlock> clients;
  for (int i = 0; i < spec.n_clients; ++i) {
    const Asn at = stubs[util::uniform_index(rng, stubs.size())];
    const double w = std::round(util::uniform_real(rng, 0.5, 2.0) * 100.0) / 100.0;
    clients.push_back({"b" + std::to_string(i), at, w});
  }
  return AsGraph(std::move(nodes), std::move(links), std::move(sites), std::move(clients));
}

}  // namespace anycast
