#pragma once

// Per-block catchments: which site each client /24 lands on under a policy.

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "routing.hpp"

namespace anycast {

inline const std::string kUnreachable = "UNREACHABLE";

struct CatchmentMap {
  std::string config;                             // policy_id
  std::map<std::string, std::string> assignment;  // block_id -> site_id or kUnreachable
  std::map<std::string, double> fractions;        // share of reachable blocks
  std::map<std::string, double> load_fractions;   // weight-weighted share of reachable load
  std::size_t unreachable = 0;
  double unreachable_weight = 0.0;

  std::size_t reachable() const { return assignment.size() - unreachable; }
  const std::string& site_of(const std::string& block) const {
    auto it = assignment.find(block);
    if (it == assignment.end()) throw UnknownIdError("block " + block);
    return it->second;
  }
  bool operator==(const CatchmentMap&) const = default;
};

struct CatchmentDiff {
  std::set<std::string> changed;
  double changed_fraction = 0.0;
};

namespace detail {

inline void fill_fractions(CatchmentMap& m, const std::vector<std::string>& sites,
                           const std::map<std::string, double>& weights) {
  std::map<std::string, double> count, load;
  double total_load = 0.0;
  for (const auto& s : sites) count[s] = load[s] = 0.0;
  m.unreachable = 0;
  m.unreachable_weight = 0.0;
  for (const auto& [block, site] : m.assignment) {
    const double w = weights.count(block) ? weights.at(block) : 1.0;
    if (site == kUnreachable) {
      ++m.unreachable;
      m.unreachable_weight += w;
      continue;
    }
    count[site] += 1.0;
    load[site] += w;
    total_load += w;
  }
  const double reachable = static_cast<double>(m.assignment.size() - m.unreachable);
  m.fractions.clear();
  m.load_fractions.clear();
  for (const auto& [s, n] : count) {
    m.fractions[s] = reachable > 0 ? n / reachable : 0.0;
    m.load_fractions[s] = total_load > 0 ? load[s] / total_load : m.fractions[s];
  }
}

}  // namespace detail

inline CatchmentMap catchment_from_routes(const AsGraph& g, const std::string& policy_id, const RouteTable& routes) {
  CatchmentMap m;
  m.config = policy_id;
  std::map<std::string, double> weights;
  for (const auto& b : g.clients()) {
    const auto* r = routes.find(b.attach_asn);
    m.assignment[b.block_id] = r ? r->origin_site : kUnreachable;
    weights[b.block_id] = b.weight;
  }
  detail::fill_fractions(m, g.site_ids(), weights);
  return m;
}

// A block's catchment is the catchment of the AS it homes in.
inline CatchmentMap map_catchment(const AsGraph& g, const PolicyConfig& c, const RoutingOptions& opt = {}) {
  return catchment_from_routes(g, c.policy_id, compute_routes(g, c, opt));
}

inline CatchmentDiff diff_catchments(const CatchmentMap& a, const CatchmentMap& b) {
  if (a.assignment.size() != b.assignment.size())
    throw ValidationError("diff_catchments: block universes differ in size");
  CatchmentDiff d;
  for (const auto& [block, site] : a.assignment) {
    auto it = b.assignment.find(block);
    if (it == b.assignment.end()) throw ValidationError("diff_catchments: block " + block + " missing in second map");
    if (it->second != site) d.changed.insert(block);
  }
  d.changed_fraction =
      a.assignment.empty() ? 0.0 : static_cast<double>(d.changed.size()) / static_cast<double>(a.assignment.size());
  return d;
}

// ---------------------------------------------------------------------------
// Export: CSV `block_id,site_id` plus a JSON summary.

inline std::string catchment_csv(const CatchmentMap& m) {
  std::ostringstream os;
  os << "block_id,site_id\n";
  for (const auto& [block, site] : m.assignment) os << block << ',' << site << '\n';
  return os.str();
}

inline json catchment_summary(const CatchmentMap& m) {
  return json{{"config", m.config},
              {"blocks", m.assignment.size()},
              {"unreachable", m.unreachable},
              {"unreachable_weight", m.unreachable_weight},
              {"fractions", m.fractions},
              {"load_fractions", m.load_fractions}};
}

// Reads the CSV form. Without weights, load fractions equal block fractions.
inline CatchmentMap parse_catchment_csv(std::istream& in, const std::string& policy_id = "") {
  CatchmentMap m;
  m.config = policy_id;
  std::string line;
  std::set<std::string> sites;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (util::trim(line).empty()) continue;
    const auto cols = util::split(line, ',');
    if (lineno == 1 && cols.size() == 2 && cols[0] == "block_id") continue;
    if (cols.size() != 2 || cols[0].empty() || cols[1].empty())
      throw ParseError("catchment csv line " + std::to_string(lineno) + ": expected block_id,site_id");
    if (!m.assignment.emplace(cols[0], cols[1]).second)
      throw ParseError("catchment csv line " + std::to_string(lineno) + ": duplicate block " + cols[0]);
    if (cols[1] != kUnreachable) sites.insert(cols[1]);
  }
  detail::fill_fractions(m, {sites.begin(), sites.end()}, {});
  return m;
}

inline CatchmentMap load_catchment_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open catchment file " + path);
  return parse_catchment_csv(in, path);
}

}  // namespace anycast
