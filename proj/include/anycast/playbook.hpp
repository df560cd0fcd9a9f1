#pragma once

// Pre-computed response playbook: every candidate routing policy with the
// per-site traffic split it produces, binned into 10% buckets and indexed the
// other way round so "which policies put AMS at 20-30%?" is a lookup.

#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "catchment.hpp"

namespace anycast {

inline constexpr int kPlaybookFormatVersion = 1;
inline constexpr std::int64_t kDefaultPlaybookTtl = 30 * 24 * 3600;

inline const std::array<std::string, 10>& bin_labels() {
  static const std::array<std::string, 10> labels{"0-10",  "10-20", "20-30", "30-40", "40-50",
                                                  "50-60", "60-70", "70-80", "80-90", "90-100"};
  return labels;
}

// Half-open 10% bins [lo, hi); a fraction of exactly 1 falls in "90-100".
inline std::string bin_of(double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw RangeError("fraction " + std::to_string(fraction) + " not in [0,1]");
  // Absorb representation error such as 0.3 * 10 = 2.9999999999999996.
  int idx = static_cast<int>(std::floor(fraction * 10.0 + 1e-9));
  if (idx > 9) idx = 9;
  return bin_labels()[static_cast<std::size_t>(idx)];
}

enum class FractionView { block, load };

inline std::string to_string(FractionView v) { return v == FractionView::block ? "block" : "load"; }
inline FractionView fraction_view_from_string(const std::string& s) {
  if (s == "block") return FractionView::block;
  if (s == "load") return FractionView::load;
  throw ParseError("unknown fraction view '" + s + "'");
}

struct PlaybookEntry {
  PolicyConfig config;
  std::map<std::string, double> fractions;
  std::map<std::string, double> load_fractions;
  std::map<std::string, std::string> bins;  // over block fractions
  std::int64_t measured_at = 0;             // unix seconds
  std::size_t unreachable = 0;

  const std::string& policy_id() const { return config.policy_id; }
  const std::map<std::string, double>& view(FractionView v) const {
    return v == FractionView::block ? fractions : load_fractions;
  }
  bool operator==(const PlaybookEntry&) const = default;
};

using PlaybookIndex = std::map<std::pair<std::string, std::string>, std::set<std::string>>;

class Playbook {
 public:
  Playbook() = default;

  Playbook(std::vector<PlaybookEntry> entries, std::string baseline_id,
           FractionView default_view = FractionView::block)
      : entries_(std::move(entries)), baseline_id_(std::move(baseline_id)), default_view_(default_view) {
    if (entries_.empty()) throw ValidationError("playbook has no entries");
    std::set<std::string> ids;
    for (auto& e : entries_) {
      if (!ids.insert(e.policy_id()).second) throw ValidationError("duplicate policy_id " + e.policy_id());
      if (e.load_fractions.empty()) e.load_fractions = e.fractions;
      for (const auto& [site, f] : e.fractions) {
        const auto label = bin_of(f);
        auto it = e.bins.find(site);
        if (it == e.bins.end())
          e.bins[site] = label;
        else if (it->second != label)
          throw ValidationError("policy " + e.policy_id() + ": bin " + it->second + " inconsistent with fraction at " +
                                site);
      }
    }
    if (!ids.count(baseline_id_)) throw ValidationError("baseline " + baseline_id_ + " not among entries");
    for (const auto& [site, f] : entries_.front().fractions) sites_.push_back(site);
    for (const auto& e : entries_) {
      if (e.fractions.size() != sites_.size())
        throw ValidationError("policy " + e.policy_id() + " does not cover the playbook's site set");
      for (const auto& s : sites_) {
        if (!e.fractions.count(s)) throw ValidationError("policy " + e.policy_id() + " lacks site " + s);
        index_[{s, e.bins.at(s)}].insert(e.policy_id());
      }
    }
  }

  const std::vector<PlaybookEntry>& entries() const { return entries_; }
  const std::string& baseline_id() const { return baseline_id_; }
  const std::vector<std::string>& sites() const { return sites_; }
  const PlaybookIndex& index() const { return index_; }
  FractionView default_view() const { return default_view_; }

  bool has_site(const std::string& s) const { return std::find(sites_.begin(), sites_.end(), s) != sites_.end(); }

  const PlaybookEntry* find(const std::string& id) const {
    for (const auto& e : entries_)
      if (e.policy_id() == id) return &e;
    return nullptr;
  }
  const PlaybookEntry& entry(const std::string& id) const {
    const auto* e = find(id);
    if (!e) throw UnknownIdError("policy " + id);
    return *e;
  }
  const PlaybookEntry& baseline() const { return entry(baseline_id_); }

  std::vector<std::string> policy_ids() const {
    std::vector<std::string> out;
    for (const auto& e : entries_) out.push_back(e.policy_id());
    return out;
  }

  // Policies whose block fraction at `site` falls in `bin`.
  std::set<std::string> policies_in_bin(const std::string& site, const std::string& bin) const {
    if (!has_site(site)) throw UnknownIdError("site " + site);
    auto it = index_.find({site, bin});
    return it == index_.end() ? std::set<std::string>{} : it->second;
  }

  // Number of distinct non-empty bins reachable at `site` ("traffic options").
  std::size_t options_count(const std::string& site) const {
    if (!has_site(site)) throw UnknownIdError("site " + site);
    std::size_t n = 0;
    for (const auto& b : bin_labels())
      if (index_.count({site, b})) ++n;
    return n;
  }

  bool is_stale(std::int64_t now, std::int64_t ttl = kDefaultPlaybookTtl) const {
    for (const auto& e : entries_)
      if (now - e.measured_at > ttl) return true;
    return false;
  }

 private:
  std::vector<PlaybookEntry> entries_;
  std::string baseline_id_;
  FractionView default_view_ = FractionView::block;
  std::vector<std::string> sites_;
  PlaybookIndex index_;
};

// ---------------------------------------------------------------------------
// Enumeration

struct PolicyMenu {
  int max_prepend = 0;
  bool include_negative = false;
  std::map<std::string, std::vector<std::set<Asn>>> selective_sets;  // site -> announce_to variants
  std::map<std::string, std::vector<Asn>> poison_candidates;         // site -> one poison per config
};

namespace detail {

inline std::string neighbor_names(const AnycastSite& site, const std::set<Asn>& asns) {
  std::string out;
  for (Asn a : asns) {
    std::string name = "AS" + std::to_string(a);
    for (const auto& n : site.neighbors)
      if (n.asn == a && !n.label.empty()) name = n.label;
    if (!out.empty()) out += "+";
    out += name;
  }
  return out;
}

}  // namespace detail

// Deterministic, de-duplicated candidate list: baseline first, then positive
// prepends per site, negative prepends, selective announcements, poisonings.
// Sites lacking community or poisoning support contribute no such variants.
inline std::vector<PolicyConfig> enumerate_policies(const AsGraph& g, const PolicyMenu& menu) {
  if (menu.max_prepend < 0 || menu.max_prepend > kMaxPrepend)
    throw RangeError("max_prepend " + std::to_string(menu.max_prepend) + " outside 0.." + std::to_string(kMaxPrepend));
  for (const auto& [site, sets] : menu.selective_sets) {
    const auto& s = g.site(site);
    for (const auto& set : sets) {
      if (set.empty()) throw ValidationError("menu: empty selective set at " + site);
      for (Asn a : set)
        if (!s.has_neighbor(a))
          throw UnknownIdError("menu: AS" + std::to_string(a) + " is not a neighbor of " + site);
    }
  }
  for (const auto& [site, asns] : menu.poison_candidates) (void)g.site(site);

  const PolicyConfig base = baseline_policy(g);
  std::vector<PolicyConfig> out{base};
  auto add = [&](PolicyConfig c) {
    for (const auto& e : out)
      if (e.same_actions(c)) return;
    validate_policy(g, c);
    out.push_back(std::move(c));
  };
  const auto active = g.active_site_ids();
  for (const auto& site : active) {
    for (int k = 1; k <= menu.max_prepend; ++k) {
      PolicyConfig c = base;
      c.policy_id = "prepend-" + site + "-" + std::to_string(k);
      c.label = std::to_string(k) + "xPrepend " + site;
      c.per_site[site].prepend = k;
      add(std::move(c));
    }
  }
  if (menu.include_negative)
    for (const auto& site : active)
      for (int k = 1; k <= menu.max_prepend; ++k) add(expand_negative_prepend(base, site, k));
  for (const auto& [site, sets] : menu.selective_sets) {
    const auto& s = g.site(site);
    if (!s.active || !s.supports_selective) continue;
    for (const auto& set : sets) {
      PolicyConfig c = base;
      const auto names = detail::neighbor_names(s, set);
      c.policy_id = "announce-" + site + "-" + names;
      c.label = "Announce " + site + " to " + names;
      c.per_site[site].announce_to = set;
      add(std::move(c));
    }
  }
  for (const auto& [site, asns] : menu.poison_candidates) {
    const auto& s = g.site(site);
    if (!s.active || !s.supports_poisoning) continue;
    for (Asn a : asns) {
      PolicyConfig c = base;
      c.policy_id = "poison-" + site + "-" + std::to_string(a);
      c.label = "Poison AS" + std::to_string(a) + " at " + site;
      c.per_site[site].poison = {a};
      add(std::move(c));
    }
  }
  return out;
}

inline PolicyMenu menu_from_json(const AsGraph& g, const json& j) {
  PolicyMenu m;
  m.max_prepend = detail::field_or<int>(j, "max_prepend", 0, "menu");
  m.include_negative = detail::field_or<bool>(j, "include_negative", false, "menu");
  auto resolve = [&](const std::string& site, const json& v) -> Asn {
    if (v.is_number_unsigned() || v.is_number_integer()) return v.get<Asn>();
    if (v.is_string()) {
      for (const auto& n : g.site(site).neighbors)
        if (n.label == v.get<std::string>()) return n.asn;
      throw UnknownIdError("menu: no neighbor labelled '" + v.get<std::string>() + "' at " + site);
    }
    throw ParseError("menu: neighbor must be an asn or a label");
  };
  if (j.contains("selective"))
    for (const auto& [site, sets] : j.at("selective").items())
      for (const auto& set : sets) {
        std::set<Asn> s;
        for (const auto& v : set) s.insert(resolve(site, v));
        m.selective_sets[site].push_back(s);
      }
  if (j.contains("poison"))
    for (const auto& [site, asns] : j.at("poison").items())
      for (const auto& v : asns) m.poison_candidates[site].push_back(v.get<Asn>());
  return m;
}

// ---------------------------------------------------------------------------
// Construction

inline PlaybookEntry make_entry(const PolicyConfig& c, const CatchmentMap& m, std::int64_t measured_at) {
  PlaybookEntry e;
  e.config = c;
  e.fractions = m.fractions;
  e.load_fractions = m.load_fractions;
  e.measured_at = measured_at;
  e.unreachable = m.unreachable;
  for (const auto& [site, f] : e.fractions) e.bins[site] = bin_of(f);
  return e;
}

// Maps each config and indexes the result. The baseline is whichever config
// carries no TE action.
inline Playbook build_playbook(const AsGraph& g, const std::vector<PolicyConfig>& configs,
                               std::int64_t measured_at = util::now_unix(), const RoutingOptions& opt = {}) {
  if (configs.empty()) throw ValidationError("build_playbook: no configs");
  const PolicyConfig base = baseline_policy(g);
  std::string baseline_id;
  std::vector<PlaybookEntry> entries;
  for (const auto& c : configs) {
    if (baseline_id.empty() && c.same_actions(base)) baseline_id = c.policy_id;
    entries.push_back(make_entry(c, map_catchment(g, c, opt), measured_at));
  }
  if (baseline_id.empty()) throw ValidationError("build_playbook: configs do not include the baseline");
  bool uniform = true;
  for (const auto& b : g.clients())
    if (b.weight != g.clients().front().weight) uniform = false;
  return Playbook(std::move(entries), baseline_id, uniform ? FractionView::block : FractionView::load);
}

inline std::set<std::string> all_policy_ids(const Playbook& pb) {
  const auto ids = pb.policy_ids();
  return {ids.begin(), ids.end()};
}

struct FractionInterval {
  double lo = 0.0;
  double hi = 1.0;  // inclusive
};

// Policies whose fraction at every constrained site lies inside its interval.
inline std::set<std::string> lookup_options(const Playbook& pb, const std::map<std::string, FractionInterval>& constraints,
                                            FractionView view = FractionView::block) {
  for (const auto& [site, iv] : constraints)
    if (!pb.has_site(site)) throw UnknownIdError("site " + site);
  std::set<std::string> out;
  for (const auto& e : pb.entries()) {
    bool ok = true;
    for (const auto& [site, iv] : constraints) {
      const double f = e.view(view).at(site);
      if (f < iv.lo || f > iv.hi) ok = false;
    }
    if (ok) out.insert(e.policy_id());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

inline json to_json(const Playbook& pb) {
  json j;
  j["format"] = "anycast-playbook";
  j["version"] = kPlaybookFormatVersion;
  j["baseline_id"] = pb.baseline_id();
  j["default_view"] = to_string(pb.default_view());
  j["sites"] = pb.sites();
  j["entries"] = json::array();
  for (const auto& e : pb.entries()) {
    j["entries"].push_back({{"config", to_json(e.config)},
                            {"fractions", e.fractions},
                            {"load_fractions", e.load_fractions},
                            {"bins", e.bins},
                            {"measured_at", util::format_utc(e.measured_at)},
                            {"unreachable", e.unreachable}});
  }
  json idx = json::object();
  for (const auto& [key, ids] : pb.index()) idx[key.first][key.second] = ids;
  j["index"] = idx;
  return j;
}

inline Playbook playbook_from_json(const json& j) {
  if (detail::field_or<std::string>(j, "format", "", "playbook") != "anycast-playbook")
    throw ParseError("not a playbook document (format != anycast-playbook)");
  const int version = detail::field<int>(j, "version", "playbook");
  if (version != kPlaybookFormatVersion) throw ParseError("unsupported playbook version " + std::to_string(version));
  std::vector<PlaybookEntry> entries;
  for (const auto& je : j.at("entries")) {
    PlaybookEntry e;
    e.config = policy_from_json(je.at("config"));
    const std::string where = "playbook entry " + e.config.policy_id;
    e.fractions = detail::field<std::map<std::string, double>>(je, "fractions", where);
    e.load_fractions = detail::field_or<std::map<std::string, double>>(je, "load_fractions", e.fractions, where);
    e.bins = detail::field_or<std::map<std::string, std::string>>(je, "bins", {}, where);
    if (je.contains("measured_at")) e.measured_at = util::parse_utc(je.at("measured_at").get<std::string>());
    e.unreachable = detail::field_or<std::size_t>(je, "unreachable", 0, where);
    entries.push_back(std::move(e));
  }
  Playbook pb(std::move(entries), detail::field<std::string>(j, "baseline_id", "playbook"),
              fraction_view_from_string(detail::field_or<std::string>(j, "default_view", "block", "playbook")));
  if (j.contains("index")) {
    PlaybookIndex stored;
    for (const auto& [site, bins] : j.at("index").items())
      for (const auto& [bin, ids] : bins.items()) stored[{site, bin}] = ids.get<std::set<std::string>>();
    if (stored != pb.index()) throw ValidationError("playbook index does not invert its entries");
  }
  return pb;
}

inline Playbook load_playbook(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open playbook " + path);
  try {
    return playbook_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline void save_playbook(const Playbook& pb, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << to_json(pb).dump(2) << "\n";
}

}  // namespace anycast
