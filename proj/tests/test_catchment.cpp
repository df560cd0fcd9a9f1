#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"

using namespace anycast;
using testing_support::fixture;

namespace {

PolicyConfig with_site(const AsGraph& g, const std::string& id, const std::string& site, SitePolicy p) {
  auto c = baseline_policy(g, id);
  c.per_site[site] = std::move(p);
  return c;
}

CatchmentMap synthetic(std::size_t n, const std::vector<std::string>& sites, std::mt19937_64& rng) {
  CatchmentMap m;
  for (std::size_t i = 0; i < n; ++i)
    m.assignment["blk" + std::to_string(i)] = sites[util::uniform_index(rng, sites.size())];
  return m;
}

// Oracle: which site does each block's attach AS reach, per the brute-force solver.
std::map<std::string, std::string> oracle_assignment(const AsGraph& g, const PolicyConfig& c) {
  const auto ref = oracle::solve(g, testing_support::to_actions(c));
  std::map<std::string, std::string> out;
  for (const auto& b : g.clients()) {
    const auto& p = ref.best.at(b.attach_asn);
    out[b.block_id] = p ? p->origin : kUnreachable;
  }
  return out;
}

}  // namespace

TEST(Catchment, SingleSiteTakesEverything) {
  GeneratorSpec spec;
  spec.n_sites = 1;
  spec.seed = 3;
  const auto g = generate_topology(spec);
  const auto m = map_catchment(g, baseline_policy(g));
  ASSERT_EQ(m.fractions.size(), 1u);
  EXPECT_DOUBLE_EQ(m.fractions.begin()->second, 1.0);
  EXPECT_EQ(m.assignment.size(), g.clients().size());
}

TEST(Catchment, Peering3BaselineIsAmsHeavy) {
  const auto g = load_topology(fixture("peering3.json"));
  const auto m = map_catchment(g, baseline_policy(g));
  EXPECT_GT(m.fractions.at("AMS"), m.fractions.at("BOS"));
  EXPECT_GT(m.fractions.at("AMS"), m.fractions.at("CNF"));
}

TEST(Catchment, WithdrawnSiteGetsNothing) {
  const auto g = load_topology(fixture("diamond6.json"));
  SitePolicy w;
  w.withdrawn = true;
  const auto m = map_catchment(g, with_site(g, "w", "AMS", w));
  EXPECT_EQ(m.fractions.at("AMS"), 0.0);
  EXPECT_NEAR(m.fractions.at("BOS"), 1.0, 1e-12);
  EXPECT_EQ(m.unreachable, 0u);
}

TEST(Catchment, UnreachableIsReportedNotRenormalized) {
  const auto g = load_topology(fixture("tier1poison.json"));
  SitePolicy w, p;
  w.withdrawn = true;
  p.poison = {2};
  auto c = baseline_policy(g, "x");
  c.per_site["BOS"] = w;
  c.per_site["AMS"] = p;
  const auto m = map_catchment(g, c);
  EXPECT_EQ(m.unreachable, 10u);
  std::size_t marked = 0;
  for (const auto& [b, s] : m.assignment) marked += s == kUnreachable;
  EXPECT_EQ(marked, 10u);
  EXPECT_NEAR(m.fractions.at("AMS"), 1.0, 1e-12);
}

TEST(Catchment, FractionsSumToOneOnRandomWorlds) {
  for (std::uint64_t seed = 0; seed < 80; ++seed) {
    const auto g = testing_support::random_world(seed, {30, 4, true, true});
    std::mt19937_64 rng(seed);
    const auto m = map_catchment(g, testing_support::random_policy(g, rng));
    EXPECT_EQ(m.assignment.size(), g.clients().size());
    if (m.reachable() == 0) continue;
    double f = 0, l = 0;
    for (const auto& [s, v] : m.fractions) f += v;
    for (const auto& [s, v] : m.load_fractions) l += v;
    EXPECT_NEAR(f, 1.0, 1e-9) << "seed " << seed;
    EXPECT_NEAR(l, 1.0, 1e-9) << "seed " << seed;
  }
}

TEST(Catchment, LoadFractionsFollowWeights) {
  const auto g = topology_from_json(json::parse(R"({
    "nodes": [{"asn": 1, "tier1": true}, {"asn": 2}, {"asn": 3}],
    "links": [{"from": 2, "to": 1, "relationship": "customer-of"},
              {"from": 3, "to": 1, "relationship": "customer-of"}],
    "sites": [{"site_id": "A", "host_asn": 64500, "capacity": 1, "neighbors": [{"asn": 2}]},
              {"site_id": "B", "host_asn": 64500, "capacity": 1, "neighbors": [{"asn": 3}]}],
    "clients": [{"block_id": "x", "attach_asn": 2, "weight": 3},
                {"block_id": "y", "attach_asn": 3, "weight": 1}]
  })"));
  const auto m = map_catchment(g, baseline_policy(g));
  EXPECT_DOUBLE_EQ(m.fractions.at("A"), 0.5);
  EXPECT_DOUBLE_EQ(m.load_fractions.at("A"), 0.75);
  EXPECT_DOUBLE_EQ(m.load_fractions.at("B"), 0.25);
}

TEST(Catchment, Deterministic) {
  const auto g = load_topology(fixture("peering3.json"));
  std::mt19937_64 rng(5);
  const auto c = testing_support::random_policy(g, rng);
  EXPECT_EQ(map_catchment(g, c), map_catchment(g, c));
}

TEST(CatchmentDiff, Identity) {
  const auto g = load_topology(fixture("peering3.json"));
  const auto m = map_catchment(g, baseline_policy(g));
  const auto d = diff_catchments(m, m);
  EXPECT_TRUE(d.changed.empty());
  EXPECT_EQ(d.changed_fraction, 0.0);
}

TEST(CatchmentDiff, TwoOfTwoHundred) {
  std::mt19937_64 rng(1);
  auto a = synthetic(200, {"AMS", "BOS", "CNF"}, rng);
  auto b = a;
  b.assignment["blk7"] = b.assignment["blk7"] == "AMS" ? "BOS" : "AMS";
  b.assignment["blk150"] = kUnreachable;
  const auto d = diff_catchments(a, b);
  EXPECT_EQ(d.changed, (std::set<std::string>{"blk150", "blk7"}));
  EXPECT_DOUBLE_EQ(d.changed_fraction, 0.01);
}

TEST(CatchmentDiff, PlantedChangesReportedExactly) {
  std::mt19937_64 rng(11);
  const std::vector<std::string> sites{"AMS", "BOS", "CNF", kUnreachable};
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + util::uniform_index(rng, 600);
    const std::size_t k = util::uniform_index(rng, n + 1);
    const auto a = synthetic(n, sites, rng);
    auto b = a;
    std::vector<std::string> blocks;
    for (const auto& [blk, s] : a.assignment) blocks.push_back(blk);
    util::shuffle(blocks, rng);
    std::set<std::string> planted(blocks.begin(), blocks.begin() + static_cast<std::ptrdiff_t>(k));
    for (const auto& blk : planted) {
      const auto& old = a.assignment.at(blk);
      std::string next;
      do next = sites[util::uniform_index(rng, sites.size())];
      while (next == old);
      b.assignment[blk] = next;
    }
    const auto d = diff_catchments(a, b);
    EXPECT_EQ(d.changed, planted);
    EXPECT_EQ(d.changed_fraction, static_cast<double>(k) / static_cast<double>(n)) << k << "/" << n;
  }
}

TEST(CatchmentDiff, SymmetricAndTriangle) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = synthetic(50, {"X", "Y", "Z"}, rng);
    auto b = a, c = a;
    for (auto& [blk, s] : b.assignment)
      if (testing_support::coin(rng, 0.2)) s = "Y";
    for (auto& [blk, s] : c.assignment)
      if (testing_support::coin(rng, 0.2)) s = "Z";
    const auto ab = diff_catchments(a, b), ba = diff_catchments(b, a);
    EXPECT_EQ(ab.changed, ba.changed);
    const auto bc = diff_catchments(b, c), ac = diff_catchments(a, c);
    EXPECT_LE(ac.changed.size(), ab.changed.size() + bc.changed.size());
    for (const auto& blk : ac.changed) EXPECT_TRUE(ab.changed.count(blk) || bc.changed.count(blk));
  }
}

TEST(CatchmentDiff, UniverseMismatchRejected) {
  CatchmentMap a, b;
  a.assignment = {{"x", "A"}, {"y", "A"}};
  b.assignment = {{"x", "A"}};
  EXPECT_THROW(diff_catchments(a, b), ValidationError);
  b.assignment = {{"x", "A"}, {"z", "A"}};
  EXPECT_THROW(diff_catchments(a, b), ValidationError);
}

TEST(CatchmentDiff, DiamondPrependMatchesOracleRecount) {
  const auto g = load_topology(fixture("diamond6.json"));
  const auto base = baseline_policy(g);
  SitePolicy p1;
  p1.prepend = 1;
  const auto pre = with_site(g, "1xPrepend AMS", "AMS", p1);
  const auto oa = oracle_assignment(g, base), ob = oracle_assignment(g, pre);
  std::size_t recount = 0;
  for (const auto& [blk, s] : oa) recount += ob.at(blk) != s;
  const auto d = diff_catchments(map_catchment(g, base), map_catchment(g, pre));
  EXPECT_EQ(d.changed.size(), recount);
  EXPECT_DOUBLE_EQ(d.changed_fraction, static_cast<double>(recount) / static_cast<double>(g.clients().size()));
  EXPECT_DOUBLE_EQ(d.changed_fraction, 0.5);
  for (const auto& blk : d.changed) EXPECT_EQ(blk.rfind("d4", 0), 0u) << blk;
}

TEST(CatchmentCsv, RoundTrip) {
  const auto g = load_topology(fixture("tier1poison.json"));
  auto c = baseline_policy(g, "x");
  SitePolicy w, p;
  w.withdrawn = true;
  p.poison = {2};
  c.per_site["BOS"] = w;
  c.per_site["AMS"] = p;
  const auto m = map_catchment(g, c);
  std::istringstream in(catchment_csv(m));
  const auto back = parse_catchment_csv(in, "x");
  EXPECT_EQ(back.assignment, m.assignment);
  EXPECT_EQ(back.unreachable, m.unreachable);
  EXPECT_EQ(back.fractions.at("AMS"), m.fractions.at("AMS"));
}

TEST(CatchmentCsv, MalformedRowsRejected) {
  std::istringstream bad("block_id,site_id\nx\n");
  EXPECT_THROW(parse_catchment_csv(bad), ParseError);
  EXPECT_THROW(load_catchment_csv("/nonexistent.csv"), ParseError);
}
