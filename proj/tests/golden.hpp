#pragma once

// Published reference values, shared by the unit and acceptance suites.

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace golden {

// Peering playbook index: (site, bin) -> policy letters. Empty bins omitted.
inline const std::map<std::pair<std::string, std::string>, std::set<std::string>>& reference_index() {
  static const std::map<std::pair<std::string, std::string>, std::set<std::string>> t{
      {{"AMS", "0-10"}, {"a"}},
      {{"AMS", "10-20"}, {"b", "c", "d"}},
      {{"AMS", "20-30"}, {"e", "g", "j"}},
      {{"AMS", "30-40"}, {"f", "h", "k", "o"}},
      {{"AMS", "40-50"}, {"i", "l", "m"}},
      {{"AMS", "50-60"}, {"n", "p"}},
      {{"AMS", "60-70"}, {"q", "r"}},
      {{"AMS", "70-80"}, {"s", "t"}},
      {{"AMS", "80-90"}, {"u"}},
      {{"BOS", "0-10"}, {"k", "l", "r", "s", "u"}},
      {{"BOS", "10-20"}, {"j", "n", "q", "t"}},
      {{"BOS", "20-30"}, {"f", "m", "o", "p"}},
      {{"BOS", "30-40"}, {"a", "b", "c", "d", "e"}},
      {{"BOS", "40-50"}, {"i"}},
      {{"BOS", "60-70"}, {"g", "h"}},
      {{"CNF", "0-10"}, {"g", "h", "t", "u"}},
      {{"CNF", "10-20"}, {"i", "q"}},
      {{"CNF", "20-30"}, {"n", "r", "p", "s"}},
      {{"CNF", "30-40"}, {"f", "m", "o"}},
      {{"CNF", "40-50"}, {"c", "d", "e", "l"}},
      {{"CNF", "50-60"}, {"a", "b", "k"}},
      {{"CNF", "60-70"}, {"j"}},
  };
  return t;
}

inline const std::map<std::string, std::size_t>& traffic_options() {
  static const std::map<std::string, std::size_t> t{{"AMS", 9}, {"BOS", 6}, {"CNF", 7}};
  return t;
}

// Access-fraction rows: known-good offered and observed, attack observed,
// expected alpha and offered attack with their tolerances.
struct AlphaRow {
  const char* name;
  double known_offered, known_observed, alpha, alpha_tol;
  double attack_observed, attack_offered, offered_rel_tol;
};

inline const std::vector<AlphaRow>& alpha_rows() {
  static const std::vector<AlphaRow> t{
      {"2015-11-30", 33.08, 1.85, 0.0559, 0.0005, 0.37e6, 6.6e6, 0.05},
      {"2016-06-25", 36.58, 0.33, 0.0091, 0.0005, 0.10e6, 11e6, 0.05},
      {"testbed", 425.2, 207.0, 0.49, 0.01, 16.3e3, 33.2e3, 0.02},
  };
  return t;
}

}  // namespace golden
