#pragma once

// Offered-load estimation under upstream loss. Known-good traffic (monitoring
// probes, stable heavy hitters) is dropped upstream at the same rate as
// everything else, so its attenuation gives the access fraction alpha and
// observed / alpha recovers the load actually sent toward a site.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "util.hpp"

namespace anycast {

inline constexpr double kAlphaFloor = 1e-4;
inline constexpr double kMinKnownPerMinute = 40.0;

enum class Confidence { ok, low_signal };

inline std::string to_string(Confidence c) { return c == Confidence::ok ? "ok" : "low-signal"; }

// No known-good traffic is expected at this site under the current
// catchment; the caller has to widen the window or fall back.
class ZeroKnownOfferedError : public std::runtime_error {
 public:
  explicit ZeroKnownOfferedError(const std::string& site)
      : std::runtime_error("no known-good traffic expected at site " + site) {}
};

struct EstimatorSample {
  std::string site_id;
  double window_start = 0.0;
  double window_end = 0.0;
  double t_observed = 0.0;        // everything that arrived
  double t_known_observed = 0.0;  // known-good that arrived
  double t_known_offered = 0.0;   // known-good expected
};

struct AlphaEstimate {
  double alpha = 1.0;
  Confidence confidence = Confidence::ok;
};

struct EstimateResult {
  std::string site_id;
  double window_start = 0.0;
  double window_end = 0.0;
  double alpha = 1.0;
  double t_observed = 0.0;
  double t_offered_hat = 0.0;
  Confidence confidence = Confidence::ok;
};

inline void validate_sample(const EstimatorSample& s) {
  if (s.t_observed < 0 || s.t_known_observed < 0 || s.t_known_offered < 0)
    throw ValidationError("estimator sample for " + s.site_id + " has a negative rate");
  if (s.t_known_observed > s.t_observed * (1 + 1e-12))
    throw ValidationError("estimator sample for " + s.site_id + ": known-good observed exceeds total observed");
}

// alpha = known_observed / known_offered, clamped to (0, 1]. Total loss of
// known-good yields the floor with low-signal confidence.
inline AlphaEstimate estimate_alpha_checked(const EstimatorSample& s,
                                            double min_known_per_minute = kMinKnownPerMinute) {
  validate_sample(s);
  if (!(s.t_known_offered > 0)) throw ZeroKnownOfferedError(s.site_id);
  AlphaEstimate a;
  if (s.t_known_observed <= 0) return {kAlphaFloor, Confidence::low_signal};
  a.alpha = std::clamp(s.t_known_observed / s.t_known_offered, kAlphaFloor, 1.0);
  if (s.t_known_offered * 60.0 < min_known_per_minute) a.confidence = Confidence::low_signal;
  return a;
}

inline double estimate_alpha(const EstimatorSample& s) { return estimate_alpha_checked(s).alpha; }

inline EstimateResult estimate_offered(const EstimatorSample& s, double min_known_per_minute = kMinKnownPerMinute) {
  const auto a = estimate_alpha_checked(s, min_known_per_minute);
  EstimateResult r;
  r.site_id = s.site_id;
  r.window_start = s.window_start;
  r.window_end = s.window_end;
  r.alpha = a.alpha;
  r.t_observed = s.t_observed;
  r.t_offered_hat = s.t_observed / a.alpha;
  r.confidence = a.confidence;
  return r;
}

// ---------------------------------------------------------------------------
// Sliding windows

enum class WindowAggregation {
  per_sample,  // mean of per-sample estimates; exact when rates shift inside a window
  pooled,      // one ratio over window sums
};

struct WindowConfig {
  double length = 60.0;
  double step = 10.0;
  WindowAggregation aggregation = WindowAggregation::per_sample;
  double min_known_per_minute = kMinKnownPerMinute;
};

struct RateObservation {
  double t = 0.0;
  double observed = 0.0;
  double known_observed = 0.0;
  double known_offered = 0.0;
};

// Estimate for one site over the samples of one window. Samples without any
// expected known-good are skipped; if none remain, ZeroKnownOfferedError.
inline EstimateResult estimate_window(const std::string& site, std::span<const RateObservation> samples,
                                      const WindowConfig& cfg = {}) {
  EstimateResult out;
  out.site_id = site;
  if (!samples.empty()) {
    out.window_start = samples.front().t;
    out.window_end = samples.back().t;
  }
  double obs = 0, hat = 0, known_obs = 0, known_off = 0;
  std::size_t n = 0;
  bool low = false;
  for (const auto& o : samples) {
    if (!(o.known_offered > 0)) continue;
    ++n;
    obs += o.observed;
    known_obs += o.known_observed;
    known_off += o.known_offered;
    if (cfg.aggregation == WindowAggregation::per_sample) {
      const auto r = estimate_offered({site, o.t, o.t, o.observed, o.known_observed, o.known_offered},
                                      cfg.min_known_per_minute);
      hat += r.t_offered_hat;
      low = low || r.confidence == Confidence::low_signal;
    }
  }
  if (n == 0) throw ZeroKnownOfferedError(site);
  const double dn = static_cast<double>(n);
  if (cfg.aggregation == WindowAggregation::pooled) {
    const auto r = estimate_offered({site, out.window_start, out.window_end, obs / dn, known_obs / dn, known_off / dn},
                                    cfg.min_known_per_minute);
    return {site, out.window_start, out.window_end, r.alpha, r.t_observed, r.t_offered_hat, r.confidence};
  }
  out.t_observed = obs / dn;
  out.t_offered_hat = hat / dn;
  out.alpha = out.t_offered_hat > 0 ? std::clamp(out.t_observed / out.t_offered_hat, kAlphaFloor, 1.0) : 1.0;
  if (known_off / dn * 60.0 < cfg.min_known_per_minute) low = true;
  out.confidence = low ? Confidence::low_signal : Confidence::ok;
  return out;
}

// ---------------------------------------------------------------------------
// Known-good sources and expected rates

enum class KnownGoodKind { monitor, heavy_hitter };

struct KnownGoodSpec {
  KnownGoodKind kind = KnownGoodKind::monitor;
  std::set<std::string> members;
  std::function<double(const std::string& site, double t)> expected_rate;
};

enum class Period { hour_of_day, day_of_week };

struct RateSample {
  double t = 0.0;  // seconds; phase 0 starts at t = 0
  double rate = 0.0;
};

// Same-phase trimmed mean of a rate history.
class SeasonalBaseline {
 public:
  SeasonalBaseline(Period period, std::vector<double> per_phase) : period_(period), per_phase_(std::move(per_phase)) {}

  static int phases_of(Period p) { return p == Period::hour_of_day ? 24 : 7; }
  static double phase_length(Period p) { return p == Period::hour_of_day ? 3600.0 : 86400.0; }
  static int phase_at(Period p, double t) {
    const auto k = static_cast<long long>(std::floor(t / phase_length(p)));
    const int n = phases_of(p);
    return static_cast<int>(((k % n) + n) % n);
  }

  double operator()(double t) const { return per_phase_[static_cast<std::size_t>(phase_at(period_, t))]; }
  double at_phase(int phase) const { return per_phase_.at(static_cast<std::size_t>(phase)); }
  Period period() const { return period_; }

 private:
  Period period_;
  std::vector<double> per_phase_;
};

inline double trimmed_mean(std::vector<double> v, double trim) {
  if (v.empty()) throw ValidationError("trimmed mean of an empty set");
  std::sort(v.begin(), v.end());
  const auto drop = static_cast<std::size_t>(std::floor(trim * static_cast<double>(v.size())));
  double sum = 0;
  for (std::size_t i = drop; i < v.size() - drop; ++i) sum += v[i];
  return sum / static_cast<double>(v.size() - 2 * drop);
}

// Needs at least two samples in every phase (two full periods of history).
inline SeasonalBaseline seasonal_baseline(const std::vector<RateSample>& history, Period period, double trim = 0.1) {
  const int n = SeasonalBaseline::phases_of(period);
  std::vector<std::vector<double>> buckets(static_cast<std::size_t>(n));
  for (const auto& s : history) {
    if (!(s.rate >= 0)) throw ValidationError("negative rate in history");
    buckets[static_cast<std::size_t>(SeasonalBaseline::phase_at(period, s.t))].push_back(s.rate);
  }
  std::vector<double> per_phase;
  for (int p = 0; p < n; ++p) {
    const auto& b = buckets[static_cast<std::size_t>(p)];
    if (b.size() < 2)
      throw ValidationError("insufficient history: phase " + std::to_string(p) + " has " + std::to_string(b.size()) +
                            " samples, need two full periods");
    per_phase.push_back(trimmed_mean(b, trim));
  }
  return SeasonalBaseline(period, std::move(per_phase));
}

// ---------------------------------------------------------------------------
// Ingest: CSV `t,site_id,src_id,rate,is_known_good`

struct IngestRow {
  double t = 0.0;
  std::string site_id;
  std::string src_id;
  double rate = 0.0;
  bool known_good = false;
};

inline bool parse_bool_field(const std::string& s, const std::string& where) {
  if (s == "1" || s == "true" || s == "yes") return true;
  if (s == "0" || s == "false" || s == "no") return false;
  throw ParseError(where + ": is_known_good must be 0/1/true/false");
}

inline std::vector<IngestRow> parse_ingest_csv(std::istream& in) {
  std::vector<IngestRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (util::trim(line).empty() || line[0] == '#') continue;
    const auto c = util::split(line, ',');
    if (lineno == 1 && !c.empty() && c[0] == "t") continue;
    const std::string where = "ingest line " + std::to_string(lineno);
    if (c.size() != 5) throw ParseError(where + ": expected t,site_id,src_id,rate,is_known_good");
    IngestRow r{util::parse_double(c[0], where + " t"), c[1], c[2], util::parse_double(c[3], where + " rate"),
                parse_bool_field(c[4], where)};
    if (r.rate < 0) throw ParseError(where + ": negative rate");
    if (!rows.empty() && r.t < rows.back().t) throw ParseError(where + ": time goes backwards");
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::vector<IngestRow> load_ingest_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open trace " + path);
  return parse_ingest_csv(in);
}

// Per-site samples: one per distinct timestamp at which the site reports.
inline std::map<std::string, std::vector<RateObservation>> ingest_observations(
    const std::vector<IngestRow>& rows, const std::function<double(const std::string&, double)>& expected) {
  std::map<std::string, std::map<double, RateObservation>> acc;
  for (const auto& r : rows) {
    auto& o = acc[r.site_id][r.t];
    o.t = r.t;
    o.observed += r.rate;
    if (r.known_good) o.known_observed += r.rate;
  }
  std::map<std::string, std::vector<RateObservation>> out;
  for (auto& [site, by_t] : acc)
    for (auto& [t, o] : by_t) {
      o.known_offered = expected(site, t);
      out[site].push_back(o);
    }
  return out;
}

// Expected known-good per site: mean known-good rate over samples before `until`.
inline std::map<std::string, double> known_good_baseline(const std::vector<IngestRow>& rows, double until) {
  std::map<std::string, std::map<double, double>> acc;
  for (const auto& r : rows) {
    if (r.t >= until) continue;
    auto& v = acc[r.site_id][r.t];
    if (r.known_good) v += r.rate;
  }
  std::map<std::string, double> out;
  for (const auto& [site, by_t] : acc) {
    double s = 0;
    for (const auto& [t, v] : by_t) s += v;
    out[site] = by_t.empty() ? 0.0 : s / static_cast<double>(by_t.size());
  }
  return out;
}

// Sliding-window estimates for every site; windows with no expected
// known-good are reported with alpha = 1 and low-signal confidence.
inline std::vector<EstimateResult> estimate_series(const std::map<std::string, std::vector<RateObservation>>& obs,
                                                   const WindowConfig& cfg = {}) {
  if (!(cfg.length > 0) || !(cfg.step > 0)) throw RangeError("window length and step must be positive");
  std::vector<EstimateResult> out;
  for (const auto& [site, series] : obs) {
    if (series.empty()) continue;
    const double t0 = series.front().t;
    const double t_end = series.back().t;
    for (double w = t0; w <= t_end; w += cfg.step) {
      std::vector<RateObservation> in;
      for (const auto& o : series)
        if (o.t >= w && o.t < w + cfg.length) in.push_back(o);
      if (in.empty()) continue;
      try {
        auto r = estimate_window(site, in, cfg);
        r.window_start = w;
        r.window_end = w + cfg.length;
        out.push_back(r);
      } catch (const ZeroKnownOfferedError&) {
        double obs_sum = 0;
        for (const auto& o : in) obs_sum += o.observed;
        const double mean = obs_sum / static_cast<double>(in.size());
        out.push_back({site, w, w + cfg.length, 1.0, mean, mean, Confidence::low_signal});
      }
    }
  }
  return out;
}

}  // namespace anycast
