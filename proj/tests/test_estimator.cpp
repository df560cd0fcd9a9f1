#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "golden.hpp"
#include "support.hpp"

using namespace anycast;

namespace {

EstimatorSample sample(double observed, double known_obs, double known_off) {
  return {"AMS", 0, 60, observed, known_obs, known_off};
}

}  // namespace

TEST(Alpha, GoldenRows) {
  for (const auto& row : golden::alpha_rows()) {
    const auto s = sample(row.attack_observed, row.known_observed, row.known_offered);
    EXPECT_NEAR(estimate_alpha(s), row.alpha, row.alpha_tol) << row.name;
    const auto r = estimate_offered(s);
    EXPECT_NEAR(r.t_offered_hat / row.attack_offered, 1.0, row.offered_rel_tol) << row.name;
    EXPECT_EQ(r.confidence, Confidence::ok) << row.name;
  }
}

TEST(Alpha, IdentityWhenNothingDropped) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 200; ++i) {
    const double known = 1 + 100 * util::uniform_unit(rng);
    const double total = known + 1e5 * util::uniform_unit(rng);
    const auto r = estimate_offered(sample(total, known, known));
    EXPECT_EQ(r.alpha, 1.0);
    EXPECT_EQ(r.t_offered_hat, total);
  }
}

TEST(Alpha, ScaleEquivariance) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 200; ++i) {
    const double off = 10 + 100 * util::uniform_unit(rng);
    const double kobs = off * (0.01 + 0.99 * util::uniform_unit(rng));
    const double total = kobs + 1e4 * util::uniform_unit(rng);
    const double c = 0.1 + 50 * util::uniform_unit(rng);
    const auto a = estimate_offered(sample(total, kobs, off));
    const auto b = estimate_offered(sample(c * total, c * kobs, c * off));
    EXPECT_NEAR(b.alpha, a.alpha, 1e-12 * a.alpha);
    EXPECT_NEAR(b.t_offered_hat, c * a.t_offered_hat, 1e-9 * c * a.t_offered_hat);
  }
}

TEST(Alpha, ClampedToOne) {
  const auto r = estimate_offered(sample(100, 50, 40));
  EXPECT_EQ(r.alpha, 1.0);
  EXPECT_EQ(r.t_offered_hat, 100.0);
}

TEST(Alpha, ZeroKnownHandling) {
  EXPECT_THROW(estimate_alpha(sample(100, 0, 0)), ZeroKnownOfferedError);
  const auto a = estimate_alpha_checked(sample(100, 0, 30));
  EXPECT_EQ(a.alpha, kAlphaFloor);
  EXPECT_EQ(a.confidence, Confidence::low_signal);
  EXPECT_NEAR(estimate_offered(sample(100, 0, 30)).t_offered_hat, 100 / kAlphaFloor, 1e-6);
}

TEST(Alpha, LowSignalBelowFortyPerMinute) {
  // 0.6 q/s is 36 per minute
  EXPECT_EQ(estimate_offered(sample(10, 0.3, 0.6)).confidence, Confidence::low_signal);
  EXPECT_EQ(estimate_offered(sample(10, 0.3, 0.7)).confidence, Confidence::ok);
}

TEST(Alpha, InvalidSamplesRejected) {
  EXPECT_THROW(estimate_alpha(sample(-1, 0, 1)), ValidationError);
  EXPECT_THROW(estimate_alpha(sample(1, 5, 10)), ValidationError);
}

TEST(Window, PerSampleMeanIsExactWhenAlphaShifts) {
  // offered jumps 1000 -> 4000 as alpha drops 1 -> 0.25; observed stays 1000
  std::vector<RateObservation> obs;
  for (int i = 0; i < 6; ++i) {
    const double a = i < 3 ? 1.0 : 0.25;
    const double offered = i < 3 ? 1000 : 4000;
    obs.push_back({static_cast<double>(i * 10), offered * a, 50 * a, 50});
  }
  const auto r = estimate_window("AMS", obs);
  EXPECT_NEAR(r.t_offered_hat, 2500, 1e-9);
  EXPECT_EQ(r.confidence, Confidence::ok);
  // one pooled ratio misattributes the loss
  WindowConfig pooled;
  pooled.aggregation = WindowAggregation::pooled;
  EXPECT_NEAR(estimate_window("AMS", obs, pooled).t_offered_hat, 1600, 1e-9);
}

TEST(Window, NoExpectedKnownGoodThrows) {
  std::vector<RateObservation> obs{{0, 10, 0, 0}, {10, 10, 0, 0}};
  EXPECT_THROW(estimate_window("AMS", obs), ZeroKnownOfferedError);
}

TEST(Window, SeriesSlidesBySteps) {
  std::map<std::string, std::vector<RateObservation>> obs;
  for (int t = 0; t <= 120; t += 10) obs["AMS"].push_back({static_cast<double>(t), 500, 25, 50});
  const auto series = estimate_series(obs);
  ASSERT_EQ(series.size(), 13u);
  for (std::size_t i = 0; i < series.size(); ++i) {
    EXPECT_EQ(series[i].window_start, 10.0 * static_cast<double>(i));
    EXPECT_EQ(series[i].window_end - series[i].window_start, 60.0);
    EXPECT_NEAR(series[i].t_offered_hat, 1000, 1e-9);
  }
  WindowConfig bad;
  bad.step = 0;
  EXPECT_THROW(estimate_series(obs, bad), RangeError);
}

TEST(Seasonal, ConstantHistory) {
  std::vector<RateSample> h;
  for (int i = 0; i < 24 * 14; ++i) h.push_back({i * 3600.0, 42.0});
  const auto b = seasonal_baseline(h, Period::hour_of_day);
  for (int p = 0; p < 24; ++p) EXPECT_DOUBLE_EQ(b.at_phase(p), 42.0);
  EXPECT_DOUBLE_EQ(b(123456.0), 42.0);
}

TEST(Seasonal, SinusoidWithinFivePercent) {
  auto truth = [](double t) { return 100 + 60 * std::sin(2 * std::numbers::pi * t / 86400.0); };
  std::vector<RateSample> h;
  for (double t = 0; t < 14 * 86400.0; t += 600) h.push_back({t, truth(t)});
  const auto b = seasonal_baseline(h, Period::hour_of_day);
  for (int p = 0; p < 24; ++p) {
    // hourly samples at offsets 0..3000 s centre on 1500 s into the hour
    const double t = p * 3600.0 + 1500.0;
    EXPECT_NEAR(b.at_phase(p) / truth(t), 1.0, 0.05) << "phase " << p;
  }
}

TEST(Seasonal, SpikeDayTrimmedAway) {
  std::vector<RateSample> h;
  for (int d = 0; d < 14; ++d)
    for (int hr = 0; hr < 24; ++hr) h.push_back({d * 86400.0 + hr * 3600.0, d == 5 ? 1000.0 : 100.0});
  const auto b = seasonal_baseline(h, Period::hour_of_day, 0.1);
  for (int p = 0; p < 24; ++p) EXPECT_DOUBLE_EQ(b.at_phase(p), 100.0);
  const auto untrimmed = seasonal_baseline(h, Period::hour_of_day, 0.0);
  EXPECT_GT(untrimmed.at_phase(0), 100.0);
}

TEST(Seasonal, DayOfWeek) {
  std::vector<RateSample> h;
  for (int d = 0; d < 21; ++d) h.push_back({d * 86400.0 + 7200, d % 7 == 6 ? 20.0 : 80.0});
  const auto b = seasonal_baseline(h, Period::day_of_week);
  EXPECT_DOUBLE_EQ(b.at_phase(6), 20.0);
  EXPECT_DOUBLE_EQ(b.at_phase(2), 80.0);
  EXPECT_DOUBLE_EQ(b(13 * 86400.0 + 5), 20.0);
}

TEST(Seasonal, InsufficientHistory) {
  std::vector<RateSample> h;
  for (int i = 0; i < 24; ++i) h.push_back({i * 3600.0, 1.0});
  EXPECT_THROW(seasonal_baseline(h, Period::hour_of_day), ValidationError);
  h.push_back({0, -1});
  EXPECT_THROW(seasonal_baseline(h, Period::hour_of_day), ValidationError);
}

TEST(Ingest, CsvToSeries) {
  std::ostringstream csv;
  csv << "t,site_id,src_id,rate,is_known_good\n";
  for (int t = 0; t < 300; t += 10) {
    const bool attack = t >= 120;
    const double alpha = attack ? 0.2 : 1.0;
    csv << t << ",AMS,probe," << 50 * alpha << ",1\n";
    csv << t << ",AMS,rest," << (attack ? 10000 : 950) * alpha << ",0\n";
  }
  std::istringstream in(csv.str());
  const auto rows = parse_ingest_csv(in);
  ASSERT_EQ(rows.size(), 60u);
  const auto expected = known_good_baseline(rows, 120);
  EXPECT_DOUBLE_EQ(expected.at("AMS"), 50.0);
  const auto obs = ingest_observations(rows, [&](const std::string& s, double) { return expected.at(s); });
  ASSERT_EQ(obs.at("AMS").size(), 30u);
  EXPECT_DOUBLE_EQ(obs.at("AMS")[0].observed, 1000.0);
  const auto series = estimate_series(obs);
  const auto& last = series.back();
  EXPECT_GE(last.window_start, 120.0);
  EXPECT_NEAR(last.t_offered_hat, 10050.0, 1e-6);
  EXPECT_NEAR(last.alpha, 0.2, 1e-12);
}

TEST(Ingest, MalformedRows) {
  std::istringstream cols("t,site_id,src_id,rate,is_known_good\n0,AMS,x,1\n");
  EXPECT_THROW(parse_ingest_csv(cols), ParseError);
  std::istringstream neg("0,AMS,x,-1,0\n");
  EXPECT_THROW(parse_ingest_csv(neg), ParseError);
  std::istringstream back("10,AMS,x,1,0\n5,AMS,x,1,0\n");
  EXPECT_THROW(parse_ingest_csv(back), ParseError);
  std::istringstream flag("0,AMS,x,1,maybe\n");
  EXPECT_THROW(parse_ingest_csv(flag), ParseError);
  EXPECT_THROW(load_ingest_csv("/nonexistent.csv"), ParseError);
}
