#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "interseg/error.hpp"
#include "interseg/geo.hpp"
#include "interseg/home_es.hpp"
#include "interseg/layers.hpp"
#include "interseg/random.hpp"

using namespace interseg;

namespace {

constexpr std::int64_t kDay0 = 1704067200;  // midnight UTC

// Hourly night positions at `at` for `nights` nights (18:00 to 09:00).
std::vector<Fix> night_fixes(LatLon at, int nights, int first_night = 0) {
  std::vector<Fix> v;
  for (int n = first_night; n < first_night + nights; ++n)
    for (int h = 18; h <= 33; ++h) v.push_back({kDay0 + n * 86400 + h * 3600, at.lat, at.lon, 5.0f});
  return v;
}

Feature square(const std::string& id, const std::string& cat, double lon0, double lat0, double lon1, double lat1) {
  Feature f;
  f.id = id;
  f.category = cat;
  f.coords = {{lon0, lat0}, {lon1, lat0}, {lon1, lat1}, {lon0, lat1}, {lon0, lat0}};
  return f;
}

}  // namespace

TEST(Hourly, MidpointInterpolation) {
  const std::vector<Fix> f{{kDay0 + 17 * 3600 + 1800, 0.0, 0.0, 5.0f}, {kDay0 + 18 * 3600 + 1800, 0.0, 0.001, 5.0f}};
  const auto h = interpolate_hourly(f, 0.0);
  ASSERT_EQ(h.size(), 1u);
  EXPECT_EQ(hour_of_day(h[0].local_hour), 18);
  EXPECT_NEAR(h[0].lat, 0.0, 1e-12);
  EXPECT_NEAR(h[0].lon, 0.0005, 1e-12);
}

TEST(Hourly, SinglePingGivesNothing) {
  const std::vector<Fix> f{{kDay0, 1.0, 1.0, 5.0f}};
  EXPECT_TRUE(interpolate_hourly(f, 0.0).empty());
}

TEST(Hourly, LongGapOmitted) {
  const std::vector<Fix> f{{kDay0 + 1800, 0.0, 0.0, 5.0f}, {kDay0 + 1800 + 8 * 3600, 0.0, 0.0, 5.0f}};
  EXPECT_TRUE(interpolate_hourly(f, 0.0, 6.0).empty());
}

TEST(Home, ConstantPointFiveNights) {
  const LatLon at{40.0, -75.0};
  const auto est = infer_home_from_pings(night_fixes(at, 5));
  ASSERT_TRUE(est);
  EXPECT_NEAR(est->home.lat, at.lat, 1e-9);
  EXPECT_NEAR(est->home.lon, at.lon, 1e-9);
  EXPECT_GE(est->nights, 5);
}

TEST(Home, SplitBetweenTwoPointsFails) {
  const LatLon a{40.0, -75.0};
  const LatLon b{40.009, -75.0};  // about 1 km north
  auto v = night_fixes(a, 3, 0);
  const auto w = night_fixes(b, 3, 3);
  v.insert(v.end(), w.begin(), w.end());
  EXPECT_FALSE(infer_home_from_pings(v));
}

TEST(Home, SeventyPercentAtAWithScatter) {
  const LatLon a{40.0, -75.0};
  auto v = night_fixes(a, 7, 0);
  // three more nights, each spent at a different far-away place
  for (int n = 0; n < 3; ++n) {
    const auto w = night_fixes({40.02 + 0.01 * n, -75.03 - 0.01 * n}, 1, 7 + n);
    v.insert(v.end(), w.begin(), w.end());
  }
  std::sort(v.begin(), v.end(), fix_less);
  const auto est = infer_home_from_pings(v);
  ASSERT_TRUE(est);
  EXPECT_NEAR(est->frac_in_radius, 0.7, 0.02);
  // the in-radius subset is exactly the A hours, whose median is A
  EXPECT_LT(haversine_m(est->home, a), 1.0);
}

TEST(Link, DirectAssignmentAndDistanceCut) {
  const LatLon home{40.0, -75.0};
  const LocalProjection proj(home);
  const auto p40 = proj.inverse(40.0, 0.0);
  const auto p150 = proj.inverse(0.0, 150.0);
  PropertyIndex idx({{p40.lat, p40.lon, 1500.0, "residential"}});
  const auto link = link_es(home, idx);
  ASSERT_TRUE(link);
  EXPECT_DOUBLE_EQ(link->es_raw, 1500.0);
  EXPECT_NEAR(link->distance_m, 40.0, 0.01);

  PropertyIndex far({{p150.lat, p150.lon, 1500.0, "residential"}});
  EXPECT_FALSE(link_es(home, far));
}

TEST(Link, Winsorized) {
  PropertyIndex idx({{40.0, -75.0, 25000.0, "residential"}});
  const auto link = link_es({40.0, -75.0}, idx);
  ASSERT_TRUE(link);
  EXPECT_DOUBLE_EQ(link->es_raw, 20000.0);
}

TEST(Link, NearestOfManyMatchesBruteForce) {
  Rng rng(3);
  std::vector<Property> props;
  for (int k = 0; k < 500; ++k) props.push_back({40 + uniform(rng, 0, 0.01), -75 + uniform(rng, 0, 0.01), 1000.0 + k});
  const PropertyIndex idx(props);
  for (int q = 0; q < 100; ++q) {
    const LatLon p{40 + uniform(rng, 0, 0.01), -75 + uniform(rng, 0, 0.01)};
    double best = 1e18;
    std::size_t arg = 0;
    for (std::size_t k = 0; k < props.size(); ++k) {
      const double d = haversine_m(p.lat, p.lon, props[k].lat, props[k].lon);
      if (d < best) {
        best = d;
        arg = k;
      }
    }
    const auto hit = idx.nearest(p.lat, p.lon);
    ASSERT_TRUE(hit);
    EXPECT_EQ(hit->index, arg);
  }
}

TEST(EsVariants, ZscorePercentileDemean) {
  std::vector<Person> ps(3);
  const double rents[] = {1000, 2000, 3000};
  for (int k = 0; k < 3; ++k) {
    ps[k].person_id = "p" + std::to_string(k);
    ps[k].es_raw = rents[k];
    ps[k].home_tract_id = k == 1 ? "t2" : "t1";
  }
  compute_es_variants(ps);
  EXPECT_NEAR(ps[1].es, 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(ps[2].es_percentile, 1.0);
  EXPECT_DOUBLE_EQ(ps[0].es_percentile, 0.0);
  // tract t1 holds 1000 and 3000
  EXPECT_DOUBLE_EQ(ps[0].es_tract_demeaned, -1000.0);
  EXPECT_DOUBLE_EQ(ps[2].es_tract_demeaned, 1000.0);
}

TEST(EsVariants, SinglePersonPercentile) {
  std::vector<Person> ps(1);
  ps[0].es_raw = 1200;
  compute_es_variants(ps);
  EXPECT_DOUBLE_EQ(ps[0].es_percentile, 0.5);
}

TEST(Tract, InsideOutsideAndSharedEdge) {
  std::vector<Feature> fs;
  fs.push_back(square("T1", "tract", 0.0, 0.0, 0.01, 0.01));
  fs.push_back(square("T2", "tract", 0.01, 0.0, 0.02, 0.01));
  const GeoLayer layer(std::move(fs));
  EXPECT_EQ(assign_tract({0.005, 0.005}, layer), "T1");
  EXPECT_EQ(assign_tract({0.005, 0.015}, layer), "T2");
  EXPECT_FALSE(assign_tract({0.05, 0.05}, layer));
  EXPECT_EQ(assign_tract({0.005, 0.01}, layer), "T1");
}

TEST(Crowded, SharedSingleFamilyDropped) {
  PropertyIndex idx({{40.0, -75.0, 1500.0, "single_family"}, {40.1, -75.0, 1500.0, "apartment"}});
  std::vector<Person> ps;
  std::vector<std::size_t> linked;
  for (int k = 0; k < 12; ++k) {
    ps.push_back(Person{.person_id = "s" + std::to_string(k)});
    linked.push_back(0);
  }
  for (int k = 0; k < 12; ++k) {
    ps.push_back(Person{.person_id = "a" + std::to_string(k)});
    linked.push_back(1);
  }
  const auto kept = filter_crowded_residences(ps, linked, idx, 10);
  EXPECT_EQ(kept.size(), 12u);
  for (const auto& p : kept) EXPECT_EQ(p.person_id[0], 'a');
}

TEST(Persons, CsvRoundTrip) {
  std::vector<Person> ps(2);
  ps[0] = Person{"a", 40.1, -75.2, "t1", "r1", 1500, 0.5, 0.25, 0.75, -10, 54000.0};
  ps[1] = Person{"b", 40.3, -75.4, "t2", "r1", 2500, -0.5, 0.5, 0.5, 10, std::nullopt};
  std::ostringstream out;
  write_persons(ps, out);
  std::istringstream in(out.str());
  const auto back = load_persons(in);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].person_id, "a");
  EXPECT_DOUBLE_EQ(back[0].home_lat, 40.1);
  EXPECT_DOUBLE_EQ(back[0].es, 0.5);
  ASSERT_TRUE(back[0].tract_income);
  EXPECT_DOUBLE_EQ(*back[0].tract_income, 54000.0);
  EXPECT_FALSE(back[1].tract_income);
}
