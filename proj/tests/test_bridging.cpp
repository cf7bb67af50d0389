#include <gtest/gtest.h>

#include <cmath>

#include "interseg/bridging.hpp"
#include "interseg/error.hpp"
#include "interseg/geo.hpp"
#include "interseg/random.hpp"

using namespace interseg;

namespace {

// Pairwise definition, O(n^2).
double gini_pairwise(const std::vector<double>& v) {
  double s = 0.0, total = 0.0;
  for (const double a : v) {
    total += a;
    for (const double b : v) s += std::abs(a - b);
  }
  const double n = static_cast<double>(v.size());
  return s / (2.0 * n * total);
}

const LocalProjection kProj({40.0, -75.0});

}  // namespace

TEST(Gini, MatchesPairwiseDefinition) {
  Rng rng(17);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> v(1 + uniform_index(rng, 40));
    for (auto& x : v) x = 100.0 + uniform(rng, 0, 5000);
    EXPECT_NEAR(gini(v), gini_pairwise(v), 1e-12);
  }
}

TEST(Gini, KnownValues) {
  EXPECT_DOUBLE_EQ(gini(std::vector<double>{5, 5, 5}), 0.0);
  EXPECT_NEAR(gini(std::vector<double>{1, 3}), 0.25, 1e-12);
  EXPECT_THROW(gini(std::vector<double>{}), std::invalid_argument);
  EXPECT_THROW(gini(std::vector<double>{1, 0}), std::invalid_argument);
  EXPECT_DOUBLE_EQ(diversity(std::vector<double>{7}, DiversityMeasure::gini), 0.0);
}

TEST(Bridging, SingleHubGivesOne) {
  const std::vector<LatLon> homes{kProj.inverse(0, 0), kProj.inverse(100, 0), kProj.inverse(0, 100)};
  const std::vector<double> es{1000, 2000, 4000};
  const std::vector<Hub> hubs{{"h", kProj.inverse(50, 50)}};
  const auto r = bridging_index(homes, es, hubs);
  EXPECT_NEAR(r.bi, 1.0, 1e-12);
  ASSERT_EQ(r.clusters.size(), 1u);
  EXPECT_EQ(r.clusters[0].size, 3u);
}

TEST(Bridging, HomogeneousClustersGiveZero) {
  const std::vector<LatLon> homes{kProj.inverse(0, 0), kProj.inverse(10, 0), kProj.inverse(5000, 0),
                                  kProj.inverse(5010, 0)};
  const std::vector<double> es{1000, 1000, 3000, 3000};
  const std::vector<Hub> hubs{{"a", kProj.inverse(0, 0)}, {"b", kProj.inverse(5000, 0)}};
  const auto r = bridging_index(homes, es, hubs);
  EXPECT_NEAR(r.bi, 0.0, 1e-12);
  EXPECT_EQ(r.assignment[2], 1u);
}

TEST(Bridging, PerfectMixingGivesOne) {
  const std::vector<LatLon> homes{kProj.inverse(0, 0), kProj.inverse(10, 0), kProj.inverse(5000, 0),
                                  kProj.inverse(5010, 0)};
  const std::vector<double> es{1000, 3000, 1000, 3000};
  const std::vector<Hub> hubs{{"a", kProj.inverse(0, 0)}, {"b", kProj.inverse(5000, 0)}};
  EXPECT_NEAR(bridging_index(homes, es, hubs).bi, 1.0, 1e-12);
}

TEST(Bridging, SingletonClusterContributesZero) {
  const std::vector<LatLon> homes{kProj.inverse(0, 0), kProj.inverse(10, 0), kProj.inverse(5000, 0)};
  const std::vector<double> es{1000, 3000, 2000};
  const std::vector<Hub> hubs{{"a", kProj.inverse(0, 0)}, {"b", kProj.inverse(5000, 0)}};
  const auto r = bridging_index(homes, es, hubs);
  // weighted within: (2/3) * gini{1000,3000} + (1/3) * 0
  const double expect = (2.0 / 3.0) * gini_pairwise({1000, 3000}) / gini_pairwise({1000, 3000, 2000});
  EXPECT_NEAR(r.bi, expect, 1e-12);
}

TEST(Bridging, Errors) {
  const std::vector<LatLon> homes{kProj.inverse(0, 0), kProj.inverse(10, 0)};
  EXPECT_THROW(bridging_index(homes, std::vector<double>{1, 2}, {}), DataError);
  const std::vector<Hub> hubs{{"a", kProj.inverse(0, 0)}};
  EXPECT_THROW(bridging_index(homes, std::vector<double>{5, 5}, hubs), DataError);
}

TEST(Bridging, NearestHubTieGoesToSmallestId) {
  const std::vector<LatLon> homes{kProj.inverse(0, 0)};
  const std::vector<Hub> hubs{{"z", kProj.inverse(100, 0)}, {"a", kProj.inverse(-100, 0)}};
  EXPECT_EQ(nearest_hub(homes, hubs)[0], 1u);
}

TEST(Ablation, DeterministicAndThreadIndependent) {
  Rng rng(4);
  std::vector<LatLon> homes;
  std::vector<double> es;
  for (int k = 0; k < 300; ++k) {
    homes.push_back(kProj.inverse(uniform(rng, 0, 4000), uniform(rng, 0, 4000)));
    es.push_back(500 + uniform(rng, 0, 3000));
  }
  Ring region;
  for (auto [x, y] : {std::pair{0.0, 0.0}, {4000.0, 0.0}, {4000.0, 4000.0}, {0.0, 4000.0}, {0.0, 0.0}}) {
    const auto p = kProj.inverse(x, y);
    region.push_back({p.lon, p.lat});
  }
  const auto a = ablate_random_hubs(homes, es, 5, region, 50, 123, DiversityMeasure::gini, 1);
  const auto b = ablate_random_hubs(homes, es, 5, region, 50, 123, DiversityMeasure::gini, 3);
  ASSERT_EQ(a.values.size(), 50u);
  EXPECT_EQ(a.values, b.values);
  EXPECT_DOUBLE_EQ(a.p95, quantile(a.values, 0.95));
  const auto c = ablate_random_hubs(homes, es, 5, region, 50, 124, DiversityMeasure::gini, 1);
  EXPECT_NE(a.values, c.values);
}

TEST(Quantile, Interpolates) {
  EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4, 5}, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(quantile({1, 2}, 0.25), 1.25);
  EXPECT_DOUBLE_EQ(quantile({7}, 0.95), 7.0);
}
