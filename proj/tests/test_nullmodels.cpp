#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "interseg/nullmodels.hpp"
#include "interseg/stats.hpp"

using namespace interseg;

namespace {

std::vector<double> draw_frequencies(const std::vector<double>& es, PersonIndex ego, const HomophilyConfig& cfg,
                                     std::size_t draws) {
  const double lo = *std::min_element(es.begin(), es.end());
  const double hi = *std::max_element(es.begin(), es.end());
  const double w_max = cfg.kernel == Kernel::linear ? 1.0 : std::exp(cfg.h);
  auto weight = [&](PersonIndex q) { return partner_weight(similarity(es[ego], es[q], lo, hi), cfg); };
  Rng rng(cfg.seed);
  std::vector<double> freq(es.size(), 0.0);
  for (std::size_t d = 0; d < draws; ++d) {
    const auto got = draw_partners(ego, es.size(), 1, weight, w_max, rng);
    freq[got.at(0)] += 1.0 / static_cast<double>(draws);
  }
  return freq;
}

}  // namespace

TEST(Similarity, Examples) {
  EXPECT_DOUBLE_EQ(similarity(1000, 1000, 500, 2500), 1.0);
  EXPECT_DOUBLE_EQ(similarity(500, 2500, 500, 2500), 0.0);
  EXPECT_DOUBLE_EQ(similarity(1000, 1500, 500, 2500), 0.75);
  EXPECT_THROW(similarity(1, 1, 3, 3), std::invalid_argument);
}

TEST(Homophily, ZeroStrengthIsUniform) {
  std::vector<double> es;
  for (int k = 0; k < 10; ++k) es.push_back(1000.0 + 100.0 * k * k);
  HomophilyConfig cfg;
  cfg.h = 0.0;
  cfg.seed = 77;
  const std::size_t draws = 100000;
  const auto f = draw_frequencies(es, 3, cfg, draws);
  EXPECT_EQ(f[3], 0.0);
  double chi = 0.0;
  const double expect = static_cast<double>(draws) / 9.0;
  for (std::size_t q = 0; q < es.size(); ++q) {
    if (q == 3) continue;
    const double obs = f[q] * static_cast<double>(draws);
    chi += (obs - expect) * (obs - expect) / expect;
  }
  EXPECT_GT(chi_square_sf(chi, 8.0), 0.001) << chi;
}

TEST(Homophily, ThreePersonProbabilities) {
  // ego ES 1 in {0, 1, 3}: similarities 2/3 and 1/3
  const std::vector<double> es{0.0, 1.0, 3.0};
  HomophilyConfig cfg;
  cfg.seed = 5;
  auto f = draw_frequencies(es, 1, cfg, 100000);
  EXPECT_NEAR(f[0], 2.0 / 3.0, 0.01);
  EXPECT_NEAR(f[2], 1.0 / 3.0, 0.01);

  cfg.h = 2.0;
  f = draw_frequencies(es, 1, cfg, 100000);
  EXPECT_NEAR(f[0], 0.8, 0.01);

  cfg.h = 1.0;
  cfg.kernel = Kernel::softmax;
  f = draw_frequencies(es, 1, cfg, 100000);
  const double e1 = std::exp(2.0 / 3.0), e2 = std::exp(1.0 / 3.0);
  EXPECT_NEAR(f[0], e1 / (e1 + e2), 0.01);
}

TEST(Homophily, PartnersDistinctAndNeverEgo) {
  Rng rng(2);
  auto weight = [](PersonIndex q) { return q % 3 == 0 ? 0.0 : 1.0; };
  const auto got = draw_partners(4, 20, 19, weight, 1.0, rng);
  EXPECT_EQ(got.size(), 19u);
  std::set<PersonIndex> s(got.begin(), got.end());
  EXPECT_EQ(s.size(), 19u);
  EXPECT_EQ(s.count(4), 0u);
}

TEST(Homophily, NetworkDegreeAndCompleteGraph) {
  std::vector<double> es;
  for (int k = 0; k < 200; ++k) es.push_back(1000.0 + k);
  HomophilyConfig cfg;
  cfg.degree_per_person = 10;
  cfg.seed = 3;
  const auto net = sample_homophily_network(es, cfg);
  EXPECT_FALSE(net.complete_graph);
  std::vector<std::size_t> deg(es.size(), 0);
  for (const auto& e : net.edges) {
    EXPECT_LT(e.i, e.j);
    ++deg[e.i];
    ++deg[e.j];
  }
  for (const auto d : deg) EXPECT_GE(d, 10u);

  cfg.threads = 3;
  EXPECT_EQ(sample_homophily_network(es, cfg).edges.size(), net.edges.size());

  const std::vector<double> small{1, 2, 3, 4, 5};
  cfg.degree_per_person = 75;
  const auto full = sample_homophily_network(small, cfg);
  EXPECT_TRUE(full.complete_graph);
  EXPECT_EQ(full.edges.size(), 10u);
}

namespace {

AnnotatedSet category_set(const std::vector<std::pair<PersonIndex, PersonIndex>>& pairs, const std::string& cat) {
  AnnotatedSet set;
  const auto c = set.labels.intern(cat);
  PersonIndex n = 0;
  for (const auto& [i, j] : pairs) {
    Annotation a;
    a.poi_category = c;
    set.edges.push_back({i, j, 0, 0, 0, 0});
    set.ann.push_back(a);
    n = std::max({n, i + 1, j + 1});
  }
  for (PersonIndex k = 0; k < n; ++k) set.ids.push_back("p" + std::to_string(k));
  return set;
}

}  // namespace

TEST(ConfigModel, TwoStubsForcedMatch) {
  const auto r = configuration_by_category(category_set({{0, 1}}, "cafe"), 9);
  ASSERT_EQ(r.edges.size(), 1u);
  EXPECT_EQ(r.edges[0].i, 0u);
  EXPECT_EQ(r.edges[0].j, 1u);
}

TEST(ConfigModel, DegreesConserved) {
  Rng rng(12);
  std::vector<std::pair<PersonIndex, PersonIndex>> pairs;
  for (int k = 0; k < 400; ++k) {
    const auto i = static_cast<PersonIndex>(uniform_index(rng, 80));
    auto j = static_cast<PersonIndex>(uniform_index(rng, 80));
    if (j == i) j = (j + 1) % 80;
    pairs.emplace_back(std::min(i, j), std::max(i, j));
  }
  const auto set = category_set(pairs, "restaurant");
  const auto r = configuration_by_category(set, 31);
  EXPECT_TRUE(r.self_matches_left.empty());
  std::map<PersonIndex, int> before, after;
  for (const auto& [i, j] : pairs) {
    ++before[i];
    ++before[j];
  }
  for (const auto& e : r.edges) {
    ++after[e.i];
    ++after[e.j];
  }
  EXPECT_EQ(before, after);
  EXPECT_NE(r.edges.size(), 0u);
  EXPECT_EQ(configuration_by_category(set, 31).edges.size(), r.edges.size());
}

TEST(ConfigModel, UncategorizedEdgesIgnored) {
  auto set = category_set({{0, 1}, {1, 2}}, "cafe");
  set.ann[1].poi_category = LabelPool::kNone;
  const auto r = configuration_by_category(set, 1);
  EXPECT_EQ(r.edges.size(), 1u);
}

TEST(NullSweep, ReplicatesCoverMinimumDraws) {
  std::vector<std::vector<double>> regions;
  for (std::size_t n : {100u, 400u}) {
    std::vector<double> es;
    for (std::size_t k = 0; k < n; ++k) es.push_back(1000.0 + static_cast<double>((k * 37) % 101));
    regions.push_back(es);
  }
  HomophilyConfig cfg;
  cfg.degree_per_person = 5;
  cfg.min_person_draws = 1000;
  const auto r = population_sweep_null(regions, cfg);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_EQ(r.rows[0].replicates, 10u);
  EXPECT_EQ(r.rows[1].replicates, 3u);
  EXPECT_GT(r.rows[0].is, 0.5);
}
