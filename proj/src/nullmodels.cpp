#include "interseg/nullmodels.hpp"

#include <cmath>
#include <stdexcept>

#include "interseg/error.hpp"
#include "interseg/parallel.hpp"
#include "interseg/stats.hpp"

namespace interseg {

double similarity(double es_i, double es_j, double es_min, double es_max) {
  if (!(es_max > es_min)) throw std::invalid_argument("similarity needs es_max > es_min");
  return 1.0 - std::abs(es_i - es_j) / (es_max - es_min);
}

Kernel parse_kernel(const std::string& s) {
  if (s == "linear") return Kernel::linear;
  if (s == "softmax") return Kernel::softmax;
  throw ConfigError("unknown kernel '" + s + "'");
}

std::string to_string(Kernel k) { return k == Kernel::linear ? "linear" : "softmax"; }

EsTransform parse_es_transform(const std::string& s) {
  if (s == "raw") return EsTransform::raw;
  if (s == "percentile") return EsTransform::percentile;
  throw ConfigError("unknown ES transform '" + s + "'");
}

std::string to_string(EsTransform t) { return t == EsTransform::raw ? "raw" : "percentile"; }

double partner_weight(double sim, const HomophilyConfig& cfg) {
  if (cfg.kernel == Kernel::softmax) return std::exp(cfg.h * sim);
  if (cfg.h == 0.0) return 1.0;
  return sim <= 0.0 ? 0.0 : std::pow(sim, cfg.h);
}

HomophilyNetwork sample_homophily_network(std::span<const double> es, const HomophilyConfig& cfg) {
  const std::size_t n = es.size();
  if (n < 2) throw DataError("homophily network needs at least 2 persons");
  if (cfg.degree_per_person < 1) throw ConfigError("degree_per_person must be >= 1");
  if (cfg.h < 0) throw ConfigError("homophily exponent must be >= 0");
  HomophilyNetwork net;
  if (cfg.degree_per_person >= n - 1) {
    net.complete_graph = true;
    for (PersonIndex i = 0; i < n; ++i)
      for (PersonIndex j = i + 1; j < n; ++j) net.edges.push_back({i, j, 0, 0.0, 0.0, 0});
    return net;
  }
  std::vector<double> v(es.begin(), es.end());
  if (cfg.es_transform == EsTransform::percentile) {
    v = average_ranks(es);
    for (auto& x : v) x /= static_cast<double>(n - 1);
  }
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double es_min = *lo, es_max = *hi;
  if (!(es_max > es_min)) throw DataError("homophily network needs varying ES");
  const double w_max = cfg.kernel == Kernel::softmax ? std::exp(cfg.h) : 1.0;

  std::vector<std::vector<PersonIndex>> draws(n);
  parallel_for(
      n,
      [&](std::size_t ego) {
        Rng rng(derive_seed(cfg.seed, "homophily", ego));
        const double e = v[ego];
        auto weight = [&](PersonIndex q) { return partner_weight(similarity(e, v[q], es_min, es_max), cfg); };
        draws[ego] = draw_partners(static_cast<PersonIndex>(ego), n, cfg.degree_per_person, weight, w_max, rng);
      },
      cfg.threads);
  for (PersonIndex ego = 0; ego < n; ++ego) {
    for (const auto q : draws[ego]) net.edges.push_back({std::min(ego, q), std::max(ego, q), 0, 0.0, 0.0, 0});
    std::vector<PersonIndex>().swap(draws[ego]);
  }
  sort_canonical(net.edges);
  net.edges.erase(std::unique(net.edges.begin(), net.edges.end(),
                              [](const Interaction& a, const Interaction& b) { return a.i == b.i && a.j == b.j; }),
                  net.edges.end());
  return net;
}

RewireResult configuration_by_category(const AnnotatedSet& set, std::uint64_t seed) {
  std::map<std::string, std::vector<std::size_t>> by_cat;
  for (std::size_t k = 0; k < set.edges.size(); ++k) {
    const auto c = set.ann[k].poi_category;
    if (c != LabelPool::kNone) by_cat[set.labels.str(c)].push_back(k);
  }
  RewireResult out;
  for (const auto& [cat, edge_ids] : by_cat) {
    Rng rng(derive_seed(seed, "config-model", fnv1a64(cat)));
    std::vector<PersonIndex> stubs;
    stubs.reserve(2 * edge_ids.size());
    for (const auto k : edge_ids) {
      stubs.push_back(set.edges[k].i);
      stubs.push_back(set.edges[k].j);
    }
    if (stubs.size() % 2 == 1) {
      const auto drop = uniform_index(rng, stubs.size());
      stubs.erase(stubs.begin() + static_cast<std::ptrdiff_t>(drop));
      out.stubs_dropped[cat] = 1;
    }
    shuffle(stubs.begin(), stubs.end(), rng);
    const std::size_t pairs = stubs.size() / 2;
    std::size_t left = 0;
    for (std::size_t m = 0; m < pairs; ++m) {
      if (stubs[2 * m] != stubs[2 * m + 1]) continue;
      bool fixed = false;
      for (int attempt = 0; attempt < 100 && pairs > 1 && !fixed; ++attempt) {
        const std::size_t other = uniform_index(rng, pairs);
        if (other == m) continue;
        // swap our second stub with one stub of the other pair
        const std::size_t slot = 2 * other + uniform_index(rng, 2);
        const std::size_t partner = slot ^ 1;
        if (stubs[slot] == stubs[2 * m] || stubs[2 * m + 1] == stubs[partner]) continue;
        std::swap(stubs[2 * m + 1], stubs[slot]);
        fixed = true;
      }
      if (!fixed) ++left;
    }
    for (std::size_t m = 0; m < pairs; ++m) {
      const PersonIndex a = stubs[2 * m], b = stubs[2 * m + 1];
      if (a == b) continue;
      const auto& tmpl = set.edges[edge_ids[m]];
      out.edges.push_back({std::min(a, b), std::max(a, b), tmpl.t, tmpl.lat, tmpl.lon, 0});
    }
    if (left > 0) out.self_matches_left[cat] = left;
  }
  sort_canonical(out.edges);
  return out;
}

SegregationEstimate network_is(std::span<const Interaction> edges, std::span<const double> es, Estimator e,
                               Weighting w) {
  const auto z = standardize(es);
  const auto groups = build_groups(edges, z, {}, w);
  return estimate(groups, e);
}

NullSweepResult population_sweep_null(const std::vector<std::vector<double>>& regions_es,
                                      const HomophilyConfig& cfg, Estimator e) {
  NullSweepResult out;
  std::vector<double> pop, is;
  for (std::size_t r = 0; r < regions_es.size(); ++r) {
    const std::size_t n = regions_es[r].size();
    const std::size_t reps = n == 0 ? 1 : std::max<std::size_t>(1, (cfg.min_person_draws + n - 1) / n);
    double sum = 0.0;
    for (std::size_t m = 0; m < reps; ++m) {
      HomophilyConfig c = cfg;
      c.seed = derive_seed(cfg.seed, "null-sweep", r, m);
      const auto net = sample_homophily_network(regions_es[r], c);
      sum += network_is(net.edges, regions_es[r], e).rho;
    }
    const double mean_is = sum / static_cast<double>(reps);
    out.rows.push_back({n, reps, mean_is});
    pop.push_back(static_cast<double>(n));
    is.push_back(mean_is);
  }
  if (out.rows.size() >= 2) {
    try {
      out.spearman = spearman(pop, is);
    } catch (const std::invalid_argument&) {
      out.spearman = 0.0;
    }
  }
  return out;
}

}  // namespace interseg
