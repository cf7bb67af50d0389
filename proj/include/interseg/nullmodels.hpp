#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <algorithm>

#include "interseg/annotate.hpp"
#include "interseg/crossings.hpp"
#include "interseg/random.hpp"
#include "interseg/segregation.hpp"

namespace interseg {

/// 1 - |a - b| / (max - min). Throws std::invalid_argument when max == min.
double similarity(double es_i, double es_j, double es_min, double es_max);

enum class Kernel { linear, softmax };
enum class EsTransform { raw, percentile };

Kernel parse_kernel(const std::string& s);
std::string to_string(Kernel k);
EsTransform parse_es_transform(const std::string& s);
std::string to_string(EsTransform t);

struct HomophilyConfig {
  std::size_t degree_per_person = 75;
  double h = 1.0;
  Kernel kernel = Kernel::linear;
  EsTransform es_transform = EsTransform::raw;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  /// Sweeps average IS over replicate networks until persons x replicates
  /// reaches this count (at least one replicate).
  std::size_t min_person_draws = 0;
};

/// Unnormalized partner weight: similarity^H (linear) or exp(H * similarity)
/// (softmax). Both are 1 at most for the linear kernel and e^H for softmax.
double partner_weight(double similarity, const HomophilyConfig& cfg);

/// Draws `degree` distinct partners (never the ego) by successive weighted
/// sampling without replacement. `weight(q)` gives the partner weight and
/// `w_max` bounds it.
template <typename WeightFn>
std::vector<PersonIndex> draw_partners(PersonIndex ego, std::size_t n, std::size_t degree, WeightFn&& weight,
                                       double w_max, Rng& rng);

struct HomophilyNetwork {
  std::vector<Interaction> edges;
  bool complete_graph = false;
};

/// Each person draws degree_per_person partners; the undirected union of all
/// draws is returned (canonical order, no repeats). When the degree reaches
/// n - 1 the complete graph is returned and flagged.
HomophilyNetwork sample_homophily_network(std::span<const double> es, const HomophilyConfig& cfg);

struct RewireResult {
  std::vector<Interaction> edges;
  /// category -> number of self-matches that could not be removed
  std::map<std::string, std::size_t> self_matches_left;
  /// category -> number of stubs dropped to make the count even
  std::map<std::string, std::size_t> stubs_dropped;
};

/// Per POI category, all endpoint stubs are matched uniformly at random.
/// Each person's per-category incident-edge count is preserved. Self-matches
/// are repaired by up to 100 random swaps each, then kept and counted.
/// Interactions without a POI category are not part of the result.
RewireResult configuration_by_category(const AnnotatedSet& set, std::uint64_t seed);

struct NullSweepRow {
  std::size_t population = 0;
  std::size_t replicates = 1;
  double is = 0.0;  // mean over replicates
};

struct NullSweepResult {
  std::vector<NullSweepRow> rows;
  double spearman = 0.0;
};

/// Homophily-network IS for each region's ES vector. Replicate m of region r
/// samples with seed derive_seed(cfg.seed, "null-sweep", r, m).
NullSweepResult population_sweep_null(const std::vector<std::vector<double>>& regions_es,
                                      const HomophilyConfig& cfg, Estimator e = Estimator::naive);

/// IS of an edge list whose persons all act as egos; ES is standardized first.
SegregationEstimate network_is(std::span<const Interaction> edges, std::span<const double> es, Estimator e,
                               Weighting w = Weighting::dedup_pairs);

// ---- template implementation ----

template <typename WeightFn>
std::vector<PersonIndex> draw_partners(PersonIndex ego, std::size_t n, std::size_t degree, WeightFn&& weight,
                                       double w_max, Rng& rng) {
  std::vector<PersonIndex> out;
  if (n < 2) return out;
  degree = std::min(degree, n - 1);
  out.reserve(degree);
  std::vector<bool> taken(n, false);
  taken[ego] = true;
  std::size_t remaining = n - 1;
  // Rejection sampling from the bounded weights; when it stalls (most mass
  // already taken or tiny weights) fall back to an exact cumulative draw.
  std::size_t misses = 0;
  while (out.size() < degree) {
    if (misses < 64 * (n + degree) && remaining * 2 >= n) {
      const auto q = static_cast<PersonIndex>(uniform_index(rng, n));
      if (taken[q]) continue;
      if (uniform01(rng) * w_max < weight(q)) {
        taken[q] = true;
        out.push_back(q);
        --remaining;
        misses = 0;
      } else {
        ++misses;
      }
      continue;
    }
    double total = 0.0;
    for (PersonIndex q = 0; q < n; ++q)
      if (!taken[q]) total += weight(q);
    if (!(total > 0)) {
      // only zero-weight partners left: choose uniformly among them
      std::vector<PersonIndex> rest;
      for (PersonIndex q = 0; q < n; ++q)
        if (!taken[q]) rest.push_back(q);
      const auto q = rest[uniform_index(rng, rest.size())];
      taken[q] = true;
      out.push_back(q);
      --remaining;
      continue;
    }
    double target = uniform01(rng) * total;
    PersonIndex pick = 0;
    for (PersonIndex q = 0; q < n; ++q) {
      if (taken[q]) continue;
      pick = q;
      target -= weight(q);
      if (target < 0) break;
    }
    taken[pick] = true;
    out.push_back(pick);
    --remaining;
  }
  return out;
}

}  // namespace interseg
