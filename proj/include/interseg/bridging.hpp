#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "interseg/geo.hpp"

namespace interseg {

class GeoLayer;

/// Mean-absolute-difference Gini, sum_ij |v_i - v_j| / (2 n^2 mean), via the
/// sorted-rank form. Throws std::invalid_argument on empty or nonpositive input.
double gini(std::span<const double> values);

enum class DiversityMeasure { gini, variance };
DiversityMeasure parse_measure(const std::string& s);
std::string to_string(DiversityMeasure m);

double diversity(std::span<const double> values, DiversityMeasure m);

struct Hub {
  std::string id;
  LatLon at;
};

struct HubCluster {
  std::string hub_id;
  std::size_t size = 0;
  double diversity = 0.0;
};

struct BridgingResult {
  double bi = 0.0;
  double overall = 0.0;
  DiversityMeasure measure = DiversityMeasure::gini;
  std::vector<HubCluster> clusters;
  std::vector<std::size_t> assignment;
};

/// Index of the nearest hub (straight-line distance through the earth) for
/// each home; ties go to the hub with the smallest id.
std::vector<std::size_t> nearest_hub(std::span<const LatLon> homes, std::span<const Hub> hubs);

/// Within-cluster diversity of nearest-hub clusters, weighted by cluster size,
/// over overall diversity. `es_raw` must be positive for the Gini measure.
/// Throws DataError when there are no hubs, fewer than 2 persons or the overall
/// diversity is zero.
BridgingResult bridging_index(std::span<const LatLon> homes, std::span<const double> es_raw,
                              std::span<const Hub> hubs, DiversityMeasure measure = DiversityMeasure::gini);

struct AblationResult {
  std::vector<double> values;
  double mean = 0.0;
  double p95 = 0.0;
};

/// K uniformly random hubs inside `region` per trial (bounding-box rejection),
/// trial seeds derived from (seed, trial).
AblationResult ablate_random_hubs(std::span<const LatLon> homes, std::span<const double> es_raw, std::size_t k,
                                  const Ring& region, std::size_t trials, std::uint64_t seed,
                                  DiversityMeasure measure = DiversityMeasure::gini, std::size_t threads = 0);

/// Hubs from a layer: hub polygons, or POIs of a category, at their centroids.
std::vector<Hub> hubs_from_layer(const GeoLayer& layer);
std::vector<Hub> category_hubs(const GeoLayer& layer, const std::string& category);

/// bridging_index with the category's venues acting as hubs.
BridgingResult category_bridging_index(std::span<const LatLon> homes, std::span<const double> es_raw,
                                       const GeoLayer& layer, const std::string& category,
                                       DiversityMeasure measure = DiversityMeasure::gini);

/// Linear-interpolated empirical quantile, q in [0, 1].
double quantile(std::vector<double> v, double q);

}  // namespace interseg
