#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "interseg/annotate.hpp"
#include "interseg/crossings.hpp"

namespace interseg {

struct EgoGroup {
  PersonIndex ego = 0;
  double x = 0.0;
  std::vector<double> ys;
};

struct SegregationEstimate {
  double rho = 0.0;
  double a = 0.0;
  double b = 0.0;
  double var_u = 0.0;
  double var_e = 0.0;
  std::size_t n_egos = 0;
  std::size_t n_obs = 0;
  double reml_loglik = 0.0;
  double lambda = 0.0;
  bool converged = false;
  /// True when the optimum sits at var_u = 0.
  bool boundary = false;
  std::string diagnostic;
};

/// Per-group sufficient statistics used by the REML profile.
struct GroupStats {
  double n = 0.0;
  double x = 0.0;
  double ybar = 0.0;
  double ssw = 0.0;
};

std::vector<GroupStats> group_stats(std::span<const EgoGroup> groups);

struct RemlProfile {
  double loglik = 0.0;
  double a = 0.0;
  double b = 0.0;
  double sigma2 = 0.0;
};

/// Restricted log-likelihood profiled over (a, b, var_e) at variance ratio
/// lambda = var_u / var_e.
RemlProfile reml_profile(std::span<const GroupStats> stats, double lambda);

/// REML fit of y_ij = a x_i + b + u_i + e_ij. x is re-standardized over the
/// given groups first (population variance), so a is on the correlation scale
/// and rho = a / sqrt(a^2 + var_u). Throws DataError with fewer than 2 groups
/// or when x has zero variance.
SegregationEstimate fit_mixed(std::span<const EgoGroup> groups);

/// Pearson correlation of x_i with the mean of ys_i.
double naive_corr(std::span<const EgoGroup> groups);

enum class Estimator { mixed, naive };
Estimator parse_estimator(const std::string& s);
std::string to_string(Estimator e);

/// fit_mixed, or naive_corr wrapped in an estimate (only rho, n_egos, n_obs set).
SegregationEstimate estimate(std::span<const EgoGroup> groups, Estimator e);

/// Ego groups from an edge list. `es` holds standardized ES per universe index
/// (NaN when unknown); `is_ego` selects which persons act as egos (empty means
/// all). Egos need a known ES and at least one alter with known ES.
std::vector<EgoGroup> build_groups(std::span<const Interaction> edges, std::span<const double> es,
                                   std::span<const char> is_ego, Weighting w);

/// Correlation of each person's ES with the mean ES of their tract (the mean
/// includes the person). Throws DataError with fewer than 2 tracts or when
/// the tract means do not vary.
double nsi(std::span<const double> es, std::span<const std::string> tract);

/// Complete within-tract network: every resident's alters are all residents of
/// the same tract, the resident included.
std::vector<EgoGroup> complete_tract_groups(std::span<const double> es, std::span<const std::string> tract);

/// Builds groups from the edges passing `keep` and fits. Throws DataError
/// ("no interactions match") when nothing passes.
SegregationEstimate is_decomposed(const AnnotatedSet& set, std::span<const double> es,
                                  std::span<const char> is_ego, const EdgeFilter& keep, Weighting w,
                                  Estimator e = Estimator::mixed);

struct VenueStat {
  std::string poi_id;
  double median_es = 0.0;
  std::size_t visitors = 0;
};

struct VenueStats {
  std::string category;
  std::vector<VenueStat> venues;
  double cov = 0.0;
  /// Mean number of category venues within `radius_m` of a resident's home.
  double accessibility = 0.0;
  /// Mean distance from a resident's home to the nearest category venue.
  double localization_m = 0.0;
};

/// `es_raw` is indexed by universe index (NaN when unknown); `homes` are the
/// residents used for accessibility and localization. Venue locations are POI
/// centroids. An absent category gives an empty result.
VenueStats venue_stats(const AnnotatedSet& set, std::span<const double> es_raw, std::span<const LatLon> homes,
                       const GeoLayer& layer, const std::string& category, double radius_m = 10000.0);

struct ConnectednessEntry {
  std::size_t a = 0;
  std::size_t b = 0;
  std::uint64_t pairs = 0;
  double score = 0.0;
};

/// For every pair of regions a <= b: distinct interacting person pairs spanning
/// them divided by n_a * n_b (n_a choose 2 on the diagonal). `region[p]` is -1
/// for persons outside every region; regions without persons are omitted.
std::vector<ConnectednessEntry> connectedness(std::span<const Interaction> edges, std::span<const int> region,
                                              std::size_t n_regions);

/// z-scores with population variance; NaN entries stay NaN and are ignored.
std::vector<double> standardize(std::span<const double> v);

}  // namespace interseg
