#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "interseg/geo.hpp"
#include "interseg/ingest.hpp"
#include "interseg/kdtree.hpp"

namespace interseg {

class GeoLayer;

/// Local wall-clock helpers for a fixed UTC offset (no daylight saving).
inline std::int64_t to_local_seconds(std::int64_t t_utc, double utc_offset_hours) {
  return t_utc + static_cast<std::int64_t>(std::llround(utc_offset_hours * 3600.0));
}

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

inline int hour_of_day(std::int64_t local_hour_index) {
  return static_cast<int>(local_hour_index - floor_div(local_hour_index, 24) * 24);
}

/// Interpolated position at a whole local hour; `local_hour` counts hours since
/// the local epoch.
struct HourlyPosition {
  std::int64_t local_hour = 0;
  double lat = 0.0;
  double lon = 0.0;
};

/// Linear interpolation of lat/lon at every whole local hour between the first
/// and last ping. Hours whose bracketing pings are more than `max_gap_h` apart
/// are omitted. Fewer than two pings yields nothing.
std::vector<HourlyPosition> interpolate_hourly(std::span<const Fix> pings, double utc_offset_hours,
                                               double max_gap_h = 6.0);

struct HomeConfig {
  int night_start_hour = 18;
  int night_end_hour = 9;
  double move_thresh_m = 50.0;
  double radius_m = 50.0;
  int min_nights = 3;
  double min_frac = 0.6;
  double max_gap_h = 6.0;
  double utc_offset_hours = 0.0;
};

struct HomeEstimate {
  LatLon home;
  int nights = 0;
  std::size_t stationary = 0;
  std::size_t in_radius = 0;
  double frac_in_radius = 0.0;
};

/// Night that a local hour belongs to; a night runs from night_start on one
/// calendar day to night_end on the next.
std::int64_t night_of(std::int64_t local_hour, int night_end_hour);
bool is_night_hour(int hour, int night_start_hour, int night_end_hour);

/// Stationary nighttime observations are night hours whose displacement to the
/// next hour is below move_thresh_m. They must span min_nights distinct nights
/// and at least min_frac of them must lie within radius_m of their medoid; the
/// home is then the per-coordinate median of that in-radius subset.
std::optional<HomeEstimate> infer_home(std::span<const HourlyPosition> hourly,
                                       const HomeConfig& cfg = {});

std::optional<HomeEstimate> infer_home_from_pings(std::span<const Fix> pings,
                                                  const HomeConfig& cfg = {});

/// Home inference for every person in the store (parallel, deterministic).
std::vector<std::optional<HomeEstimate>> infer_homes(const PingStore& store, const HomeConfig& cfg,
                                                     std::size_t threads = 0);

struct Property {
  double lat = 0.0;
  double lon = 0.0;
  double rent = 0.0;
  std::string kind = "residential";
};

/// Reads `lat,lon,rent[,kind]`. Rows with rent <= 0 or bad coordinates are skipped.
std::vector<Property> load_properties(std::istream& in, std::uint64_t* rejected = nullptr);
void write_properties(std::span<const Property> props, std::ostream& out);

/// Exact nearest-property lookup (k-d tree over earth-centred coordinates,
/// verified with haversine).
class PropertyIndex {
 public:
  explicit PropertyIndex(std::vector<Property> props);

  bool empty() const { return props_.empty(); }
  const Property& property(std::size_t i) const { return props_[i]; }
  std::size_t size() const { return props_.size(); }

  struct Hit {
    std::size_t index;
    double distance_m;
  };
  std::optional<Hit> nearest(double lat, double lon) const;

 private:
  std::vector<Property> props_;
  KdTree<3> tree_;
};

struct LinkConfig {
  double max_dist_m = 100.0;
  double winsor_max = 20000.0;
};

struct EsLink {
  double es_raw = 0.0;
  std::size_t property = 0;
  double distance_m = 0.0;
};

/// Rent of the nearest property within max_dist_m, winsorized at winsor_max.
/// Throws ConfigError if the property table is empty.
std::optional<EsLink> link_es(LatLon home, const PropertyIndex& props, const LinkConfig& cfg = {});

/// Tract polygon containing the point (smallest tract id on shared edges).
std::optional<std::string> assign_tract(LatLon home, const GeoLayer& layer);

struct Person {
  std::string person_id;
  double home_lat = 0.0;
  double home_lon = 0.0;
  std::string home_tract_id;
  std::string region_id;
  double es_raw = 0.0;
  double es = 0.0;
  double es_percentile = 0.0;
  double es_percentile_within_region = 0.0;
  double es_tract_demeaned = 0.0;
  std::optional<double> tract_income;

  LatLon home() const { return {home_lat, home_lon}; }
};

/// Fills es (z-score over all persons, population variance), global and
/// within-region percentiles (rank/(n-1), average ranks on ties) and the
/// tract-demeaned rent.
void compute_es_variants(std::vector<Person>& persons);

/// Drops persons linked to a single-family property shared with more than
/// `max_others` other persons. `linked[i]` is persons[i]'s property index.
std::vector<Person> filter_crowded_residences(std::vector<Person> persons,
                                              std::span<const std::size_t> linked,
                                              const PropertyIndex& props, std::size_t max_others = 10);

void write_persons(std::span<const Person> persons, std::ostream& out);
std::vector<Person> load_persons(std::istream& in);

}  // namespace interseg
