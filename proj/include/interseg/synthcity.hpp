#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "interseg/annotate.hpp"
#include "interseg/bridging.hpp"
#include "interseg/home_es.hpp"
#include "interseg/layers.hpp"

namespace interseg {

enum class HubPlacement { bridging, segregating, random };
enum class TractPattern { checkerboard, random };

HubPlacement parse_hub_placement(const std::string& s);
std::string to_string(HubPlacement h);
TractPattern parse_tract_pattern(const std::string& s);
std::string to_string(TractPattern p);

struct CategorySpec {
  std::string name;
  std::size_t venues = 0;
};

/// Everything that defines a synthetic region. Generation is a pure function
/// of the recipe.
struct CityRecipe {
  std::string region_id = "region_0";
  std::size_t population = 1000;
  std::size_t tracts_per_side = 4;
  double density_per_km2 = 100.0;
  LatLon origin{40.0, -75.0};

  // ES (monthly rent, dollars) is lognormal around a per-tract mean
  double es_median = 1500.0;
  TractPattern tract_pattern = TractPattern::checkerboard;
  double tract_sigma = 0.5;
  double within_sigma = 0.25;

  std::size_t n_hubs = 0;  // 0: one per tract
  HubPlacement hub_placement = HubPlacement::random;
  std::vector<CategorySpec> categories{{"restaurant", 24}, {"grocery", 8}};
  double venue_sigma = 0.5;  // log-sd of venue ES
  double gamma = 3.0;        // ES-matching strength of venue choice
  double travel_radius_m = 5000.0;
  double distance_scale_m = 1500.0;  // 0 disables distance decay
  std::size_t favorites = 3;  // habitual venues per category; 0 picks afresh on every visit
  std::size_t local_venues_per_tract = 0;
  double local_visit_prob = 0.0;
  double local_gamma = 2.0;

  int days = 8;
  int visits_per_day = 1;
  double night_ping_interval_s = 900.0;
  double day_ping_interval_s = 600.0;
  double ping_noise_m = 10.0;
  std::int64_t start_time = 1704067200;  // 2024-01-01T00:00Z
  std::uint64_t seed = 1;

  void validate() const;
  std::size_t n_tracts() const { return tracts_per_side * tracts_per_side; }
  double side_m() const;
};

nlohmann::ordered_json to_json(const CityRecipe& r);
CityRecipe recipe_from_json(const nlohmann::json& j);

struct SynthPerson {
  std::string id;
  LatLon home;
  std::size_t tract = 0;
  double es = 0.0;
};

struct SynthVenue {
  std::string id;
  std::string category;
  std::ptrdiff_t hub = -1;  // -1 for local venues
  std::size_t tract = 0;    // tract for local venues
  LatLon at;
  double half_side_m = 15.0;
  double es = 0.0;
};

/// A continuous stay of one person at home (venue = -1) or at a venue.
struct Stay {
  std::uint32_t person = 0;
  std::int32_t venue = -1;
  std::int64_t start = 0;
  std::int64_t end = 0;
};

struct City {
  CityRecipe recipe;
  std::vector<std::string> tract_ids;
  std::vector<double> tract_mean_es;
  std::vector<Hub> hubs;
  std::vector<SynthVenue> venues;
  std::vector<SynthPerson> persons;
  std::vector<Stay> stays;  // grouped by person, time-ordered
  GeoLayer layer;
  Ring region_ring;
};

/// Builds homes, ES, tracts, hubs, venues and every person's stays.
City build_city(const CityRecipe& recipe);

/// Renders stays as ping CSV (`person_id,t,lat,lon,accuracy_m`).
void write_city_pings(const City& city, std::ostream& out);

/// One property per home with rent equal to the person's ES.
std::vector<Property> city_properties(const City& city);

/// True homes and ES per person, tract means and the hub regime.
nlohmann::ordered_json ground_truth(const City& city);

/// Persons as the home/ES stages would produce them (ES variants filled).
std::vector<Person> city_persons(const City& city);

struct GeneratedFiles {
  std::filesystem::path pings, properties, layers, truth, recipe;
};

/// Writes pings.csv, properties.csv, layers.jsonl, truth.json and recipe.json
/// into `dir` (created if needed).
GeneratedFiles generate(const CityRecipe& recipe, const std::filesystem::path& dir);

/// Interactions derived directly from stays: every pair of overlapping stays
/// at the same venue, and every pair of overlapping home stays whose homes are
/// closer than dist_m, gives one interaction at the start of the overlap.
/// Person indices follow city.persons. Annotated against city.layer.
AnnotatedSet stay_interactions(const City& city, double dist_m = 50.0, std::size_t threads = 0);

struct SweepRow {
  std::string region_id;
  std::size_t population = 0;
  std::size_t venue_count = 0;
  double cov = 0.0;
  double venue_is = 0.0;
  double overall_is = 0.0;
  double bi = 0.0;
  double nsi = 0.0;
};

/// Headline statistics of one city from its stay-level interactions.
SweepRow summarize_city(const City& city, std::size_t threads = 0);

/// Recipes where venue counts and venue ES spread grow with population.
struct SweepScaling {
  double persons_per_tract = 250.0;
  std::size_t reference_population = 1000;
  double venue_exponent = 1.0;
  double sigma_slope = 0.15;  // added to venue_sigma per unit of log(pop / ref)
};

std::vector<CityRecipe> population_sweep_recipes(const CityRecipe& base, const std::vector<std::size_t>& populations,
                                                 const SweepScaling& scaling, std::uint64_t seed);

/// Populations spaced evenly on a log scale between lo and hi.
std::vector<std::size_t> log_spaced(std::size_t lo, std::size_t hi, std::size_t count);

std::vector<SweepRow> sweep(const std::vector<CityRecipe>& recipes, std::size_t threads = 0);

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out);

}  // namespace interseg
