#include "interseg/synthcity.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>

#include "interseg/csv.hpp"
#include "interseg/error.hpp"
#include "interseg/kdtree.hpp"
#include "interseg/parallel.hpp"
#include "interseg/random.hpp"
#include "interseg/segregation.hpp"
#include "interseg/stats.hpp"

namespace interseg {

HubPlacement parse_hub_placement(const std::string& s) {
  if (s == "bridging") return HubPlacement::bridging;
  if (s == "segregating") return HubPlacement::segregating;
  if (s == "random") return HubPlacement::random;
  throw ConfigError("unknown hub placement '" + s + "'");
}

std::string to_string(HubPlacement h) {
  switch (h) {
    case HubPlacement::bridging: return "bridging";
    case HubPlacement::segregating: return "segregating";
    case HubPlacement::random: return "random";
  }
  return "random";
}

TractPattern parse_tract_pattern(const std::string& s) {
  if (s == "checkerboard") return TractPattern::checkerboard;
  if (s == "random") return TractPattern::random;
  throw ConfigError("unknown tract pattern '" + s + "'");
}

std::string to_string(TractPattern p) { return p == TractPattern::checkerboard ? "checkerboard" : "random"; }

void CityRecipe::validate() const {
  if (population < 2) throw ConfigError("population must be at least 2");
  if (tracts_per_side < 1) throw ConfigError("tracts_per_side must be at least 1");
  if (!(density_per_km2 > 0)) throw ConfigError("density must be positive");
  if (!(es_median > 0)) throw ConfigError("es_median must be positive");
  if (tract_sigma < 0 || within_sigma < 0 || venue_sigma < 0) throw ConfigError("spreads must be >= 0");
  if (days < 1) throw ConfigError("days must be at least 1");
  if (visits_per_day < 0 || visits_per_day > 6) throw ConfigError("visits_per_day must be in 0..6");
  if (!(night_ping_interval_s > 0) || !(day_ping_interval_s > 0)) throw ConfigError("ping intervals must be positive");
  std::size_t venues = 0;
  for (const auto& c : categories) {
    if (c.name.empty()) throw ConfigError("category with empty name");
    venues += c.venues;
  }
  if (visits_per_day > 0 && venues == 0 && local_venues_per_tract == 0)
    throw ConfigError("recipe has visits but no venues");
  if (hub_placement == HubPlacement::bridging && tracts_per_side < 2)
    throw ConfigError("bridging hub placement needs at least 2 tracts per side");
  if (local_visit_prob < 0 || local_visit_prob > 1) throw ConfigError("local_visit_prob must be in [0, 1]");
}

double CityRecipe::side_m() const {
  return std::sqrt(static_cast<double>(population) / density_per_km2) * 1000.0;
}

nlohmann::ordered_json to_json(const CityRecipe& r) {
  nlohmann::ordered_json j;
  j["region_id"] = r.region_id;
  j["population"] = r.population;
  j["tracts_per_side"] = r.tracts_per_side;
  j["density_per_km2"] = r.density_per_km2;
  j["origin_lat"] = r.origin.lat;
  j["origin_lon"] = r.origin.lon;
  j["es_median"] = r.es_median;
  j["tract_pattern"] = to_string(r.tract_pattern);
  j["tract_sigma"] = r.tract_sigma;
  j["within_sigma"] = r.within_sigma;
  j["n_hubs"] = r.n_hubs;
  j["hub_placement"] = to_string(r.hub_placement);
  auto cats = nlohmann::ordered_json::array();
  for (const auto& c : r.categories) cats.push_back({{"name", c.name}, {"venues", c.venues}});
  j["categories"] = cats;
  j["venue_sigma"] = r.venue_sigma;
  j["gamma"] = r.gamma;
  j["travel_radius_m"] = r.travel_radius_m;
  j["distance_scale_m"] = r.distance_scale_m;
  j["favorites"] = r.favorites;
  j["local_venues_per_tract"] = r.local_venues_per_tract;
  j["local_visit_prob"] = r.local_visit_prob;
  j["local_gamma"] = r.local_gamma;
  j["days"] = r.days;
  j["visits_per_day"] = r.visits_per_day;
  j["night_ping_interval_s"] = r.night_ping_interval_s;
  j["day_ping_interval_s"] = r.day_ping_interval_s;
  j["ping_noise_m"] = r.ping_noise_m;
  j["start_time"] = r.start_time;
  j["seed"] = r.seed;
  return j;
}

CityRecipe recipe_from_json(const nlohmann::json& j) {
  CityRecipe r;
  try {
    r.region_id = j.value("region_id", r.region_id);
    r.population = j.value("population", r.population);
    r.tracts_per_side = j.value("tracts_per_side", r.tracts_per_side);
    r.density_per_km2 = j.value("density_per_km2", r.density_per_km2);
    r.origin.lat = j.value("origin_lat", r.origin.lat);
    r.origin.lon = j.value("origin_lon", r.origin.lon);
    r.es_median = j.value("es_median", r.es_median);
    if (j.contains("tract_pattern")) r.tract_pattern = parse_tract_pattern(j["tract_pattern"].get<std::string>());
    r.tract_sigma = j.value("tract_sigma", r.tract_sigma);
    r.within_sigma = j.value("within_sigma", r.within_sigma);
    r.n_hubs = j.value("n_hubs", r.n_hubs);
    if (j.contains("hub_placement")) r.hub_placement = parse_hub_placement(j["hub_placement"].get<std::string>());
    if (j.contains("categories")) {
      r.categories.clear();
      for (const auto& c : j["categories"])
        r.categories.push_back({c.at("name").get<std::string>(), c.at("venues").get<std::size_t>()});
    }
    r.venue_sigma = j.value("venue_sigma", r.venue_sigma);
    r.gamma = j.value("gamma", r.gamma);
    r.travel_radius_m = j.value("travel_radius_m", r.travel_radius_m);
    r.distance_scale_m = j.value("distance_scale_m", r.distance_scale_m);
    r.favorites = j.value("favorites", r.favorites);
    r.local_venues_per_tract = j.value("local_venues_per_tract", r.local_venues_per_tract);
    r.local_visit_prob = j.value("local_visit_prob", r.local_visit_prob);
    r.local_gamma = j.value("local_gamma", r.local_gamma);
    r.days = j.value("days", r.days);
    r.visits_per_day = j.value("visits_per_day", r.visits_per_day);
    r.night_ping_interval_s = j.value("night_ping_interval_s", r.night_ping_interval_s);
    r.day_ping_interval_s = j.value("day_ping_interval_s", r.day_ping_interval_s);
    r.ping_noise_m = j.value("ping_noise_m", r.ping_noise_m);
    r.start_time = j.value("start_time", r.start_time);
    r.seed = j.value("seed", r.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad recipe: ") + e.what());
  }
  r.validate();
  return r;
}

namespace {

constexpr double kSlotM = 40.0;
constexpr double kVenueHalfM = 15.0;

Ring rect_ring(const LocalProjection& proj, double x0, double y0, double x1, double y1) {
  const auto sw = proj.inverse(x0, y0), se = proj.inverse(x1, y0);
  const auto ne = proj.inverse(x1, y1), nw = proj.inverse(x0, y1);
  return {{sw.lon, sw.lat}, {se.lon, se.lat}, {ne.lon, ne.lat}, {nw.lon, nw.lat}, {sw.lon, sw.lat}};
}

std::string padded(const std::string& prefix, std::size_t k, int width) {
  std::string num = std::to_string(k);
  if (static_cast<int>(num.size()) < width) num.insert(0, static_cast<std::size_t>(width) - num.size(), '0');
  return prefix + num;
}

int digits_for(std::size_t n) { return std::max(3, static_cast<int>(std::to_string(n).size())); }

struct Point {
  double x, y;
};

}  // namespace

City build_city(const CityRecipe& recipe) {
  recipe.validate();
  City city;
  city.recipe = recipe;
  Rng tract_rng(derive_seed(recipe.seed, "tracts")), hub_rng(derive_seed(recipe.seed, "hubs"));
  Rng venue_rng(derive_seed(recipe.seed, "venues")), person_rng(derive_seed(recipe.seed, "persons"));
  const double side = recipe.side_m();
  const std::size_t tps = recipe.tracts_per_side;
  const double ts = side / static_cast<double>(tps);
  // local frame has its origin at the region centre; positions below are
  // measured from the south-west corner
  const LocalProjection proj(recipe.origin);
  auto to_ll = [&](double x, double y) { return proj.inverse(x - side / 2, y - side / 2); };
  auto rect = [&](double x0, double y0, double x1, double y1) {
    return rect_ring(proj, x0 - side / 2, y0 - side / 2, x1 - side / 2, y1 - side / 2);
  };

  std::vector<Feature> features;
  city.region_ring = rect(0, 0, side, side);
  {
    Feature f;
    f.id = recipe.region_id;
    f.category = "region";
    f.coords = city.region_ring;
    features.push_back(std::move(f));
  }

  const std::size_t n_tracts = recipe.n_tracts();
  const int tdig = digits_for(n_tracts);
  for (std::size_t r = 0; r < tps; ++r) {
    for (std::size_t c = 0; c < tps; ++c) {
      double mean_es;
      if (recipe.tract_pattern == TractPattern::checkerboard)
        mean_es = recipe.es_median * std::exp(((r + c) % 2 == 0 ? 1.0 : -1.0) * recipe.tract_sigma);
      else
        mean_es = recipe.es_median * std::exp(recipe.tract_sigma * standard_normal(tract_rng));
      city.tract_mean_es.push_back(mean_es);
      const std::size_t k = r * tps + c;
      city.tract_ids.push_back(padded("tract_", k, tdig));
      Feature f;
      f.id = city.tract_ids.back();
      f.category = "tract";
      f.parent_id = recipe.region_id;
      f.coords = rect(static_cast<double>(c) * ts, static_cast<double>(r) * ts, static_cast<double>(c + 1) * ts,
                      static_cast<double>(r + 1) * ts);
      f.attrs["tract_income"] = 36.0 * mean_es;
      features.push_back(std::move(f));
    }
  }
  auto tract_origin = [&](std::size_t k) {
    return Point{static_cast<double>(k % tps) * ts, static_cast<double>(k / tps) * ts};
  };

  // roads along interior tract boundaries
  for (std::size_t k = 1; k < tps; ++k) {
    const double at = static_cast<double>(k) * ts;
    Feature v;
    v.id = padded("road_v", k, 3);
    v.kind = FeatureKind::polyline;
    v.category = "road";
    const auto v0 = to_ll(at, 0), v1 = to_ll(at, side);
    v.coords = {{v0.lon, v0.lat}, {v1.lon, v1.lat}};
    features.push_back(std::move(v));
    Feature h;
    h.id = padded("road_h", k, 3);
    h.kind = FeatureKind::polyline;
    h.category = "road";
    const auto h0 = to_ll(0, at), h1 = to_ll(side, at);
    h.coords = {{h0.lon, h0.lat}, {h1.lon, h1.lat}};
    features.push_back(std::move(h));
  }

  // hubs
  std::size_t total_venues = 0;
  for (const auto& c : recipe.categories) total_venues += c.venues;
  const std::size_t n_hubs = total_venues == 0 ? 0 : (recipe.n_hubs > 0 ? recipe.n_hubs : n_tracts);
  std::vector<Point> hub_pts;
  if (recipe.hub_placement == HubPlacement::segregating) {
    for (std::size_t h = 0; h < n_hubs; ++h) {
      const auto o = tract_origin(h % n_tracts);
      Point p{o.x + ts / 2, o.y + ts / 2};
      if (h >= n_tracts) {
        p.x += uniform(hub_rng, -ts / 4, ts / 4);
        p.y += uniform(hub_rng, -ts / 4, ts / 4);
      }
      hub_pts.push_back(p);
    }
  } else if (recipe.hub_placement == HubPlacement::bridging) {
    std::vector<Point> cand;
    for (std::size_t r = 0; r < tps; ++r) {
      for (std::size_t c = 0; c < tps; ++c) {
        const double cx = (static_cast<double>(c) + 0.5) * ts, cy = (static_cast<double>(r) + 0.5) * ts;
        if (c + 1 < tps) cand.push_back({static_cast<double>(c + 1) * ts, cy});
        if (r + 1 < tps) cand.push_back({cx, static_cast<double>(r + 1) * ts});
      }
    }
    shuffle(cand.begin(), cand.end(), hub_rng);
    for (std::size_t h = 0; h < n_hubs; ++h) {
      Point p = cand[h % cand.size()];
      if (h >= cand.size()) {
        p.x += uniform(hub_rng, -ts / 8, ts / 8);
        p.y += uniform(hub_rng, -ts / 8, ts / 8);
      }
      hub_pts.push_back(p);
    }
  } else {
    for (std::size_t h = 0; h < n_hubs; ++h)
      hub_pts.push_back({uniform(hub_rng, 0.1 * side, 0.9 * side), uniform(hub_rng, 0.1 * side, 0.9 * side)});
  }

  // venues, assigned to hubs round-robin in a shuffled order
  std::vector<std::size_t> venue_hub;
  std::vector<std::string> venue_cat;
  for (const auto& c : recipe.categories)
    for (std::size_t k = 0; k < c.venues; ++k) venue_cat.push_back(c.name);
  std::vector<std::size_t> order(venue_cat.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle(order.begin(), order.end(), venue_rng);
  venue_hub.assign(venue_cat.size(), 0);
  std::vector<std::size_t> per_hub(n_hubs, 0);
  for (std::size_t k = 0; k < order.size(); ++k) {
    venue_hub[order[k]] = k % n_hubs;
    ++per_hub[k % n_hubs];
  }
  const int hdig = digits_for(n_hubs);
  std::vector<std::size_t> hub_slots(n_hubs), slot_used(n_hubs, 0);
  for (std::size_t h = 0; h < n_hubs; ++h) {
    hub_slots[h] = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(std::max<std::size_t>(per_hub[h], 1)))));
    const double half = static_cast<double>(hub_slots[h]) * kSlotM / 2 + 10.0;
    const auto& p = hub_pts[h];
    Feature f;
    f.id = padded("hub_", h, hdig);
    f.category = "hub";
    f.coords = rect(p.x - half, p.y - half, p.x + half, p.y + half);
    features.push_back(std::move(f));
    city.hubs.push_back({padded("hub_", h, hdig), to_ll(p.x, p.y)});
  }
  std::map<std::string, std::size_t> cat_counter;
  for (std::size_t v = 0; v < venue_cat.size(); ++v) {
    const std::size_t h = venue_hub[v];
    const std::size_t slot = slot_used[h]++;
    const double base = -static_cast<double>(hub_slots[h]) * kSlotM / 2;
    const double x = hub_pts[h].x + base + (static_cast<double>(slot % hub_slots[h]) + 0.5) * kSlotM;
    const double y = hub_pts[h].y + base + (static_cast<double>(slot / hub_slots[h]) + 0.5) * kSlotM;
    SynthVenue sv;
    sv.id = padded(venue_cat[v] + "_", cat_counter[venue_cat[v]]++, 3);
    sv.category = venue_cat[v];
    sv.hub = static_cast<std::ptrdiff_t>(h);
    sv.at = to_ll(x, y);
    sv.half_side_m = kVenueHalfM;
    sv.es = recipe.es_median * std::exp(recipe.venue_sigma * standard_normal(venue_rng));
    Feature f;
    f.id = sv.id;
    f.category = "poi:" + sv.category;
    f.parent_id = city.hubs[h].id;
    f.coords = rect(x - kVenueHalfM, y - kVenueHalfM, x + kVenueHalfM, y + kVenueHalfM);
    features.push_back(std::move(f));
    city.venues.push_back(std::move(sv));
  }
  for (std::size_t t = 0; t < n_tracts && recipe.local_venues_per_tract > 0; ++t) {
    const auto o = tract_origin(t);
    for (std::size_t k = 0; k < recipe.local_venues_per_tract; ++k) {
      Point p{};
      for (int attempt = 0; attempt < 1000; ++attempt) {
        p = {uniform(venue_rng, o.x + 30, o.x + ts - 30), uniform(venue_rng, o.y + 30, o.y + ts - 30)};
        bool clear = true;
        for (std::size_t h = 0; h < n_hubs && clear; ++h) {
          const double half = static_cast<double>(hub_slots[h]) * kSlotM / 2 + 10.0 + kVenueHalfM + 5.0;
          clear = std::abs(p.x - hub_pts[h].x) > half || std::abs(p.y - hub_pts[h].y) > half;
        }
        if (clear) break;
      }
      SynthVenue sv;
      sv.id = padded("local_" + std::to_string(t) + "_", k, 2);
      sv.category = "local";
      sv.tract = t;
      sv.at = to_ll(p.x, p.y);
      sv.es = city.tract_mean_es[t] * std::exp(recipe.within_sigma * standard_normal(venue_rng));
      Feature f;
      f.id = sv.id;
      f.category = "poi:local";
      f.coords = rect(p.x - kVenueHalfM, p.y - kVenueHalfM, p.x + kVenueHalfM, p.y + kVenueHalfM);
      features.push_back(std::move(f));
      city.venues.push_back(std::move(sv));
    }
  }

  // persons: spread evenly over tracts, homes uniform inside the tract
  const int pdig = std::max(6, digits_for(recipe.population));
  city.persons.resize(recipe.population);
  for (std::size_t p = 0; p < recipe.population; ++p) {
    auto& person = city.persons[p];
    person.id = padded("p", p, pdig);
    person.tract = p % n_tracts;
    const auto o = tract_origin(person.tract);
    const double x = uniform(person_rng, o.x + 1.0, o.x + ts - 1.0);
    const double y = uniform(person_rng, o.y + 1.0, o.y + ts - 1.0);
    person.home = to_ll(x, y);
    const double es = city.tract_mean_es[person.tract] * std::exp(recipe.within_sigma * standard_normal(person_rng));
    person.es = std::clamp(std::round(es), 100.0, 19999.0);
  }

  city.layer = GeoLayer(std::move(features));

  // stays
  std::vector<std::vector<std::size_t>> by_cat(recipe.categories.size());
  for (std::size_t v = 0; v < city.venues.size(); ++v) {
    for (std::size_t c = 0; c < recipe.categories.size(); ++c)
      if (city.venues[v].category == recipe.categories[c].name) by_cat[c].push_back(v);
  }
  std::vector<std::size_t> nonempty_cats;
  for (std::size_t c = 0; c < by_cat.size(); ++c)
    if (!by_cat[c].empty()) nonempty_cats.push_back(c);
  std::vector<std::vector<std::size_t>> local_by_tract(n_tracts);
  for (std::size_t v = 0; v < city.venues.size(); ++v)
    if (city.venues[v].hub < 0) local_by_tract[city.venues[v].tract].push_back(v);

  std::vector<std::vector<Stay>> per_person(recipe.population);
  parallel_for(recipe.population, [&](std::size_t p) {
    Rng prng(derive_seed(recipe.seed, "stays", p));
    const auto& person = city.persons[p];
    const double log_es = std::log(person.es);
    // per-category choice weights over hub venues
    std::vector<std::vector<double>> cum(by_cat.size());
    for (const auto c : nonempty_cats) {
      const auto& vs = by_cat[c];
      std::vector<double> w(vs.size(), 0.0);
      double nearest = std::numeric_limits<double>::infinity();
      std::size_t nearest_k = 0;
      bool any = false;
      for (std::size_t k = 0; k < vs.size(); ++k) {
        const auto& v = city.venues[vs[k]];
        const double d = haversine_m(person.home, v.at);
        if (d < nearest) {
          nearest = d;
          nearest_k = k;
        }
        if (d > recipe.travel_radius_m) continue;
        double wk = std::exp(-recipe.gamma * std::abs(log_es - std::log(v.es)));
        if (recipe.distance_scale_m > 0) wk *= std::exp(-d / recipe.distance_scale_m);
        w[k] = wk;
        any = any || wk > 0;
      }
      if (!any) w[nearest_k] = 1.0;
      if (recipe.favorites > 0) {
        // draw the habitual set without replacement, then visit it uniformly
        std::vector<double> fav(w.size(), 0.0);
        for (std::size_t f = 0; f < recipe.favorites; ++f) {
          double total = 0.0;
          for (std::size_t k = 0; k < w.size(); ++k)
            if (fav[k] == 0.0) total += w[k];
          if (!(total > 0)) break;
          double target = uniform01(prng) * total;
          std::size_t pick = 0;
          for (std::size_t k = 0; k < w.size(); ++k) {
            if (fav[k] != 0.0 || w[k] <= 0.0) continue;
            pick = k;
            target -= w[k];
            if (target < 0) break;
          }
          fav[pick] = 1.0;
        }
        w = std::move(fav);
      }
      std::partial_sum(w.begin(), w.end(), w.begin());
      cum[c] = std::move(w);
    }
    std::vector<double> local_cum;
    for (const auto v : local_by_tract[person.tract])
      local_cum.push_back((local_cum.empty() ? 0.0 : local_cum.back()) +
                          std::exp(-recipe.local_gamma * std::abs(log_es - std::log(city.venues[v].es))));
    auto pick = [&](const std::vector<double>& c) {
      const double target = uniform01(prng) * c.back();
      return static_cast<std::size_t>(std::upper_bound(c.begin(), c.end(), target) - c.begin());
    };

    auto& stays = per_person[p];
    const auto pid = static_cast<std::uint32_t>(p);
    const std::int64_t t0 = recipe.start_time;
    auto jitter = [&](double max_s) { return static_cast<std::int64_t>(std::llround(uniform(prng, 0.0, max_s))); };
    stays.push_back({pid, -1, t0, t0 + 9 * 3600 + jitter(600)});
    for (int d = 0; d < recipe.days; ++d) {
      const std::int64_t day = t0 + static_cast<std::int64_t>(d) * 86400;
      const int v = recipe.visits_per_day;
      const bool can_visit = !nonempty_cats.empty() || !local_cum.empty();
      if (v > 0 && can_visit) {
        const double window_start = 9 * 3600 + 15 * 60, window = 8.5 * 3600;
        const double slot = window / v;
        for (int s = 0; s < v; ++s) {
          const double dur = uniform(prng, 45 * 60, std::min(120.0 * 60, slot - 300));
          const double start = window_start + s * slot + uniform(prng, 0.0, slot - dur);
          std::int32_t venue;
          const bool local = !local_cum.empty() && (nonempty_cats.empty() || uniform01(prng) < recipe.local_visit_prob);
          if (local) {
            venue = static_cast<std::int32_t>(local_by_tract[person.tract][pick(local_cum)]);
          } else {
            const auto c = nonempty_cats[uniform_index(prng, nonempty_cats.size())];
            venue = static_cast<std::int32_t>(by_cat[c][std::min(pick(cum[c]), by_cat[c].size() - 1)]);
          }
          stays.push_back({pid, venue, day + static_cast<std::int64_t>(start),
                           day + static_cast<std::int64_t>(start + dur)});
        }
      }
      stays.push_back({pid, -1, day + 17 * 3600 + 50 * 60 + jitter(600), day + 86400 + 9 * 3600 + jitter(600)});
    }
  });
  std::size_t total = 0;
  for (const auto& s : per_person) total += s.size();
  city.stays.reserve(total);
  for (auto& s : per_person) city.stays.insert(city.stays.end(), s.begin(), s.end());
  return city;
}

namespace {

void append_fixed(std::string& buf, double v, int precision) {
  char tmp[64];
  const auto res = std::to_chars(tmp, tmp + sizeof(tmp), v, std::chars_format::fixed, precision);
  buf.append(tmp, res.ptr);
}

}  // namespace

void write_city_pings(const City& city, std::ostream& out) {
  const auto& r = city.recipe;
  out << "person_id,t,lat,lon,accuracy_m\n";
  std::string buf;
  std::size_t s = 0;
  for (std::size_t p = 0; p < city.persons.size(); ++p) {
    Rng rng(derive_seed(r.seed, "pings", p));
    const auto& person = city.persons[p];
    buf.clear();
    for (; s < city.stays.size() && city.stays[s].person == p; ++s) {
      const auto& stay = city.stays[s];
      const bool home = stay.venue < 0;
      const double interval = home ? r.night_ping_interval_s : r.day_ping_interval_s;
      const LatLon centre = home ? person.home : city.venues[static_cast<std::size_t>(stay.venue)].at;
      const LocalProjection frame(centre);
      double t = static_cast<double>(stay.start) + uniform(rng, 0.0, interval);
      while (t < static_cast<double>(stay.end)) {
        const auto ll = frame.inverse(normal(rng, 0.0, r.ping_noise_m), normal(rng, 0.0, r.ping_noise_m));
        buf += person.id;
        buf += ',';
        buf += std::to_string(static_cast<std::int64_t>(t));
        buf += ',';
        append_fixed(buf, ll.lat, 7);
        buf += ',';
        append_fixed(buf, ll.lon, 7);
        buf += ',';
        append_fixed(buf, uniform(rng, 5.0, 30.0), 1);
        buf += '\n';
        t += interval * uniform(rng, 0.8, 1.2);
      }
    }
    out << buf;
  }
}

std::vector<Property> city_properties(const City& city) {
  std::vector<Property> out;
  out.reserve(city.persons.size());
  for (const auto& p : city.persons) out.push_back({p.home.lat, p.home.lon, p.es, "residential"});
  return out;
}

nlohmann::ordered_json ground_truth(const City& city) {
  nlohmann::ordered_json j;
  j["region_id"] = city.recipe.region_id;
  j["hub_placement"] = to_string(city.recipe.hub_placement);
  j["recipe"] = to_json(city.recipe);
  auto tracts = nlohmann::ordered_json::array();
  for (std::size_t t = 0; t < city.tract_ids.size(); ++t)
    tracts.push_back({{"id", city.tract_ids[t]}, {"mean_es", city.tract_mean_es[t]}});
  j["tracts"] = tracts;
  auto venues = nlohmann::ordered_json::array();
  for (const auto& v : city.venues)
    venues.push_back({{"id", v.id}, {"category", v.category}, {"es", v.es}, {"lat", v.at.lat}, {"lon", v.at.lon}});
  j["venues"] = venues;
  auto persons = nlohmann::ordered_json::array();
  for (const auto& p : city.persons)
    persons.push_back({{"id", p.id},
                       {"home_lat", p.home.lat},
                       {"home_lon", p.home.lon},
                       {"tract", city.tract_ids[p.tract]},
                       {"es", p.es}});
  j["persons"] = persons;
  return j;
}

std::vector<Person> city_persons(const City& city) {
  std::vector<Person> out;
  out.reserve(city.persons.size());
  for (const auto& p : city.persons) {
    Person q;
    q.person_id = p.id;
    q.home_lat = p.home.lat;
    q.home_lon = p.home.lon;
    q.home_tract_id = city.tract_ids[p.tract];
    q.region_id = city.recipe.region_id;
    q.es_raw = p.es;
    q.tract_income = 36.0 * city.tract_mean_es[p.tract];
    out.push_back(std::move(q));
  }
  compute_es_variants(out);
  return out;
}

GeneratedFiles generate(const CityRecipe& recipe, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const City city = build_city(recipe);
  GeneratedFiles files{dir / "pings.csv", dir / "properties.csv", dir / "layers.jsonl", dir / "truth.json",
                       dir / "recipe.json"};
  auto open = [](const std::filesystem::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw DataError("cannot write " + p.string());
    return f;
  };
  {
    auto f = open(files.pings);
    write_city_pings(city, f);
  }
  {
    auto f = open(files.properties);
    write_properties(city_properties(city), f);
  }
  {
    auto f = open(files.layers);
    city.layer.write(f);
  }
  {
    auto f = open(files.truth);
    f << ground_truth(city).dump(1) << '\n';
  }
  {
    auto f = open(files.recipe);
    f << to_json(recipe).dump(2) << '\n';
  }
  return files;
}

AnnotatedSet stay_interactions(const City& city, double dist_m, std::size_t threads) {
  std::vector<Interaction> edges;
  // venue co-presence
  std::vector<std::vector<std::size_t>> at_venue(city.venues.size());
  std::vector<std::vector<std::size_t>> at_home(city.persons.size());
  for (std::size_t s = 0; s < city.stays.size(); ++s) {
    const auto& st = city.stays[s];
    if (st.venue >= 0) at_venue[static_cast<std::size_t>(st.venue)].push_back(s);
    else at_home[st.person].push_back(s);
  }
  for (std::size_t v = 0; v < at_venue.size(); ++v) {
    auto& list = at_venue[v];
    std::sort(list.begin(), list.end(), [&](std::size_t a, std::size_t b) {
      return city.stays[a].start != city.stays[b].start ? city.stays[a].start < city.stays[b].start : a < b;
    });
    const auto& at = city.venues[v].at;
    for (std::size_t a = 0; a < list.size(); ++a) {
      const auto& sa = city.stays[list[a]];
      for (std::size_t b = a + 1; b < list.size(); ++b) {
        const auto& sb = city.stays[list[b]];
        if (sb.start >= sa.end) break;
        if (sa.person == sb.person) continue;
        edges.push_back({std::min(sa.person, sb.person), std::max(sa.person, sb.person), sb.start, at.lat, at.lon, 0});
      }
    }
  }
  // home neighbours
  std::vector<std::array<double, 3>> xyz;
  xyz.reserve(city.persons.size());
  for (const auto& p : city.persons) xyz.push_back(to_ecef(p.home.lat, p.home.lon));
  const KdTree<3> tree(xyz);
  for (std::uint32_t p = 0; p < city.persons.size(); ++p) {
    tree.radius_search(xyz[p], dist_m, [&](std::uint32_t q, double) {
      if (q <= p) return;
      const auto& hp = city.persons[p].home;
      const auto& hq = city.persons[q].home;
      if (!(haversine_m(hp, hq) < dist_m)) return;
      const auto& sp = at_home[p];
      const auto& sq = at_home[q];
      std::size_t a = 0, b = 0;
      while (a < sp.size() && b < sq.size()) {
        const auto& x = city.stays[sp[a]];
        const auto& y = city.stays[sq[b]];
        const auto start = std::max(x.start, y.start);
        const auto end = std::min(x.end, y.end);
        if (start < end) edges.push_back({p, q, start, 0.5 * (hp.lat + hq.lat), 0.5 * (hp.lon + hq.lon), 0});
        if (x.end < y.end) ++a;
        else ++b;
      }
    });
  }
  sort_canonical(edges);
  std::vector<std::string> ids;
  ids.reserve(city.persons.size());
  for (const auto& p : city.persons) ids.push_back(p.id);
  const auto persons = city_persons(city);
  const auto lookup = person_lookup(ids, persons);
  AnnotateConfig cfg;
  cfg.threads = threads;
  return annotate_all(std::move(edges), std::move(ids), lookup, city.layer, cfg);
}

SweepRow summarize_city(const City& city, std::size_t threads) {
  SweepRow row;
  row.region_id = city.recipe.region_id;
  row.population = city.persons.size();
  for (const auto& v : city.venues)
    if (v.hub >= 0) ++row.venue_count;
  const auto set = stay_interactions(city, 50.0, threads);
  const auto persons = city_persons(city);
  std::vector<double> es, es_raw;
  std::vector<std::string> tracts;
  std::vector<LatLon> homes;
  for (const auto& p : persons) {
    es.push_back(p.es);
    es_raw.push_back(p.es_raw);
    tracts.push_back(p.home_tract_id);
    homes.push_back(p.home());
  }
  const EdgeFilter all = [](const Interaction&, const Annotation&, const LabelPool&) { return true; };
  const EdgeFilter at_venue = [](const Interaction&, const Annotation& a, const LabelPool&) {
    return a.poi != LabelPool::kNone;
  };
  row.overall_is = is_decomposed(set, es, {}, all, Weighting::dedup_pairs).rho;
  try {
    row.venue_is = is_decomposed(set, es, {}, at_venue, Weighting::dedup_pairs).rho;
  } catch (const DataError&) {
    row.venue_is = std::numeric_limits<double>::quiet_NaN();
  }
  if (!city.recipe.categories.empty())
    row.cov = venue_stats(set, es_raw, {}, city.layer, city.recipe.categories.front().name).cov;
  if (!city.hubs.empty()) row.bi = bridging_index(homes, es_raw, city.hubs).bi;
  row.nsi = nsi(es, tracts);
  return row;
}

std::vector<std::size_t> log_spaced(std::size_t lo, std::size_t hi, std::size_t count) {
  std::vector<std::size_t> out;
  if (count == 0) return out;
  if (count == 1) return {lo};
  const double a = std::log(static_cast<double>(lo)), b = std::log(static_cast<double>(hi));
  for (std::size_t k = 0; k < count; ++k)
    out.push_back(static_cast<std::size_t>(std::llround(std::exp(a + (b - a) * static_cast<double>(k) /
                                                                        static_cast<double>(count - 1)))));
  return out;
}

std::vector<CityRecipe> population_sweep_recipes(const CityRecipe& base, const std::vector<std::size_t>& populations,
                                                 const SweepScaling& scaling, std::uint64_t seed) {
  std::vector<CityRecipe> out;
  for (std::size_t k = 0; k < populations.size(); ++k) {
    CityRecipe r = base;
    r.population = populations[k];
    r.region_id = padded("region_", k, 2);
    r.seed = derive_seed(seed, "sweep", k);
    r.tracts_per_side = std::max<std::size_t>(
        2, static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(r.population) / scaling.persons_per_tract))));
    const double scale = static_cast<double>(r.population) / static_cast<double>(scaling.reference_population);
    for (auto& c : r.categories)
      c.venues = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::llround(static_cast<double>(c.venues) * std::pow(scale, scaling.venue_exponent))));
    r.venue_sigma = std::max(0.0, base.venue_sigma + scaling.sigma_slope * std::log(scale));
    r.n_hubs = 0;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<SweepRow> sweep(const std::vector<CityRecipe>& recipes, std::size_t threads) {
  std::vector<SweepRow> rows(recipes.size());
  parallel_for(
      recipes.size(), [&](std::size_t k) { rows[k] = summarize_city(build_city(recipes[k]), 1); }, threads);
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  out << "region_id,population,venue_count,cov,venue_is,overall_is,bi,nsi\n";
  for (const auto& r : rows)
    out << r.region_id << ',' << r.population << ',' << r.venue_count << ',' << csv::format_double(r.cov) << ','
        << csv::format_double(r.venue_is) << ',' << csv::format_double(r.overall_is) << ','
        << csv::format_double(r.bi) << ',' << csv::format_double(r.nsi) << '\n';
}

}  // namespace interseg
