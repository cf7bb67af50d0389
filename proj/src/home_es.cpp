#include "interseg/home_es.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <unordered_map>

#include "interseg/csv.hpp"
#include "interseg/error.hpp"
#include "interseg/layers.hpp"
#include "interseg/parallel.hpp"
#include "interseg/stats.hpp"

namespace interseg {

std::vector<HourlyPosition> interpolate_hourly(std::span<const Fix> pings, double utc_offset_hours,
                                               double max_gap_h) {
  std::vector<HourlyPosition> out;
  if (pings.size() < 2) return out;
  const std::int64_t max_gap_s = static_cast<std::int64_t>(std::llround(max_gap_h * 3600.0));
  auto local = [&](std::size_t k) { return to_local_seconds(pings[k].t, utc_offset_hours); };
  const std::int64_t first = local(0);
  const std::int64_t last = local(pings.size() - 1);
  std::int64_t h = floor_div(first, 3600);
  if (h * 3600 < first) ++h;
  std::size_t k = 0;
  for (; h * 3600 <= last; ++h) {
    const std::int64_t at = h * 3600;
    while (k + 1 < pings.size() && local(k + 1) <= at) ++k;
    // local(k) <= at; local(k + 1) > at unless k is the final ping
    if (local(k) == at) {
      out.push_back({h, pings[k].lat, pings[k].lon});
      continue;
    }
    if (k + 1 >= pings.size()) break;
    const std::int64_t t0 = local(k), t1 = local(k + 1);
    if (t1 - t0 > max_gap_s) continue;
    const double w = static_cast<double>(at - t0) / static_cast<double>(t1 - t0);
    out.push_back({h, pings[k].lat + w * (pings[k + 1].lat - pings[k].lat),
                   pings[k].lon + w * (pings[k + 1].lon - pings[k].lon)});
  }
  return out;
}

bool is_night_hour(int hour, int night_start_hour, int night_end_hour) {
  if (night_start_hour > night_end_hour) return hour >= night_start_hour || hour < night_end_hour;
  return hour >= night_start_hour && hour < night_end_hour;
}

std::int64_t night_of(std::int64_t local_hour, int night_end_hour) {
  return floor_div(local_hour - night_end_hour, 24);
}

std::optional<HomeEstimate> infer_home(std::span<const HourlyPosition> hourly, const HomeConfig& cfg) {
  std::vector<HourlyPosition> stationary;
  for (std::size_t i = 0; i + 1 < hourly.size(); ++i) {
    const auto& cur = hourly[i];
    const auto& nxt = hourly[i + 1];
    if (nxt.local_hour != cur.local_hour + 1) continue;
    if (!is_night_hour(hour_of_day(cur.local_hour), cfg.night_start_hour, cfg.night_end_hour)) continue;
    if (haversine_m(cur.lat, cur.lon, nxt.lat, nxt.lon) < cfg.move_thresh_m) stationary.push_back(cur);
  }
  if (stationary.empty()) return std::nullopt;

  std::set<std::int64_t> nights;
  for (const auto& s : stationary) nights.insert(night_of(s.local_hour, cfg.night_end_hour));
  if (static_cast<int>(nights.size()) < cfg.min_nights) return std::nullopt;

  // medoid: observation minimising the summed distance to all others
  const std::size_t m = stationary.size();
  std::vector<double> sums(m, 0.0);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) {
      const double d = haversine_m(stationary[a].lat, stationary[a].lon, stationary[b].lat, stationary[b].lon);
      sums[a] += d;
      sums[b] += d;
    }
  }
  const std::size_t medoid = static_cast<std::size_t>(std::min_element(sums.begin(), sums.end()) - sums.begin());
  const auto& c = stationary[medoid];

  std::vector<double> lats, lons;
  for (const auto& s : stationary) {
    if (haversine_m(s.lat, s.lon, c.lat, c.lon) <= cfg.radius_m) {
      lats.push_back(s.lat);
      lons.push_back(s.lon);
    }
  }
  const double frac = static_cast<double>(lats.size()) / static_cast<double>(m);
  if (frac < cfg.min_frac) return std::nullopt;

  HomeEstimate est;
  est.home = {median(lats), median(lons)};
  est.nights = static_cast<int>(nights.size());
  est.stationary = m;
  est.in_radius = lats.size();
  est.frac_in_radius = frac;
  return est;
}

std::optional<HomeEstimate> infer_home_from_pings(std::span<const Fix> pings, const HomeConfig& cfg) {
  const auto hourly = interpolate_hourly(pings, cfg.utc_offset_hours, cfg.max_gap_h);
  return infer_home(hourly, cfg);
}

std::vector<std::optional<HomeEstimate>> infer_homes(const PingStore& store, const HomeConfig& cfg,
                                                     std::size_t threads) {
  std::vector<std::optional<HomeEstimate>> out(store.num_persons());
  parallel_for(
      store.num_persons(),
      [&](std::size_t p) { out[p] = infer_home_from_pings(store.pings(static_cast<PersonIndex>(p)), cfg); },
      threads);
  return out;
}

std::vector<Property> load_properties(std::istream& in, std::uint64_t* rejected) {
  std::vector<Property> out;
  std::uint64_t bad = 0;
  std::string line;
  if (!csv::next_data_line(in, line)) return out;
  const csv::Header header(line);
  const auto c_lat = header.require("lat");
  const auto c_lon = header.require("lon");
  const auto c_rent = header.require("rent");
  const auto c_kind = header.find("kind");
  std::vector<std::string_view> cols;
  while (csv::next_data_line(in, line)) {
    if (line.empty()) continue;
    csv::split(line, cols);
    if (cols.size() <= std::max({c_lat, c_lon, c_rent})) {
      ++bad;
      continue;
    }
    const auto lat = csv::parse_double(cols[c_lat]);
    const auto lon = csv::parse_double(cols[c_lon]);
    const auto rent = csv::parse_double(cols[c_rent]);
    if (!lat || !lon || !rent || *rent <= 0 || std::abs(*lat) > 90 || std::abs(*lon) > 180) {
      ++bad;
      continue;
    }
    Property p{*lat, *lon, *rent};
    if (c_kind && *c_kind < cols.size() && !cols[*c_kind].empty()) p.kind = std::string(cols[*c_kind]);
    out.push_back(std::move(p));
  }
  if (rejected) *rejected = bad;
  return out;
}

void write_properties(std::span<const Property> props, std::ostream& out) {
  out << "lat,lon,rent,kind\n";
  for (const auto& p : props)
    out << csv::format_double(p.lat) << ',' << csv::format_double(p.lon) << ','
        << csv::format_double(p.rent) << ',' << p.kind << '\n';
}

namespace {

std::vector<std::array<double, 3>> ecef_points(std::span<const Property> props) {
  std::vector<std::array<double, 3>> pts;
  pts.reserve(props.size());
  for (const auto& p : props) pts.push_back(to_ecef(p.lat, p.lon));
  return pts;
}

}  // namespace

PropertyIndex::PropertyIndex(std::vector<Property> props)
    : props_(std::move(props)), tree_(ecef_points(props_)) {}

std::optional<PropertyIndex::Hit> PropertyIndex::nearest(double lat, double lon) const {
  const auto q = to_ecef(lat, lon);
  const auto idx = tree_.nearest(q);
  if (idx < 0) return std::nullopt;
  // chord order matches great-circle order; re-check exact ties by haversine
  const auto& p0 = tree_.point(static_cast<std::uint32_t>(idx));
  const double chord = std::sqrt((p0[0] - q[0]) * (p0[0] - q[0]) + (p0[1] - q[1]) * (p0[1] - q[1]) +
                                 (p0[2] - q[2]) * (p0[2] - q[2]));
  Hit best{static_cast<std::size_t>(idx), haversine_m(lat, lon, props_[idx].lat, props_[idx].lon)};
  tree_.radius_search(q, chord * (1.0 + 1e-12) + 1e-9, [&](std::uint32_t i, double) {
    const double d = haversine_m(lat, lon, props_[i].lat, props_[i].lon);
    if (d < best.distance_m || (d == best.distance_m && i < best.index)) best = {i, d};
  });
  return best;
}

std::optional<EsLink> link_es(LatLon home, const PropertyIndex& props, const LinkConfig& cfg) {
  if (props.empty()) throw ConfigError("property table is empty");
  const auto hit = props.nearest(home.lat, home.lon);
  if (!hit || hit->distance_m > cfg.max_dist_m) return std::nullopt;
  return EsLink{std::min(props.property(hit->index).rent, cfg.winsor_max), hit->index, hit->distance_m};
}

std::optional<std::string> assign_tract(LatLon home, const GeoLayer& layer) {
  const auto t = layer.tract_at(home.lat, home.lon);
  if (!t) return std::nullopt;
  return layer.feature(*t).id;
}

namespace {

std::vector<double> percentiles(std::span<const double> v) {
  auto ranks = average_ranks(v);
  const double denom = static_cast<double>(v.size()) - 1.0;
  for (auto& r : ranks) r = denom > 0 ? r / denom : 0.5;
  return ranks;
}

}  // namespace

void compute_es_variants(std::vector<Person>& persons) {
  if (persons.empty()) return;
  std::vector<double> raw;
  raw.reserve(persons.size());
  for (const auto& p : persons) raw.push_back(p.es_raw);
  const double mu = mean(raw);
  const double sd = std::sqrt(variance(raw));
  const auto pct = percentiles(raw);
  for (std::size_t i = 0; i < persons.size(); ++i) {
    persons[i].es = sd > 0 ? (raw[i] - mu) / sd : 0.0;
    persons[i].es_percentile = pct[i];
  }

  std::map<std::string, std::vector<std::size_t>> by_region, by_tract;
  for (std::size_t i = 0; i < persons.size(); ++i) {
    by_region[persons[i].region_id].push_back(i);
    by_tract[persons[i].home_tract_id].push_back(i);
  }
  for (const auto& [_, members] : by_region) {
    std::vector<double> vals;
    for (auto i : members) vals.push_back(raw[i]);
    const auto rp = percentiles(vals);
    for (std::size_t k = 0; k < members.size(); ++k) persons[members[k]].es_percentile_within_region = rp[k];
  }
  for (const auto& [_, members] : by_tract) {
    double s = 0.0;
    for (auto i : members) s += raw[i];
    const double tm = s / static_cast<double>(members.size());
    for (auto i : members) persons[i].es_tract_demeaned = members.size() == 1 ? 0.0 : raw[i] - tm;
  }
}

std::vector<Person> filter_crowded_residences(std::vector<Person> persons, std::span<const std::size_t> linked,
                                              const PropertyIndex& props, std::size_t max_others) {
  std::unordered_map<std::size_t, std::size_t> counts;
  for (auto l : linked) ++counts[l];
  std::vector<Person> out;
  for (std::size_t i = 0; i < persons.size(); ++i) {
    const auto& prop = props.property(linked[i]);
    if (prop.kind == "single_family" && counts[linked[i]] > max_others + 1) continue;
    out.push_back(std::move(persons[i]));
  }
  return out;
}

void write_persons(std::span<const Person> persons, std::ostream& out) {
  out << "person_id,home_lat,home_lon,home_tract_id,region_id,es_raw,es,es_percentile,"
         "es_percentile_within_region,es_tract_demeaned,tract_income\n";
  for (const auto& p : persons) {
    out << p.person_id << ',' << csv::format_double(p.home_lat) << ',' << csv::format_double(p.home_lon)
        << ',' << p.home_tract_id << ',' << p.region_id << ',' << csv::format_double(p.es_raw) << ','
        << csv::format_double(p.es) << ',' << csv::format_double(p.es_percentile) << ','
        << csv::format_double(p.es_percentile_within_region) << ','
        << csv::format_double(p.es_tract_demeaned) << ',';
    if (p.tract_income) out << csv::format_double(*p.tract_income);
    out << '\n';
  }
}

std::vector<Person> load_persons(std::istream& in) {
  std::vector<Person> out;
  std::string line;
  if (!csv::next_data_line(in, line)) return out;
  const csv::Header h(line);
  const auto c_id = h.require("person_id");
  const auto c_lat = h.require("home_lat");
  const auto c_lon = h.require("home_lon");
  const auto c_es_raw = h.require("es_raw");
  const auto c_tract = h.find("home_tract_id");
  const auto c_region = h.find("region_id");
  const auto c_es = h.find("es");
  const auto c_pct = h.find("es_percentile");
  const auto c_rpct = h.find("es_percentile_within_region");
  const auto c_dm = h.find("es_tract_demeaned");
  const auto c_inc = h.find("tract_income");
  std::vector<std::string_view> cols;
  auto num = [&](std::optional<std::size_t> c) -> std::optional<double> {
    if (!c || *c >= cols.size() || cols[*c].empty()) return std::nullopt;
    return csv::parse_double(cols[*c]);
  };
  auto str = [&](std::optional<std::size_t> c) {
    return (c && *c < cols.size()) ? std::string(cols[*c]) : std::string();
  };
  while (csv::next_data_line(in, line)) {
    if (line.empty()) continue;
    csv::split(line, cols);
    Person p;
    p.person_id = str(c_id);
    const auto lat = num(c_lat), lon = num(c_lon), raw = num(c_es_raw);
    if (p.person_id.empty() || !lat || !lon || !raw) throw DataError("malformed persons row: " + line);
    p.home_lat = *lat;
    p.home_lon = *lon;
    p.es_raw = *raw;
    p.home_tract_id = str(c_tract);
    p.region_id = str(c_region);
    p.es = num(c_es).value_or(0.0);
    p.es_percentile = num(c_pct).value_or(0.0);
    p.es_percentile_within_region = num(c_rpct).value_or(0.0);
    p.es_tract_demeaned = num(c_dm).value_or(0.0);
    p.tract_income = num(c_inc);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace interseg
