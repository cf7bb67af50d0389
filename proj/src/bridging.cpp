#include "interseg/bridging.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "interseg/error.hpp"
#include "interseg/layers.hpp"
#include "interseg/parallel.hpp"
#include "interseg/random.hpp"
#include "interseg/stats.hpp"

namespace interseg {

double gini(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("gini of an empty set");
  std::vector<double> v(values.begin(), values.end());
  for (const double x : v)
    if (!(x > 0)) throw std::invalid_argument("gini needs positive values");
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double weighted = 0.0, total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    weighted += (2.0 * static_cast<double>(i + 1) - n - 1.0) * v[i];
    total += v[i];
  }
  return weighted / (n * total);
}

DiversityMeasure parse_measure(const std::string& s) {
  if (s == "gini") return DiversityMeasure::gini;
  if (s == "variance") return DiversityMeasure::variance;
  throw ConfigError("unknown diversity measure '" + s + "'");
}

std::string to_string(DiversityMeasure m) { return m == DiversityMeasure::gini ? "gini" : "variance"; }

double diversity(std::span<const double> values, DiversityMeasure m) {
  if (values.size() == 1) return 0.0;
  return m == DiversityMeasure::gini ? gini(values) : variance(values);
}

std::vector<std::size_t> nearest_hub(std::span<const LatLon> homes, std::span<const Hub> hubs) {
  std::vector<std::size_t> order(hubs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return hubs[a].id < hubs[b].id; });
  std::vector<std::array<double, 3>> xyz(hubs.size());
  for (std::size_t h = 0; h < hubs.size(); ++h) xyz[h] = to_ecef(hubs[order[h]].at.lat, hubs[order[h]].at.lon);
  std::vector<std::size_t> out(homes.size());
  for (std::size_t p = 0; p < homes.size(); ++p) {
    const auto q = to_ecef(homes[p].lat, homes[p].lon);
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t h = 0; h < xyz.size(); ++h) {
      const double dx = q[0] - xyz[h][0], dy = q[1] - xyz[h][1], dz = q[2] - xyz[h][2];
      const double d2 = dx * dx + dy * dy + dz * dz;
      if (d2 < best) {
        best = d2;
        arg = h;
      }
    }
    out[p] = order[arg];
  }
  return out;
}

BridgingResult bridging_index(std::span<const LatLon> homes, std::span<const double> es_raw,
                              std::span<const Hub> hubs, DiversityMeasure measure) {
  if (hubs.empty()) throw DataError("bridging index needs at least one hub");
  if (homes.size() != es_raw.size()) throw std::invalid_argument("homes/es size mismatch");
  if (homes.size() < 2) throw DataError("bridging index needs at least 2 persons");
  BridgingResult r;
  r.measure = measure;
  try {
    r.overall = diversity(es_raw, measure);
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("bridging index: ") + e.what());
  }
  if (!(r.overall > 0)) throw DataError("diversity undefined: all ES values are equal");
  r.assignment = nearest_hub(homes, hubs);
  std::vector<std::vector<double>> members(hubs.size());
  for (std::size_t p = 0; p < homes.size(); ++p) members[r.assignment[p]].push_back(es_raw[p]);
  double within = 0.0;
  for (std::size_t h = 0; h < hubs.size(); ++h) {
    HubCluster c;
    c.hub_id = hubs[h].id;
    c.size = members[h].size();
    if (c.size > 0) c.diversity = diversity(members[h], measure);
    within += static_cast<double>(c.size) * c.diversity;
    r.clusters.push_back(std::move(c));
  }
  r.bi = within / (static_cast<double>(homes.size()) * r.overall);
  return r;
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile of an empty set");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

AblationResult ablate_random_hubs(std::span<const LatLon> homes, std::span<const double> es_raw, std::size_t k,
                                  const Ring& region, std::size_t trials, std::uint64_t seed,
                                  DiversityMeasure measure, std::size_t threads) {
  if (k == 0) throw DataError("ablation needs at least one hub");
  if (trials == 0) throw ConfigError("ablation needs at least one trial");
  if (!ring_is_simple_closed(region) || !(ring_area_m2(region) > 0))
    throw DataError("degenerate region polygon");
  const BBox box = bbox_of(region);
  AblationResult out;
  out.values.resize(trials);
  parallel_for(
      trials,
      [&](std::size_t t) {
        Rng rng(derive_seed(seed, "ablate", t));
        std::vector<Hub> hubs(k);
        for (std::size_t h = 0; h < k; ++h) {
          std::size_t attempts = 0;
          for (;;) {
            const double lon = uniform(rng, box.min_lon, box.max_lon);
            const double lat = uniform(rng, box.min_lat, box.max_lat);
            if (point_in_ring(region, lon, lat)) {
              hubs[h].at = {lat, lon};
              break;
            }
            if (++attempts > 1000000) throw DataError("could not sample a point inside the region polygon");
          }
          hubs[h].id = "random_" + std::to_string(h);
        }
        out.values[t] = bridging_index(homes, es_raw, hubs, measure).bi;
      },
      threads);
  out.mean = mean(out.values);
  out.p95 = quantile(out.values, 0.95);
  return out;
}

std::vector<Hub> hubs_from_layer(const GeoLayer& layer) {
  std::vector<Hub> out;
  for (const auto f : layer.hubs()) out.push_back({layer.feature(f).id, layer.feature(f).centroid});
  return out;
}

std::vector<Hub> category_hubs(const GeoLayer& layer, const std::string& category) {
  std::vector<Hub> out;
  for (const auto f : layer.pois_of(category)) out.push_back({layer.feature(f).id, layer.feature(f).centroid});
  return out;
}

BridgingResult category_bridging_index(std::span<const LatLon> homes, std::span<const double> es_raw,
                                       const GeoLayer& layer, const std::string& category,
                                       DiversityMeasure measure) {
  return bridging_index(homes, es_raw, category_hubs(layer, category), measure);
}

}  // namespace interseg
