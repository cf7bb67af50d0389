#include "interseg/layers.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "interseg/error.hpp"

namespace interseg {

std::int64_t BoxGrid::cell_of(double v) const {
  return static_cast<std::int64_t>(std::floor(v / cell_));
}

void BoxGrid::insert(const BBox& box, std::uint32_t id) {
  const auto x0 = cell_of(box.min_lon), x1 = cell_of(box.max_lon);
  const auto y0 = cell_of(box.min_lat), y1 = cell_of(box.max_lat);
  if ((x1 - x0 + 1) * (y1 - y0 + 1) > kMaxCells) {
    oversize_.push_back(id);
    return;
  }
  for (auto x = x0; x <= x1; ++x)
    for (auto y = y0; y <= y1; ++y) cells_[key(x, y)].push_back(id);
}

std::vector<std::uint32_t> BoxGrid::query(const BBox& box) const {
  std::vector<std::uint32_t> out(oversize_);
  const auto x0 = cell_of(box.min_lon), x1 = cell_of(box.max_lon);
  const auto y0 = cell_of(box.min_lat), y1 = cell_of(box.max_lat);
  for (auto x = x0; x <= x1; ++x) {
    for (auto y = y0; y <= y1; ++y) {
      const auto it = cells_.find(key(x, y));
      if (it != cells_.end()) out.insert(out.end(), it->second.begin(), it->second.end());
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

GeoLayer::GeoLayer(std::vector<Feature> features) : features_(std::move(features)) {
  for (std::uint32_t i = 0; i < features_.size(); ++i) {
    auto& f = features_[i];
    if (f.id.empty()) throw LayerError("feature with empty id");
    if (!index_.emplace(f.id, i).second) throw LayerError("duplicate feature id '" + f.id + "'");
    if (f.kind == FeatureKind::polygon) {
      if (!ring_is_simple_closed(f.coords))
        throw LayerError("feature '" + f.id + "' has an open, degenerate or self-intersecting ring");
      f.area_m2 = ring_area_m2(f.coords);
      f.centroid = ring_centroid(f.coords);
    } else {
      if (f.coords.size() < 2) throw LayerError("polyline '" + f.id + "' needs at least 2 points");
      f.centroid = {f.coords[0][1], f.coords[0][0]};
    }
    for (const auto& c : f.coords) {
      if (!(c[1] >= -90 && c[1] <= 90 && c[0] >= -180 && c[0] <= 180))
        throw LayerError("feature '" + f.id + "' has out-of-range coordinates");
    }
    f.bbox = bbox_of(f.coords);
  }
  for (std::uint32_t i = 0; i < features_.size(); ++i) {
    const auto& f = features_[i];
    if (f.parent_id && !f.parent_id->empty() && !index_.contains(*f.parent_id))
      throw LayerError("feature '" + f.id + "' references missing parent '" + *f.parent_id + "'");
    if (f.kind == FeatureKind::polyline) {
      if (!f.is_road()) continue;
      for (std::uint32_t s = 0; s + 1 < f.coords.size(); ++s) {
        const std::array<std::array<double, 2>, 2> seg{f.coords[s], f.coords[s + 1]};
        road_grid_.insert(bbox_of(seg), static_cast<std::uint32_t>(road_segments_.size()));
        road_segments_.push_back({i, s});
      }
      continue;
    }
    if (f.is_tract()) tract_grid_.insert(f.bbox, i);
    else if (f.is_region()) region_grid_.insert(f.bbox, i);
    else if (f.is_hub()) hub_grid_.insert(f.bbox, i);
    else if (f.is_poi()) poi_grid_.insert(f.bbox, i);
  }
  validate_tract_overlaps();
}

void GeoLayer::validate_tract_overlaps() const {
  const auto tr = tracts();
  for (const auto a : tr) {
    const auto& fa = features_[a];
    for (const auto b : tract_grid_.query(fa.bbox)) {
      if (b <= a) continue;
      const auto& fb = features_[b];
      if (!fa.bbox.intersects(fb.bbox)) continue;
      bool overlap = false;
      for (std::size_t i = 0; i + 1 < fa.coords.size() && !overlap; ++i)
        for (std::size_t j = 0; j + 1 < fb.coords.size() && !overlap; ++j)
          overlap = segments_cross_properly(fa.coords[i], fa.coords[i + 1], fb.coords[j], fb.coords[j + 1]);
      auto strictly_inside = [](const Feature& poly, double lon, double lat) {
        return point_in_ring(poly.coords, lon, lat) && !point_on_ring_boundary(poly.coords, lon, lat);
      };
      for (const auto& v : fa.coords)
        if (!overlap && strictly_inside(fb, v[0], v[1])) overlap = true;
      for (const auto& v : fb.coords)
        if (!overlap && strictly_inside(fa, v[0], v[1])) overlap = true;
      if (!overlap && strictly_inside(fa, fa.centroid.lon, fa.centroid.lat) &&
          strictly_inside(fb, fa.centroid.lon, fa.centroid.lat))
        overlap = true;
      if (overlap) throw LayerError("tracts '" + fa.id + "' and '" + fb.id + "' overlap");
    }
  }
}

GeoLayer GeoLayer::load(std::istream& in) {
  std::vector<Feature> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw LayerError("layer line " + std::to_string(lineno) + ": " + e.what());
    }
    try {
      Feature f;
      f.id = j.at("id").get<std::string>();
      const auto kind = j.value("kind", std::string("polygon"));
      if (kind == "polygon") f.kind = FeatureKind::polygon;
      else if (kind == "polyline") f.kind = FeatureKind::polyline;
      else throw LayerError("layer line " + std::to_string(lineno) + ": unknown kind '" + kind + "'");
      f.category = j.value("category", std::string());
      if (j.contains("parent_id") && !j["parent_id"].is_null())
        f.parent_id = j["parent_id"].get<std::string>();
      for (const auto& c : j.at("coords")) f.coords.push_back({c.at(0).get<double>(), c.at(1).get<double>()});
      if (j.contains("attrs") && j["attrs"].is_object()) {
        for (const auto& [k, v] : j["attrs"].items())
          if (v.is_number()) f.attrs[k] = v.get<double>();
      }
      out.push_back(std::move(f));
    } catch (const nlohmann::json::exception& e) {
      throw LayerError("layer line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return GeoLayer(std::move(out));
}

void GeoLayer::write(std::ostream& out) const {
  for (const auto& f : features_) {
    nlohmann::ordered_json j;
    j["id"] = f.id;
    j["kind"] = f.kind == FeatureKind::polygon ? "polygon" : "polyline";
    j["category"] = f.category;
    j["parent_id"] = f.parent_id ? nlohmann::ordered_json(*f.parent_id) : nlohmann::ordered_json();
    auto coords = nlohmann::ordered_json::array();
    for (const auto& c : f.coords) coords.push_back({c[0], c[1]});
    j["coords"] = std::move(coords);
    auto attrs = nlohmann::ordered_json::object();
    for (const auto& [k, v] : f.attrs) attrs[k] = v;
    j["attrs"] = std::move(attrs);
    out << j.dump() << '\n';
  }
}

std::optional<std::uint32_t> GeoLayer::find(const std::string& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::uint32_t> GeoLayer::pois_of(const std::string& category) const {
  const std::string full = "poi:" + category;
  return by_category([&](const Feature& f) { return f.category == full; });
}

bool GeoLayer::contains(std::uint32_t feature, double lat, double lon) const {
  const auto& f = features_[feature];
  return f.kind == FeatureKind::polygon && f.bbox.contains(lon, lat) &&
         point_in_ring(f.coords, lon, lat);
}

std::optional<std::uint32_t> GeoLayer::smallest_containing(const BoxGrid& grid, double lat,
                                                           double lon, bool by_area) const {
  std::optional<std::uint32_t> best;
  for (const auto i : grid.query({lon, lat, lon, lat})) {
    if (!contains(i, lat, lon)) continue;
    if (!best) {
      best = i;
      continue;
    }
    const auto& a = features_[i];
    const auto& b = features_[*best];
    const bool better = by_area ? (a.area_m2 < b.area_m2 || (a.area_m2 == b.area_m2 && a.id < b.id))
                                : a.id < b.id;
    if (better) best = i;
  }
  return best;
}

std::optional<std::uint32_t> GeoLayer::tract_at(double lat, double lon) const {
  return smallest_containing(tract_grid_, lat, lon, false);
}

std::optional<std::uint32_t> GeoLayer::region_at(double lat, double lon) const {
  return smallest_containing(region_grid_, lat, lon, false);
}

std::optional<std::uint32_t> GeoLayer::poi_at(double lat, double lon) const {
  return smallest_containing(poi_grid_, lat, lon, true);
}

std::optional<std::uint32_t> GeoLayer::hub_at(double lat, double lon) const {
  return smallest_containing(hub_grid_, lat, lon, true);
}

bool GeoLayer::near_road(double lat, double lon, double dist_m) const {
  const double dlat = dist_m / (kEarthRadiusM * kDegToRad);
  const double coslat = std::max(std::cos(lat * kDegToRad), 1e-6);
  const double dlon = dlat / coslat;
  const BBox q{lon - dlon, lat - dlat, lon + dlon, lat + dlat};
  for (const auto s : road_grid_.query(q)) {
    const auto& seg = road_segments_[s];
    const auto& coords = features_[seg.feature].coords;
    const std::array<std::array<double, 2>, 2> pts{coords[seg.index], coords[seg.index + 1]};
    if (distance_to_polyline_m(pts, lat, lon) <= dist_m) return true;
  }
  return false;
}

}  // namespace interseg
