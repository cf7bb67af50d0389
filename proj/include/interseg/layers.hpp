#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "interseg/geo.hpp"

namespace interseg {

enum class FeatureKind { polygon, polyline };

/// One line of the layer file. Tracts, POIs (`poi:<category>`), hubs, regions
/// and roads share this shape.
struct Feature {
  std::string id;
  FeatureKind kind = FeatureKind::polygon;
  std::string category;
  std::optional<std::string> parent_id;
  Ring coords;  // [lon, lat]
  std::map<std::string, double> attrs;

  // derived at load time
  BBox bbox;
  double area_m2 = 0.0;
  LatLon centroid;

  bool is_tract() const { return category == "tract"; }
  bool is_hub() const { return category == "hub"; }
  bool is_region() const { return category == "region"; }
  bool is_road() const { return category == "road"; }
  bool is_poi() const { return category.rfind("poi:", 0) == 0; }
  /// POI category without the `poi:` prefix.
  std::string poi_category() const { return is_poi() ? category.substr(4) : std::string(); }
};

/// Uniform grid over lon/lat bounding boxes.
class BoxGrid {
 public:
  explicit BoxGrid(double cell_deg = 0.005) : cell_(cell_deg) {}

  void insert(const BBox& box, std::uint32_t id);
  /// Ids whose boxes may intersect `box`, sorted and unique.
  std::vector<std::uint32_t> query(const BBox& box) const;

 private:
  static constexpr std::int64_t kMaxCells = 4096;
  std::int64_t cell_of(double v) const;
  static std::uint64_t key(std::int64_t cx, std::int64_t cy) {
    return (static_cast<std::uint64_t>(cx) << 32) ^ static_cast<std::uint32_t>(cy);
  }
  double cell_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells_;
  std::vector<std::uint32_t> oversize_;
};

/// Validated polygons and polylines with spatial indexes. Read-only after
/// construction.
class GeoLayer {
 public:
  GeoLayer() = default;

  /// Validates and indexes. Throws LayerError on an open or self-intersecting
  /// ring, a dangling parent_id, duplicate ids, or overlapping tracts.
  explicit GeoLayer(std::vector<Feature> features);

  static GeoLayer load(std::istream& in);
  void write(std::ostream& out) const;

  const std::vector<Feature>& features() const { return features_; }
  const Feature& feature(std::uint32_t i) const { return features_[i]; }
  std::optional<std::uint32_t> find(const std::string& id) const;

  std::vector<std::uint32_t> tracts() const { return by_category([](const Feature& f) { return f.is_tract(); }); }
  std::vector<std::uint32_t> hubs() const { return by_category([](const Feature& f) { return f.is_hub(); }); }
  std::vector<std::uint32_t> regions() const { return by_category([](const Feature& f) { return f.is_region(); }); }
  std::vector<std::uint32_t> pois() const { return by_category([](const Feature& f) { return f.is_poi(); }); }
  /// POIs whose category (without prefix) equals `category`.
  std::vector<std::uint32_t> pois_of(const std::string& category) const;

  /// Tract containing the point; on shared boundaries the smallest id wins.
  std::optional<std::uint32_t> tract_at(double lat, double lon) const;
  /// Region polygon containing the point (smallest id on boundaries).
  std::optional<std::uint32_t> region_at(double lat, double lon) const;
  /// Smallest-area POI containing the point.
  std::optional<std::uint32_t> poi_at(double lat, double lon) const;
  /// Smallest-area hub polygon containing the point.
  std::optional<std::uint32_t> hub_at(double lat, double lon) const;
  /// True when some road polyline lies within `dist_m` meters.
  bool near_road(double lat, double lon, double dist_m = 20.0) const;

  bool contains(std::uint32_t feature, double lat, double lon) const;

 private:
  template <typename Pred>
  std::vector<std::uint32_t> by_category(Pred pred) const {
    std::vector<std::uint32_t> out;
    for (std::uint32_t i = 0; i < features_.size(); ++i)
      if (pred(features_[i])) out.push_back(i);
    return out;
  }
  std::optional<std::uint32_t> smallest_containing(const BoxGrid& grid, double lat, double lon,
                                                   bool by_area) const;
  void validate_tract_overlaps() const;

  std::vector<Feature> features_;
  std::unordered_map<std::string, std::uint32_t> index_;
  BoxGrid tract_grid_{0.01};
  BoxGrid region_grid_{0.05};
  BoxGrid poi_grid_{0.005};
  BoxGrid hub_grid_{0.005};
  BoxGrid road_grid_{0.005};
  struct RoadSegment {
    std::uint32_t feature;
    std::uint32_t index;
  };
  std::vector<RoadSegment> road_segments_;
};

}  // namespace interseg
