#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace interseg {

inline constexpr double kEarthRadiusM = 6371008.8;
inline constexpr double kDegToRad = std::numbers::pi / 180.0;

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const LatLon&, const LatLon&) = default;
};

/// Great-circle distance in meters on a spherical earth.
inline double haversine_m(double lat1, double lon1, double lat2, double lon2) {
  const double p1 = lat1 * kDegToRad;
  const double p2 = lat2 * kDegToRad;
  const double dp = p2 - p1;
  const double dl = (lon2 - lon1) * kDegToRad;
  const double s1 = std::sin(dp * 0.5);
  const double s2 = std::sin(dl * 0.5);
  double h = s1 * s1 + std::cos(p1) * std::cos(p2) * s2 * s2;
  if (h > 1.0) h = 1.0;
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

inline double haversine_m(const LatLon& a, const LatLon& b) {
  return haversine_m(a.lat, a.lon, b.lat, b.lon);
}

/// Earth-centred cartesian coordinates in meters. The straight-line (chord)
/// distance between two such points never exceeds the great-circle distance,
/// so a chord-radius search with radius D returns a superset of the points
/// within haversine distance D.
inline std::array<double, 3> to_ecef(double lat, double lon) {
  const double p = lat * kDegToRad;
  const double l = lon * kDegToRad;
  const double c = std::cos(p);
  return {kEarthRadiusM * c * std::cos(l), kEarthRadiusM * c * std::sin(l),
          kEarthRadiusM * std::sin(p)};
}

/// Local equirectangular frame around an origin; meters east/north.
class LocalProjection {
 public:
  explicit LocalProjection(LatLon origin)
      : origin_(origin), cos_lat_(std::cos(origin.lat * kDegToRad)) {}

  std::array<double, 2> forward(double lat, double lon) const {
    return {(lon - origin_.lon) * kDegToRad * kEarthRadiusM * cos_lat_,
            (lat - origin_.lat) * kDegToRad * kEarthRadiusM};
  }

  LatLon inverse(double east_m, double north_m) const {
    return {origin_.lat + north_m / (kEarthRadiusM * kDegToRad),
            origin_.lon + east_m / (kEarthRadiusM * kDegToRad * cos_lat_)};
  }

  const LatLon& origin() const { return origin_; }

 private:
  LatLon origin_;
  double cos_lat_;
};

struct BBox {
  double min_lon = 0.0, min_lat = 0.0, max_lon = 0.0, max_lat = 0.0;

  bool contains(double lon, double lat) const {
    return lon >= min_lon && lon <= max_lon && lat >= min_lat && lat <= max_lat;
  }
  bool intersects(const BBox& o) const {
    return !(o.min_lon > max_lon || o.max_lon < min_lon || o.min_lat > max_lat ||
             o.max_lat < min_lat);
  }
};

// Rings and polylines are stored as [lon, lat] pairs, matching the layer file.
using Ring = std::vector<std::array<double, 2>>;

BBox bbox_of(std::span<const std::array<double, 2>> pts);

/// Ray-casting point-in-polygon; points on an edge or vertex count as inside.
bool point_in_ring(std::span<const std::array<double, 2>> ring, double lon, double lat);

/// True when the point lies on one of the ring's edges (within a tiny tolerance).
bool point_on_ring_boundary(std::span<const std::array<double, 2>> ring, double lon,
                            double lat);

/// Unsigned area in square meters (shoelace in a local projection).
double ring_area_m2(std::span<const std::array<double, 2>> ring);

/// Area-weighted centroid; falls back to the vertex mean for degenerate rings.
LatLon ring_centroid(std::span<const std::array<double, 2>> ring);

/// Ring is closed (first == last), has at least three distinct vertices and no
/// two non-adjacent edges intersect.
bool ring_is_simple_closed(std::span<const std::array<double, 2>> ring);

/// Minimum distance in meters from a point to a polyline, using a tangent
/// plane at the query point.
double distance_to_polyline_m(std::span<const std::array<double, 2>> line, double lat,
                              double lon);

/// True when segments ab and cd cross at a single point interior to both.
bool segments_cross_properly(const std::array<double, 2>& a, const std::array<double, 2>& b,
                             const std::array<double, 2>& c, const std::array<double, 2>& d);

}  // namespace interseg
