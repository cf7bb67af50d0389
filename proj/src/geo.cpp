#include "interseg/geo.hpp"

#include <algorithm>
#include <limits>

namespace interseg {

namespace {

constexpr double kEdgeTol = 1e-12;

double cross(const std::array<double, 2>& o, const std::array<double, 2>& a,
             const std::array<double, 2>& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

bool on_segment(const std::array<double, 2>& a, const std::array<double, 2>& b, double x,
                double y) {
  const std::array<double, 2> p{x, y};
  const double len = std::hypot(b[0] - a[0], b[1] - a[1]);
  if (std::abs(cross(a, b, p)) > kEdgeTol * std::max(1.0, len)) return false;
  return x >= std::min(a[0], b[0]) - kEdgeTol && x <= std::max(a[0], b[0]) + kEdgeTol &&
         y >= std::min(a[1], b[1]) - kEdgeTol && y <= std::max(a[1], b[1]) + kEdgeTol;
}

int sign(double v) { return (v > 0) - (v < 0); }

}  // namespace

BBox bbox_of(std::span<const std::array<double, 2>> pts) {
  BBox b{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
         -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& p : pts) {
    b.min_lon = std::min(b.min_lon, p[0]);
    b.max_lon = std::max(b.max_lon, p[0]);
    b.min_lat = std::min(b.min_lat, p[1]);
    b.max_lat = std::max(b.max_lat, p[1]);
  }
  return b;
}

bool point_on_ring_boundary(std::span<const std::array<double, 2>> ring, double lon,
                            double lat) {
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    if (on_segment(ring[i], ring[i + 1], lon, lat)) return true;
  }
  return false;
}

bool point_in_ring(std::span<const std::array<double, 2>> ring, double lon, double lat) {
  if (ring.size() < 4) return false;
  if (point_on_ring_boundary(ring, lon, lat)) return true;
  bool inside = false;
  for (std::size_t i = 0, j = ring.size() - 2; i + 1 < ring.size(); j = i++) {
    const auto& a = ring[i];
    const auto& b = ring[j];
    if ((a[1] > lat) != (b[1] > lat)) {
      const double x = (b[0] - a[0]) * (lat - a[1]) / (b[1] - a[1]) + a[0];
      if (lon < x) inside = !inside;
    }
  }
  return inside;
}

double ring_area_m2(std::span<const std::array<double, 2>> ring) {
  if (ring.size() < 4) return 0.0;
  const LocalProjection proj({ring[0][1], ring[0][0]});
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    const auto p = proj.forward(ring[i][1], ring[i][0]);
    const auto q = proj.forward(ring[i + 1][1], ring[i + 1][0]);
    acc += p[0] * q[1] - q[0] * p[1];
  }
  return std::abs(acc) * 0.5;
}

LatLon ring_centroid(std::span<const std::array<double, 2>> ring) {
  if (ring.empty()) return {};
  double a = 0.0, cx = 0.0, cy = 0.0;
  const auto& o = ring[0];
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
    const double x0 = ring[i][0] - o[0], y0 = ring[i][1] - o[1];
    const double x1 = ring[i + 1][0] - o[0], y1 = ring[i + 1][1] - o[1];
    const double c = x0 * y1 - x1 * y0;
    a += c;
    cx += (x0 + x1) * c;
    cy += (y0 + y1) * c;
  }
  if (std::abs(a) < 1e-300) {
    double mx = 0.0, my = 0.0;
    for (const auto& p : ring) {
      mx += p[0];
      my += p[1];
    }
    return {my / ring.size(), mx / ring.size()};
  }
  return {o[1] + cy / (3.0 * a), o[0] + cx / (3.0 * a)};
}

bool segments_cross_properly(const std::array<double, 2>& a, const std::array<double, 2>& b,
                             const std::array<double, 2>& c, const std::array<double, 2>& d) {
  const int d1 = sign(cross(c, d, a));
  const int d2 = sign(cross(c, d, b));
  const int d3 = sign(cross(a, b, c));
  const int d4 = sign(cross(a, b, d));
  return d1 * d2 < 0 && d3 * d4 < 0;
}

bool ring_is_simple_closed(std::span<const std::array<double, 2>> ring) {
  if (ring.size() < 4 || ring.front() != ring.back()) return false;
  std::vector<std::array<double, 2>> distinct(ring.begin(), ring.end() - 1);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3) return false;
  const std::size_t n = ring.size() - 1;  // edge count
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      const auto& a = ring[i];
      const auto& b = ring[i + 1];
      const auto& c = ring[j];
      const auto& d = ring[j + 1];
      if (segments_cross_properly(a, b, c, d)) return false;
      // touching a non-adjacent edge also breaks simplicity
      if (on_segment(a, b, c[0], c[1]) || on_segment(a, b, d[0], d[1]) ||
          on_segment(c, d, a[0], a[1]) || on_segment(c, d, b[0], b[1]))
        return false;
    }
  }
  return ring_area_m2(ring) > 0.0;
}

double distance_to_polyline_m(std::span<const std::array<double, 2>> line, double lat,
                              double lon) {
  if (line.empty()) return std::numeric_limits<double>::infinity();
  const LocalProjection proj({lat, lon});
  if (line.size() == 1) return haversine_m(lat, lon, line[0][1], line[0][0]);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < line.size(); ++i) {
    const auto a = proj.forward(line[i][1], line[i][0]);
    const auto b = proj.forward(line[i + 1][1], line[i + 1][0]);
    const double vx = b[0] - a[0], vy = b[1] - a[1];
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0 ? -(a[0] * vx + a[1] * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double px = a[0] + t * vx, py = a[1] + t * vy;
    best = std::min(best, std::hypot(px, py));
  }
  return best;
}

}  // namespace interseg
