#pragma once

#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace stgen {

/// A point in the plane, coordinates in metres.
struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Twice the signed area of (a, b, c); positive for counter-clockwise order.
inline double orient2d(Point2 a, Point2 b, Point2 c) { return cross(b - a, c - a); }

inline double signed_area(Point2 a, Point2 b, Point2 c) { return 0.5 * orient2d(a, b, c); }

/// Positive when d lies strictly inside the circumcircle of the
/// counter-clockwise triangle (a, b, c).
inline double incircle(Point2 a, Point2 b, Point2 c, Point2 d) {
  const double adx = a.x - d.x, ady = a.y - d.y;
  const double bdx = b.x - d.x, bdy = b.y - d.y;
  const double cdx = c.x - d.x, cdy = c.y - d.y;
  const double ad = adx * adx + ady * ady;
  const double bd = bdx * bdx + bdy * bdy;
  const double cd = cdx * cdx + cdy * cdy;
  return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
}

inline Point2 centroid(Point2 a, Point2 b, Point2 c) {
  return {(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
}

/// Axis-aligned bounding box.
struct BoundingBox {
  Point2 lo{};
  Point2 hi{};

  bool contains(Point2 p, double pad = 0.0) const {
    return p.x >= lo.x - pad && p.x <= hi.x + pad && p.y >= lo.y - pad && p.y <= hi.y + pad;
  }
  double diameter() const { return distance(lo, hi); }
};

BoundingBox bounding_box(std::span<const Point2> pts);

/// Shoelace area of a closed polygon (positive when counter-clockwise).
double polygon_area(std::span<const Point2> ring);

/// Even-odd point-in-polygon test; points on the boundary may go either way.
bool point_in_polygon(std::span<const Point2> ring, Point2 p);

/// Euclidean distance from p to the closed segment [a, b].
double segment_distance(Point2 p, Point2 a, Point2 b);

}  // namespace stgen
