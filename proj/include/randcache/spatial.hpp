#pragma once

// Homogeneous Poisson point processes on planar disks.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "error.hpp"
#include "random.hpp"

namespace randcache {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline double squared_distance(Point a, Point b) noexcept {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

struct Region {
  Point center;
  double radius = 1.0;

  Region() = default;
  Region(Point c, double r) : center(c), radius(r) {
    if (!(r > 0.0)) throw ParameterError("region radius must be positive");
  }

  double area() const noexcept { return std::numbers::pi * radius * radius; }
  bool contains(Point p) const noexcept { return squared_distance(p, center) <= radius * radius; }
};

using PointSet = std::vector<Point>;

/// Uniform point on the disk: r = R*sqrt(u), theta = 2*pi*v.
inline Point sample_uniform_disk(const Region& region, Rng& rng) {
  const double r = region.radius * std::sqrt(uniform01(rng));
  const double theta = 2.0 * std::numbers::pi * uniform01(rng);
  return {region.center.x + r * std::cos(theta), region.center.y + r * std::sin(theta)};
}

/// Realization of a PPP with the given intensity restricted to `region`.
inline PointSet sample_ppp(double density, const Region& region, Rng& rng) {
  if (!(density >= 0.0)) throw ParameterError("PPP density must be nonnegative");
  const std::uint64_t count = poisson(rng, density * region.area());
  PointSet points;
  points.reserve(count);
  for (std::uint64_t k = 0; k < count; ++k) points.push_back(sample_uniform_disk(region, rng));
  return points;
}

/// Number of points strictly closer than `radius` to `center`.
inline std::size_t count_within(const PointSet& points, Point center, double radius) {
  if (!(radius >= 0.0)) throw ParameterError("neighbor radius must be nonnegative");
  const double r2 = radius * radius;
  std::size_t n = 0;
  for (const Point& p : points)
    if (squared_distance(p, center) < r2) ++n;
  return n;
}

}  // namespace randcache
