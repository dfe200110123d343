#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pwc/vec3.hpp"

namespace pwc {

struct Bounds {
  Vec3 min, max;
};

// Point set with optional per-point class labels and extra attribute
// channels. Instances are treated as immutable once built and are safe to
// share read-only across workers; the producing operation caches bounds.
struct PointCloud {
  std::vector<Vec3> positions;
  std::vector<int> labels;         // empty, or one non-negative id per point
  std::vector<double> attributes;  // row-major, size() * attr_channels
  int attr_channels = 0;
  std::optional<Bounds> cached_bounds;

  int size() const { return static_cast<int>(positions.size()); }
  bool has_labels() const { return !labels.empty(); }

  // Cached bounds when present, else recomputed. N = 0 yields zero corners.
  Bounds bounds() const;
  void refresh_bounds();

  // Checks finiteness and that labels/attributes align with N.
  void validate() const;
};

// xyz-text: one "x y z" or "x y z label" line per point, '#' comments,
// whitespace-separated, '.' decimal separator. Labels must be present on
// every line or on none.
PointCloud load_cloud(const std::string& path);
void save_cloud(const PointCloud& cloud, const std::string& path);

// Translates the centroid to the origin and scales so the farthest point
// sits at distance 1. An all-coincident cloud maps every point to the
// origin (scale factor defined as 1).
PointCloud normalize_cloud(const PointCloud& cloud);

}  // namespace pwc
