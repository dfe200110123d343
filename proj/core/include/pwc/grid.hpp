#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "pwc/cloud.hpp"

namespace pwc {

struct CellKey {
  std::int64_t x = 0, y = 0, z = 0;
  bool operator==(const CellKey&) const = default;
};

struct CellKeyHash {
  std::size_t operator()(const CellKey& k) const {
    std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9E3779B97F4A7C15ull;
    h ^= static_cast<std::uint64_t>(k.y) * 0xC2B2AE3D27D4EB4Full + (h << 6) + (h >> 2);
    h ^= static_cast<std::uint64_t>(k.z) * 0x165667B19E3779F9ull + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

// Uniform spatial hash. A point p lives in cell floor((p - origin) /
// cell_size) componentwise; the origin is the cloud's min bounds corner.
// Immutable after build; concurrent read-only queries are safe.
struct GridIndex {
  double cell_size = 0.0;
  Vec3 origin;
  int num_points = 0;
  std::unordered_map<CellKey, std::vector<int>, CellKeyHash> cells;

  CellKey cell_of(const Vec3& p) const;
};

GridIndex build_grid(const PointCloud& cloud, double cell_size);

// All ids j with ||p_j - center|| <= radius (closed ball, exact <= on
// doubles), ascending. Scans only cells overlapping the ball's bounding
// cube.
std::vector<int> query_ball(const GridIndex& index, const PointCloud& cloud, const Vec3& center,
                            double radius);

// Linear-scan oracle with the identical set contract.
std::vector<int> query_ball_bruteforce(const PointCloud& cloud, const Vec3& center,
                                       double radius);

}  // namespace pwc
