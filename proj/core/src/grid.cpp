#include "pwc/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pwc {

CellKey GridIndex::cell_of(const Vec3& p) const {
  return {static_cast<std::int64_t>(std::floor((p.x - origin.x) / cell_size)),
          static_cast<std::int64_t>(std::floor((p.y - origin.y) / cell_size)),
          static_cast<std::int64_t>(std::floor((p.z - origin.z) / cell_size))};
}

GridIndex build_grid(const PointCloud& cloud, double cell_size) {
  if (!(cell_size > 0.0)) throw std::invalid_argument("build_grid: cell_size must be > 0");
  GridIndex index;
  index.cell_size = cell_size;
  index.origin = cloud.bounds().min;
  index.num_points = cloud.size();
  for (int i = 0; i < cloud.size(); ++i) {
    index.cells[index.cell_of(cloud.positions[i])].push_back(i);
  }
  return index;
}

std::vector<int> query_ball(const GridIndex& index, const PointCloud& cloud, const Vec3& center,
                            double radius) {
  if (radius < 0.0) throw std::invalid_argument("query_ball: radius must be >= 0");
  if (index.num_points != cloud.size()) {
    throw std::invalid_argument("query_ball: index was built over a different cloud");
  }
  std::vector<int> result;
  if (cloud.size() == 0) return result;

  const double r2 = radius * radius;
  const double cs = index.cell_size;
  auto lo_cell = [&](double c, double o) {
    return static_cast<std::int64_t>(std::floor((c - radius - o) / cs));
  };
  auto hi_cell = [&](double c, double o) {
    return static_cast<std::int64_t>(std::floor((c + radius - o) / cs));
  };
  const std::int64_t x0 = lo_cell(center.x, index.origin.x), x1 = hi_cell(center.x, index.origin.x);
  const std::int64_t y0 = lo_cell(center.y, index.origin.y), y1 = hi_cell(center.y, index.origin.y);
  const std::int64_t z0 = lo_cell(center.z, index.origin.z), z1 = hi_cell(center.z, index.origin.z);

  for (std::int64_t cx = x0; cx <= x1; ++cx) {
    for (std::int64_t cy = y0; cy <= y1; ++cy) {
      for (std::int64_t cz = z0; cz <= z1; ++cz) {
        auto it = index.cells.find(CellKey{cx, cy, cz});
        if (it == index.cells.end()) continue;
        for (int id : it->second) {
          if ((cloud.positions[id] - center).squared_norm() <= r2) result.push_back(id);
        }
      }
    }
  }
  std::sort(result.begin(), result.end());
  return result;
}

std::vector<int> query_ball_bruteforce(const PointCloud& cloud, const Vec3& center,
                                       double radius) {
  if (radius < 0.0) throw std::invalid_argument("query_ball_bruteforce: radius must be >= 0");
  std::vector<int> result;
  const double r2 = radius * radius;
  for (int i = 0; i < cloud.size(); ++i) {
    if ((cloud.positions[i] - center).squared_norm() <= r2) result.push_back(i);
  }
  return result;
}

}  // namespace pwc
