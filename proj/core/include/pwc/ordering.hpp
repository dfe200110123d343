#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pwc/cloud.hpp"
#include "pwc/grid.hpp"

namespace pwc {

enum class OrderStrategy { identity, xyz_grid, morton };

// A visit order over point ids: perm[rank] = original id. Always a
// bijection on 0..N-1.
struct Ordering {
  OrderStrategy strategy = OrderStrategy::identity;
  std::vector<int> perm;
  int bits = 0;
};

// Interleaves the low `bits` bits of each coordinate: x occupies bit
// positions 0,3,6,..., y 1,4,7,..., z 2,5,8,... Coordinates must be in
// [0, 2^bits), bits in [1, 21].
std::uint64_t morton_code(std::uint32_t qx, std::uint32_t qy, std::uint32_t qz, int bits);

// Quantizes positions onto a 2^bits lattice over the cloud bounds (the max
// corner clamps into the last cell, a zero-extent axis maps to 0) and sorts
// ids by Morton code or lexicographic (cell_x, cell_y, cell_z); ties break
// by original id.
Ordering order_points(const PointCloud& cloud, OrderStrategy strategy, int bits);

PointCloud apply_ordering(const PointCloud& cloud, const Ordering& ordering);

// inverse[perm[rank]] = rank
std::vector<int> inverse_permutation(const std::vector<int>& perm);

// Seeded Fisher-Yates permutation, the baseline orderings are compared to.
std::vector<int> random_permutation(int n, std::uint64_t seed);

// Mean |rank(i) - rank(j)| over unordered neighbor pairs within `radius`.
// `ranks` maps point id to its position in the order under test. Returns 0
// when no pair exists.
double mean_neighbor_rank_distance(const PointCloud& cloud, const GridIndex& index, double radius,
                                   const std::vector<int>& ranks);

OrderStrategy order_strategy_from_string(const std::string& s);
std::string to_string(OrderStrategy s);

}  // namespace pwc
