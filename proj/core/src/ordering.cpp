#include "pwc/ordering.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <tuple>

#include "pwc/rng.hpp"

namespace pwc {

namespace {

// Spreads the low 21 bits of v so bit i lands at position 3i.
std::uint64_t spread3(std::uint64_t v) {
  v &= 0x1FFFFFull;
  v = (v | v << 32) & 0x1F00000000FFFFull;
  v = (v | v << 16) & 0x1F0000FF0000FFull;
  v = (v | v << 8) & 0x100F00F00F00F00Full;
  v = (v | v << 4) & 0x10C30C30C30C30C3ull;
  v = (v | v << 2) & 0x1249249249249249ull;
  return v;
}

void check_bits(int bits) {
  if (bits < 1 || bits > 21) throw std::invalid_argument("quantization bits must be in [1, 21]");
}

}  // namespace

std::uint64_t morton_code(std::uint32_t qx, std::uint32_t qy, std::uint32_t qz, int bits) {
  check_bits(bits);
  const std::uint32_t limit = 1u << bits;
  if (qx >= limit || qy >= limit || qz >= limit) {
    throw std::invalid_argument("morton_code: coordinate out of range for bit count");
  }
  return spread3(qx) | (spread3(qy) << 1) | (spread3(qz) << 2);
}

namespace {

struct Quantizer {
  Vec3 min;
  Vec3 extent;
  double cells;

  std::uint32_t q(double v, double lo, double ext) const {
    if (ext <= 0.0) return 0;
    double t = (v - lo) / ext * cells;
    auto c = static_cast<std::int64_t>(t);
    c = std::clamp<std::int64_t>(c, 0, static_cast<std::int64_t>(cells) - 1);
    return static_cast<std::uint32_t>(c);
  }
  std::uint32_t qx(const Vec3& p) const { return q(p.x, min.x, extent.x); }
  std::uint32_t qy(const Vec3& p) const { return q(p.y, min.y, extent.y); }
  std::uint32_t qz(const Vec3& p) const { return q(p.z, min.z, extent.z); }
};

}  // namespace

Ordering order_points(const PointCloud& cloud, OrderStrategy strategy, int bits) {
  if (cloud.size() < 1) throw std::invalid_argument("order_points: empty cloud");
  Ordering ordering;
  ordering.strategy = strategy;
  ordering.bits = bits;
  ordering.perm.resize(cloud.size());
  std::iota(ordering.perm.begin(), ordering.perm.end(), 0);
  if (strategy == OrderStrategy::identity) return ordering;

  check_bits(bits);
  Bounds b = cloud.bounds();
  Quantizer quant{b.min, b.max - b.min, static_cast<double>(1u << bits)};

  if (strategy == OrderStrategy::morton) {
    std::vector<std::uint64_t> code(cloud.size());
    for (int i = 0; i < cloud.size(); ++i) {
      const Vec3& p = cloud.positions[i];
      code[i] = morton_code(quant.qx(p), quant.qy(p), quant.qz(p), bits);
    }
    std::sort(ordering.perm.begin(), ordering.perm.end(), [&](int a, int b2) {
      return code[a] != code[b2] ? code[a] < code[b2] : a < b2;
    });
  } else {
    std::vector<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>> key(cloud.size());
    for (int i = 0; i < cloud.size(); ++i) {
      const Vec3& p = cloud.positions[i];
      key[i] = {quant.qx(p), quant.qy(p), quant.qz(p)};
    }
    std::sort(ordering.perm.begin(), ordering.perm.end(), [&](int a, int b2) {
      return key[a] != key[b2] ? key[a] < key[b2] : a < b2;
    });
  }
  return ordering;
}

PointCloud apply_ordering(const PointCloud& cloud, const Ordering& ordering) {
  if (static_cast<int>(ordering.perm.size()) != cloud.size()) {
    throw std::invalid_argument("apply_ordering: permutation size mismatch");
  }
  PointCloud out;
  out.positions.reserve(cloud.positions.size());
  if (cloud.has_labels()) out.labels.reserve(cloud.labels.size());
  out.attr_channels = cloud.attr_channels;
  out.attributes.reserve(cloud.attributes.size());
  for (int id : ordering.perm) {
    out.positions.push_back(cloud.positions[id]);
    if (cloud.has_labels()) out.labels.push_back(cloud.labels[id]);
    for (int a = 0; a < cloud.attr_channels; ++a) {
      out.attributes.push_back(cloud.attributes[static_cast<std::size_t>(id) * cloud.attr_channels + a]);
    }
  }
  out.cached_bounds = cloud.cached_bounds;  // same point set
  return out;
}

std::vector<int> inverse_permutation(const std::vector<int>& perm) {
  std::vector<int> inv(perm.size());
  for (std::size_t rank = 0; rank < perm.size(); ++rank) inv[perm[rank]] = static_cast<int>(rank);
  return inv;
}

std::vector<int> random_permutation(int n, std::uint64_t seed) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(derive_seed(seed, kStreamPerm));
  rng.shuffle(perm);
  return perm;
}

double mean_neighbor_rank_distance(const PointCloud& cloud, const GridIndex& index, double radius,
                                   const std::vector<int>& ranks) {
  if (static_cast<int>(ranks.size()) != cloud.size()) {
    throw std::invalid_argument("mean_neighbor_rank_distance: ranks size mismatch");
  }
  double sum = 0.0;
  long long pairs = 0;
  for (int i = 0; i < cloud.size(); ++i) {
    for (int j : query_ball(index, cloud, cloud.positions[i], radius)) {
      if (j <= i) continue;
      sum += std::fabs(static_cast<double>(ranks[i]) - static_cast<double>(ranks[j]));
      ++pairs;
    }
  }
  return pairs > 0 ? sum / static_cast<double>(pairs) : 0.0;
}

OrderStrategy order_strategy_from_string(const std::string& s) {
  if (s == "identity") return OrderStrategy::identity;
  if (s == "xyz" || s == "xyz-grid") return OrderStrategy::xyz_grid;
  if (s == "morton") return OrderStrategy::morton;
  throw std::invalid_argument("unknown ordering strategy: " + s);
}

std::string to_string(OrderStrategy s) {
  switch (s) {
    case OrderStrategy::identity: return "identity";
    case OrderStrategy::xyz_grid: return "xyz";
    case OrderStrategy::morton: return "morton";
  }
  return "?";
}

}  // namespace pwc
