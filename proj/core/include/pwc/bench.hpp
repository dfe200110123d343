#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pwc/pointconv.hpp"

namespace pwc {

enum class BenchOrdering { identity, random, xyz_grid, morton };

struct BenchConfig {
  std::vector<int> sizes = {4096, 16384};
  std::vector<double> radii = {0.05};
  std::vector<BenchOrdering> orderings = {BenchOrdering::identity, BenchOrdering::random,
                                          BenchOrdering::xyz_grid, BenchOrdering::morton};
  int repetitions = 5;
  int kernel_resolution = 3;
  int order_bits = 10;
  std::uint64_t seed = 1;
  std::string out_dir = "bench_out";

  void validate() const;
};

struct LocalityRow {
  int n = 0;
  double cell_size = 0.0;
  double radius = 0.0;
  BenchOrdering ordering = BenchOrdering::identity;
  double mean_rank_distance = 0.0;
  double ratio_vs_random = 0.0;
};

struct BenchResult {
  std::string timing_csv;    // n,radius,ordering,phase,rep1..repN,median
  std::string locality_csv;  // n,cell_size,radius,ordering,mean_rank_distance,ratio_vs_random
  std::vector<LocalityRow> locality;
  // timing medians for the grid-vs-bruteforce comparison, per (n, radius)
  double grid_sweep_median = 0.0;
  double brute_sweep_median = 0.0;
  double morton_vs_random_ratio = 0.0;  // morton mean rank distance / random's
};

// Times a full query_ball sweep and a full conv-forward neighborhood gather
// over uniform random clouds, under each point ordering, and measures the
// ordering locality statistic (mean neighbor rank distance at radius
// 4 * cell_size with cell_size = n^(-1/3)). Timings are the median of
// `repetitions` runs after one warm-up. Writes both CSV files to out_dir.
BenchResult bench_neighbors(const BenchConfig& config);

BenchOrdering bench_ordering_from_string(const std::string& s);
std::string to_string(BenchOrdering o);

}  // namespace pwc
