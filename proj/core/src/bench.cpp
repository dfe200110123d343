#include "pwc/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <stdexcept>

#include "pwc/ordering.hpp"
#include "pwc/rng.hpp"

namespace fs = std::filesystem;

namespace pwc {

void BenchConfig::validate() const {
  if (sizes.empty()) throw std::invalid_argument("bench: no cloud sizes");
  for (int n : sizes) {
    if (n < 1024) throw std::invalid_argument("bench: sizes must be >= 1024 for meaningful timing");
  }
  if (radii.empty()) throw std::invalid_argument("bench: no radii");
  for (double r : radii) {
    if (!(r > 0.0)) throw std::invalid_argument("bench: radii must be > 0");
  }
  if (orderings.empty()) throw std::invalid_argument("bench: no orderings");
  if (repetitions < 1) throw std::invalid_argument("bench: repetitions must be >= 1");
}

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

PointCloud uniform_cloud(int n, std::uint64_t seed) {
  Rng rng(derive_seed(seed, kStreamBench));
  PointCloud cloud;
  cloud.positions.reserve(n);
  for (int i = 0; i < n; ++i) {
    cloud.positions.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
  }
  cloud.refresh_bounds();
  return cloud;
}

std::vector<int> ordering_permutation(const PointCloud& cloud, BenchOrdering ordering, int bits,
                                      std::uint64_t seed) {
  switch (ordering) {
    case BenchOrdering::identity: {
      std::vector<int> perm(cloud.size());
      std::iota(perm.begin(), perm.end(), 0);
      return perm;
    }
    case BenchOrdering::random:
      return random_permutation(cloud.size(), seed);
    case BenchOrdering::xyz_grid:
      return order_points(cloud, OrderStrategy::xyz_grid, bits).perm;
    case BenchOrdering::morton:
      return order_points(cloud, OrderStrategy::morton, bits).perm;
  }
  throw std::invalid_argument("bad ordering");
}

// Median of `reps` timed runs of fn(), after one untimed warm-up.
std::pair<std::vector<double>, double> time_reps(int reps, const std::function<void()>& fn) {
  fn();
  std::vector<double> times(reps);
  for (int r = 0; r < reps; ++r) {
    const double t0 = now_seconds();
    fn();
    times[r] = now_seconds() - t0;
  }
  std::vector<double> sorted = times;
  std::sort(sorted.begin(), sorted.end());
  const int mid = reps / 2;
  const double median = reps % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  return {times, median};
}

void append_row(std::string& csv, int n, double radius, const std::string& ordering,
                const std::string& phase, const std::vector<double>& reps, double median) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%d,%g,", n, radius);
  csv += buf;
  csv += ordering;
  csv += ',';
  csv += phase;
  for (double t : reps) {
    std::snprintf(buf, sizeof(buf), ",%.6f", t);
    csv += buf;
  }
  std::snprintf(buf, sizeof(buf), ",%.6f\n", median);
  csv += buf;
}

}  // namespace

BenchResult bench_neighbors(const BenchConfig& config) {
  config.validate();
  BenchResult result;

  std::string timing = "n,radius,ordering,phase";
  for (int r = 1; r <= config.repetitions; ++r) timing += ",rep" + std::to_string(r);
  timing += ",median\n";
  std::string locality = "n,cell_size,radius,ordering,mean_rank_distance,ratio_vs_random\n";

  for (int n : config.sizes) {
    const PointCloud base = uniform_cloud(n, config.seed);

    // --- timing sweeps per ordering and radius ---
    for (BenchOrdering ord : config.orderings) {
      Ordering ordering;
      ordering.perm = ordering_permutation(base, ord, config.order_bits, config.seed);
      const PointCloud cloud = apply_ordering(base, ordering);

      for (double radius : config.radii) {
        const GridIndex grid = build_grid(cloud, radius);

        volatile long long sink = 0;
        auto [sweep_reps, sweep_median] = time_reps(config.repetitions, [&] {
          long long total = 0;
          for (int i = 0; i < cloud.size(); ++i) {
            total += static_cast<long long>(
                query_ball(grid, cloud, cloud.positions[i], radius).size());
          }
          sink = total;
        });
        append_row(timing, n, radius, to_string(ord), "grid_sweep", sweep_reps, sweep_median);
        result.grid_sweep_median = sweep_median;

        KernelSpec kernel{radius, config.kernel_resolution, KernelGeometry::ball};
        auto [gather_reps, gather_median] = time_reps(config.repetitions, [&] {
          auto bins = bin_neighbors(cloud, kernel, grid);
          sink = static_cast<long long>(bins->neighbor_ids.size());
        });
        append_row(timing, n, radius, to_string(ord), "conv_gather", gather_reps, gather_median);
      }
    }

    // --- brute-force reference sweep (ordering-independent) ---
    for (double radius : config.radii) {
      volatile long long sink = 0;
      auto [brute_reps, brute_median] = time_reps(config.repetitions, [&] {
        long long total = 0;
        for (int i = 0; i < base.size(); ++i) {
          total += static_cast<long long>(
              query_ball_bruteforce(base, base.positions[i], radius).size());
        }
        sink = total;
      });
      append_row(timing, n, radius, "identity", "brute_sweep", brute_reps, brute_median);
      result.brute_sweep_median = brute_median;
    }

    // --- locality statistic at radius 4 * cell_size, cell_size = n^(-1/3) ---
    const double cell_size = std::cbrt(1.0 / static_cast<double>(n));
    const double loc_radius = 4.0 * cell_size;
    const GridIndex loc_grid = build_grid(base, cell_size);
    double random_mrd = 0.0;
    std::vector<LocalityRow> rows;
    for (BenchOrdering ord : config.orderings) {
      std::vector<int> perm = ordering_permutation(base, ord, config.order_bits, config.seed);
      LocalityRow row;
      row.n = n;
      row.cell_size = cell_size;
      row.radius = loc_radius;
      row.ordering = ord;
      row.mean_rank_distance =
          mean_neighbor_rank_distance(base, loc_grid, loc_radius, inverse_permutation(perm));
      if (ord == BenchOrdering::random) random_mrd = row.mean_rank_distance;
      rows.push_back(row);
    }
    for (LocalityRow& row : rows) {
      row.ratio_vs_random = random_mrd > 0.0 ? row.mean_rank_distance / random_mrd : 0.0;
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%s,%.3f,%.6f\n", row.n, row.cell_size,
                    row.radius, to_string(row.ordering).c_str(), row.mean_rank_distance,
                    row.ratio_vs_random);
      locality += buf;
      if (row.ordering == BenchOrdering::morton) {
        result.morton_vs_random_ratio = row.ratio_vs_random;
      }
      result.locality.push_back(row);
    }
  }

  fs::create_directories(config.out_dir);
  result.timing_csv = (fs::path(config.out_dir) / "bench_timing.csv").string();
  result.locality_csv = (fs::path(config.out_dir) / "bench_locality.csv").string();
  std::ofstream tf(result.timing_csv, std::ios::binary);
  if (!tf) throw std::runtime_error("cannot write " + result.timing_csv);
  tf << timing;
  std::ofstream lf(result.locality_csv, std::ios::binary);
  if (!lf) throw std::runtime_error("cannot write " + result.locality_csv);
  lf << locality;
  return result;
}

BenchOrdering bench_ordering_from_string(const std::string& s) {
  if (s == "identity") return BenchOrdering::identity;
  if (s == "random") return BenchOrdering::random;
  if (s == "xyz" || s == "xyz-grid") return BenchOrdering::xyz_grid;
  if (s == "morton") return BenchOrdering::morton;
  throw std::invalid_argument("unknown bench ordering: " + s);
}

std::string to_string(BenchOrdering o) {
  switch (o) {
    case BenchOrdering::identity: return "identity";
    case BenchOrdering::random: return "random";
    case BenchOrdering::xyz_grid: return "xyz";
    case BenchOrdering::morton: return "morton";
  }
  return "?";
}

}  // namespace pwc
