#include "pwc/pointconv.hpp"

#include "pwc/rng.hpp"

namespace pwc {

std::shared_ptr<const BinCache> bin_neighbors(const PointCloud& cloud, const KernelSpec& kernel,
                                              const GridIndex& index) {
  kernel.validate();
  if (index.num_points != cloud.size()) {
    throw std::invalid_argument("bin_neighbors: index was built over a different cloud");
  }
  auto cache = std::make_shared<BinCache>();
  cache->num_points = cloud.size();
  cache->cells_per_point = kernel.cell_count();
  cache->offsets.assign(cloud.size() + 1, 0);
  cache->cell_counts.assign(static_cast<std::size_t>(cloud.size()) * kernel.cell_count(), 0);

  const double gather = kernel.gather_radius();
  for (int i = 0; i < cloud.size(); ++i) {
    const Vec3 center = cloud.positions[i];
    for (int j : query_ball(index, cloud, center, gather)) {
      const int cell = assign_cell(cloud.positions[j] - center, kernel);
      if (cell == kCellOutside) continue;
      cache->neighbor_ids.push_back(j);
      cache->neighbor_cells.push_back(cell);
      ++cache->cell_counts[static_cast<std::size_t>(i) * cache->cells_per_point + cell];
    }
    cache->offsets[i + 1] = static_cast<int>(cache->neighbor_ids.size());
  }
  return cache;
}

ConvInstance random_conv_instance(std::uint64_t seed, int max_points, int max_c_in, int max_c_out,
                                  int resolution, KernelGeometry geometry) {
  if (max_points < 4) throw std::invalid_argument("random_conv_instance: need max_points >= 4");
  Rng rng(derive_seed(seed, kStreamPerm + 1));
  ConvInstance inst;
  const int n = 4 + static_cast<int>(rng.uniform_int(static_cast<std::uint32_t>(max_points - 3)));
  const int c_in = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint32_t>(max_c_in)));
  const int c_out = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint32_t>(max_c_out)));

  inst.cloud.positions.reserve(n);
  for (int i = 0; i < n; ++i) {
    inst.cloud.positions.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
  }
  inst.cloud.refresh_bounds();

  inst.kernel.radius = rng.uniform(0.25, 0.5);
  inst.kernel.resolution = resolution;
  inst.kernel.geometry = geometry;
  inst.kernel.validate();

  inst.feats = Mat<double>(n, c_in);
  for (auto& x : inst.feats.v) x = rng.uniform(-1.0, 1.0);
  inst.params = ConvParams<double>(c_in, c_out, inst.kernel.cell_count());
  for (auto& x : inst.params.weights) x = rng.uniform(-1.0, 1.0);
  for (auto& x : inst.params.bias) x = rng.uniform(-0.5, 0.5);
  return inst;
}

namespace {

double conv_loss(const BinCache& bins, const Mat<double>& feats, const ConvParams<double>& params) {
  Mat<double> out = conv_forward(bins, feats, params);
  double loss = 0.0;
  for (double x : out.v) loss += x * x;
  return loss;
}

}  // namespace

double finite_diff_check(const ConvInstance& instance, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("finite_diff_check: step must be > 0");
  const std::size_t coords =
      instance.params.weights.size() + instance.params.bias.size() + instance.feats.v.size();
  if (coords > 5000) {
    throw std::invalid_argument("finite_diff_check: instance too large to perturb");
  }

  GridIndex index = build_grid(instance.cloud, instance.kernel.gather_radius());
  auto bins = bin_neighbors(instance.cloud, instance.kernel, index);

  Mat<double> out = conv_forward(*bins, instance.feats, instance.params);
  Mat<double> grad_out = out;
  for (double& x : grad_out.v) x *= 2.0;  // d(sum out^2)/d out
  ConvCache<double> cache{bins, instance.feats};
  ConvGrads<double> analytic = conv_backward(cache, instance.params, grad_out);

  double max_rel = 0.0;
  auto update = [&](double a, double n) {
    double rel = std::fabs(a - n) / std::max(1.0, std::fabs(n));
    if (rel > max_rel) max_rel = rel;
  };
  auto probe = [&](double& slot, const Mat<double>& feats, const ConvParams<double>& params,
                   double analytic_g) {
    const double saved = slot;
    slot = saved + step;
    const double up = conv_loss(*bins, feats, params);
    slot = saved - step;
    const double down = conv_loss(*bins, feats, params);
    slot = saved;
    update(analytic_g, (up - down) / (2.0 * step));
  };

  ConvParams<double> params = instance.params;
  Mat<double> feats = instance.feats;
  for (std::size_t n = 0; n < params.weights.size(); ++n) {
    probe(params.weights[n], feats, params, analytic.params.weights[n]);
  }
  for (std::size_t n = 0; n < params.bias.size(); ++n) {
    probe(params.bias[n], feats, params, analytic.params.bias[n]);
  }
  for (std::size_t n = 0; n < feats.v.size(); ++n) {
    probe(feats.v[n], feats, params, analytic.input.v[n]);
  }
  return max_rel;
}

}  // namespace pwc
