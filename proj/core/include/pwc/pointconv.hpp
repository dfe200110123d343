#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

#include "pwc/cloud.hpp"
#include "pwc/grid.hpp"
#include "pwc/matrix.hpp"
#include "pwc/parallel.hpp"

namespace pwc {

enum class KernelGeometry { ball, cube };

// Kernel support centered on a point: a radius-r region subdivided into
// R^3 cells of width 2r/R per axis. R is odd so the center point always
// falls into the unique middle cell.
struct KernelSpec {
  double radius = 0.0;
  int resolution = 3;
  KernelGeometry geometry = KernelGeometry::ball;

  int cell_count() const { return resolution * resolution * resolution; }
  double cell_width() const { return 2.0 * radius / resolution; }

  // Ball-query radius that covers the whole support. The cube support
  // reaches out to radius*sqrt(3) at its corners.
  double gather_radius() const {
    return geometry == KernelGeometry::ball ? radius : radius * 1.7320508075688772;
  }

  void validate() const {
    if (!(radius > 0.0)) throw std::invalid_argument("kernel radius must be > 0");
    if (resolution < 1 || resolution % 2 == 0) {
      throw std::invalid_argument("kernel resolution must be an odd integer >= 1");
    }
  }
};

inline constexpr int kCellOutside = -1;

// Cell of the kernel support that offset = p_j - p_i falls into, linearized
// as (cx*R + cy)*R + cz, or kCellOutside beyond the support. Offsets with a
// component exactly at +/-r clamp into the edge cell (closed support).
inline int assign_cell(const Vec3& offset, const KernelSpec& kernel) {
  const double r = kernel.radius;
  if (kernel.geometry == KernelGeometry::ball) {
    if (offset.squared_norm() > r * r) return kCellOutside;
  } else {
    if (offset.max_abs() > r) return kCellOutside;
  }
  const int res = kernel.resolution;
  const double width = kernel.cell_width();
  auto bin = [&](double v) {
    int c = static_cast<int>(std::floor((v + r) / width));
    return c < 0 ? 0 : (c >= res ? res - 1 : c);
  };
  return (bin(offset.x) * res + bin(offset.y)) * res + bin(offset.z);
}

// Neighborhoods of one (cloud, kernel) pair: for every point i the ids
// falling into its kernel support together with their cell, stored CSR
// style, plus the per-(i, cell) occupancy counts. Depends only on geometry,
// so it can be built once per cloud and reused across epochs and feature
// values.
struct BinCache {
  int num_points = 0;
  int cells_per_point = 0;
  std::vector<int> offsets;         // size num_points + 1
  std::vector<int> neighbor_ids;    // entry -> id j (ascending within a point)
  std::vector<int> neighbor_cells;  // entry -> cell k
  std::vector<int> cell_counts;     // num_points * cells_per_point

  int count(int i, int k) const {
    return cell_counts[static_cast<std::size_t>(i) * cells_per_point + k];
  }
};

std::shared_ptr<const BinCache> bin_neighbors(const PointCloud& cloud, const KernelSpec& kernel,
                                              const GridIndex& index);

// Weights laid out [c_out][c_in][cells] plus one bias per output channel.
// Doubles as the gradient container of the same shape.
template <class T>
struct ConvParams {
  int c_in = 0, c_out = 0, cells = 0;
  std::vector<T> weights;
  std::vector<T> bias;

  ConvParams() = default;
  ConvParams(int in, int out, int k)
      : c_in(in),
        c_out(out),
        cells(k),
        weights(static_cast<std::size_t>(out) * in * k, T(0)),
        bias(out, T(0)) {}

  T& w(int o, int c, int k) {
    return weights[(static_cast<std::size_t>(o) * c_in + c) * cells + k];
  }
  const T& w(int o, int c, int k) const {
    return weights[(static_cast<std::size_t>(o) * c_in + c) * cells + k];
  }
};

// Everything the backward pass needs from the forward pass.
template <class T>
struct ConvCache {
  std::shared_ptr<const BinCache> bins;
  Mat<T> input;
};

namespace detail {

template <class T>
void check_conv_shapes(const BinCache& bins, const Mat<T>& feats, const ConvParams<T>& params) {
  if (feats.rows != bins.num_points) {
    throw std::invalid_argument("pointconv: feature rows do not match neighborhood cache");
  }
  if (feats.cols != params.c_in) {
    throw std::invalid_argument("pointconv: input channel mismatch");
  }
  if (params.cells != bins.cells_per_point) {
    throw std::invalid_argument("pointconv: kernel cell count mismatch");
  }
}

// Accumulates per-cell feature sums for point i. `touched` lists the cells
// written; `sums` entries outside it are stale.
template <class T>
void cell_feature_sums(const BinCache& bins, const Mat<T>& feats, int i, std::vector<T>& sums,
                       std::vector<int>& touched, std::vector<char>& seen) {
  const int c_in = feats.cols;
  for (int k : touched) seen[k] = 0;
  touched.clear();
  for (int e = bins.offsets[i]; e < bins.offsets[i + 1]; ++e) {
    const int j = bins.neighbor_ids[e];
    const int k = bins.neighbor_cells[e];
    T* acc = sums.data() + static_cast<std::size_t>(k) * c_in;
    if (!seen[k]) {
      seen[k] = 1;
      touched.push_back(k);
      for (int c = 0; c < c_in; ++c) acc[c] = T(0);
    }
    const T* fj = feats.row(j);
    for (int c = 0; c < c_in; ++c) acc[c] += fj[c];
  }
}

}  // namespace detail

// out[i][o] = bias[o] + sum_k sum_c w[o][c][k] * mean of feats[.][c] over
// the points in cell k of point i's support. Empty cells contribute zero;
// the output has one row per input point.
template <class T>
Mat<T> conv_forward(const BinCache& bins, const Mat<T>& feats, const ConvParams<T>& params,
                    int workers = 1) {
  detail::check_conv_shapes(bins, feats, params);
  const int c_in = params.c_in, c_out = params.c_out, cells = params.cells;
  Mat<T> out(bins.num_points, c_out);

  parallel_for(bins.num_points, workers, [&](int, int lo, int hi) {
    std::vector<T> sums(static_cast<std::size_t>(cells) * c_in);
    std::vector<int> touched;
    std::vector<char> seen(cells, 0);
    touched.reserve(cells);
    for (int i = lo; i < hi; ++i) {
      detail::cell_feature_sums(bins, feats, i, sums, touched, seen);
      T* orow = out.row(i);
      for (int o = 0; o < c_out; ++o) orow[o] = params.bias[o];
      for (int k : touched) {
        const T inv_n = T(1) / static_cast<T>(bins.count(i, k));
        const T* sum = sums.data() + static_cast<std::size_t>(k) * c_in;
        for (int o = 0; o < c_out; ++o) {
          T acc = T(0);
          for (int c = 0; c < c_in; ++c) acc += params.w(o, c, k) * sum[c];
          orow[o] += acc * inv_n;
        }
      }
    }
  });
  return out;
}

// Convenience wrapper that builds the neighborhood cache on the fly.
template <class T>
Mat<T> conv_forward(const PointCloud& cloud, const Mat<T>& feats, const ConvParams<T>& params,
                    const KernelSpec& kernel, const GridIndex& index, ConvCache<T>* cache = nullptr,
                    int workers = 1) {
  auto bins = bin_neighbors(cloud, kernel, index);
  Mat<T> out = conv_forward(*bins, feats, params, workers);
  if (cache) {
    cache->bins = std::move(bins);
    cache->input = feats;
  }
  return out;
}

template <class T>
struct ConvGrads {
  ConvParams<T> params;  // d loss / d weights, d loss / d bias
  Mat<T> input;          // d loss / d input features
};

// grad_w[o][c][k]  = sum_i grad_out[i][o] * mean over cell k of feats[.][c]
// grad_bias[o]     = sum_i grad_out[i][o]
// grad_in[j][c]    = sum over (i,k) with j in cell k of i, of
//                    sum_o grad_out[i][o] * w[o][c][k] / |cell k of i|
// Per-worker partial buffers are reduced in ascending worker order, so the
// result is deterministic for a fixed worker count.
template <class T>
ConvGrads<T> conv_backward(const ConvCache<T>& cache, const ConvParams<T>& params,
                           const Mat<T>& grad_out, int workers = 1) {
  if (!cache.bins) throw std::invalid_argument("conv_backward: cache has no neighborhoods");
  const BinCache& bins = *cache.bins;
  detail::check_conv_shapes(bins, cache.input, params);
  if (grad_out.rows != bins.num_points || grad_out.cols != params.c_out) {
    throw std::invalid_argument("conv_backward: grad_out shape mismatch");
  }
  const int c_in = params.c_in, c_out = params.c_out, cells = params.cells;

  if (workers > bins.num_points) workers = bins.num_points > 0 ? bins.num_points : 1;
  if (workers < 1) workers = 1;
  std::vector<ConvGrads<T>> partial(workers);
  for (auto& p : partial) {
    p.params = ConvParams<T>(c_in, c_out, cells);
    p.input = Mat<T>(bins.num_points, c_in);
  }

  parallel_for(bins.num_points, workers, [&](int w, int lo, int hi) {
    ConvGrads<T>& g = partial[w];
    std::vector<T> sums(static_cast<std::size_t>(cells) * c_in);
    std::vector<T> gcol(static_cast<std::size_t>(cells) * c_in);  // 1/n * sum_o go[o] w[o][c][k]
    std::vector<int> touched;
    std::vector<char> seen(cells, 0);
    touched.reserve(cells);
    for (int i = lo; i < hi; ++i) {
      detail::cell_feature_sums(bins, cache.input, i, sums, touched, seen);
      const T* go = grad_out.row(i);
      for (int o = 0; o < c_out; ++o) g.params.bias[o] += go[o];
      for (int k : touched) {
        const T inv_n = T(1) / static_cast<T>(bins.count(i, k));
        const T* sum = sums.data() + static_cast<std::size_t>(k) * c_in;
        T* gk = gcol.data() + static_cast<std::size_t>(k) * c_in;
        for (int c = 0; c < c_in; ++c) {
          T acc = T(0);
          for (int o = 0; o < c_out; ++o) {
            g.params.w(o, c, k) += go[o] * sum[c] * inv_n;
            acc += go[o] * params.w(o, c, k);
          }
          gk[c] = acc * inv_n;
        }
      }
      for (int e = bins.offsets[i]; e < bins.offsets[i + 1]; ++e) {
        const int j = bins.neighbor_ids[e];
        const T* gk = gcol.data() + static_cast<std::size_t>(bins.neighbor_cells[e]) * c_in;
        T* gj = g.input.row(j);
        for (int c = 0; c < c_in; ++c) gj[c] += gk[c];
      }
    }
  });

  ConvGrads<T> total = std::move(partial[0]);
  for (int w = 1; w < workers; ++w) {
    const ConvGrads<T>& p = partial[w];
    for (std::size_t n = 0; n < total.params.weights.size(); ++n) {
      total.params.weights[n] += p.params.weights[n];
    }
    for (std::size_t n = 0; n < total.params.bias.size(); ++n) total.params.bias[n] += p.params.bias[n];
    for (std::size_t n = 0; n < total.input.v.size(); ++n) total.input.v[n] += p.input.v[n];
  }
  return total;
}

// A self-contained operator instance for gradient checking.
struct ConvInstance {
  PointCloud cloud;
  Mat<double> feats;
  ConvParams<double> params;
  KernelSpec kernel;
};

// Random instance with points in the unit cube, a radius wide enough to
// produce multi-point neighborhoods, and weights/features in [-1, 1].
ConvInstance random_conv_instance(std::uint64_t seed, int max_points, int max_c_in, int max_c_out,
                                  int resolution, KernelGeometry geometry = KernelGeometry::ball);

// Central-difference check of conv_backward on loss L = sum out^2 over
// every weight, bias and input coordinate. Returns the max over coordinates
// of |analytic - numeric| / max(1, |numeric|). The instance must stay small
// (at most 5000 perturbable coordinates).
double finite_diff_check(const ConvInstance& instance, double step);

}  // namespace pwc
