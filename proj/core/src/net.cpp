#include "pwc/net.hpp"

#include <cmath>
#include <stdexcept>

#include "pwc/rng.hpp"

namespace pwc {

void NetworkSpec::validate() const {
  if (layers.empty()) throw std::invalid_argument("network has no layers");
  if (input_channels < 1) throw std::invalid_argument("input channel count must be >= 1");
  if (num_classes < 2) throw std::invalid_argument("class count must be >= 2");

  int channels = input_channels;
  int pools = 0;
  bool after_pool = false;
  for (const LayerDesc& layer : layers) {
    switch (layer.kind) {
      case LayerKind::pointconv:
        if (after_pool) throw std::invalid_argument("pointconv cannot follow global pooling");
        layer.kernel.validate();
        if (layer.c_out < 1) throw std::invalid_argument("pointconv c_out must be >= 1");
        channels = layer.c_out;
        break;
      case LayerKind::relu:
        break;
      case LayerKind::global_pool:
        if (task == Task::segmentation) {
          throw std::invalid_argument("segmentation networks must not pool over points");
        }
        ++pools;
        after_pool = true;
        break;
      case LayerKind::dense:
        if (layer.c_out < 1) throw std::invalid_argument("dense c_out must be >= 1");
        channels = layer.c_out;
        break;
    }
  }
  if (task == Task::classification && pools != 1) {
    throw std::invalid_argument("classification networks need exactly one global pool");
  }
  if (channels != num_classes) {
    throw std::invalid_argument("final layer width " + std::to_string(channels) +
                                " does not match class count " + std::to_string(num_classes));
  }
}

int NetworkSpec::conv_layer_count() const {
  int n = 0;
  for (const LayerDesc& l : layers) n += l.kind == LayerKind::pointconv ? 1 : 0;
  return n;
}

namespace {

struct BlockShape {
  std::size_t w = 0, b = 0;
  int fan_in = 0, fan_out = 0;
};

BlockShape block_shape(const LayerDesc& layer, int c_in) {
  BlockShape s;
  if (layer.kind == LayerKind::pointconv) {
    const int k = layer.kernel.cell_count();
    s.w = static_cast<std::size_t>(layer.c_out) * c_in * k;
    s.b = static_cast<std::size_t>(layer.c_out);
    s.fan_in = c_in * k;
    s.fan_out = layer.c_out * k;
  } else if (layer.kind == LayerKind::dense) {
    s.w = static_cast<std::size_t>(layer.c_out) * c_in;
    s.b = static_cast<std::size_t>(layer.c_out);
    s.fan_in = c_in;
    s.fan_out = layer.c_out;
  }
  return s;
}

int layer_out_channels(const LayerDesc& layer, int c_in) {
  return (layer.kind == LayerKind::pointconv || layer.kind == LayerKind::dense) ? layer.c_out
                                                                                : c_in;
}

}  // namespace

template <class T>
ModelState<T> init_model(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(derive_seed(seed, kStreamInit));
  ModelState<T> state;
  state.params.resize(spec.layers.size());
  state.m.resize(spec.layers.size());
  state.v.resize(spec.layers.size());

  int channels = spec.input_channels;
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    const BlockShape shape = block_shape(spec.layers[l], channels);
    if (shape.w > 0) {
      const double s = std::sqrt(6.0 / (shape.fan_in + shape.fan_out));
      state.params[l].w.resize(shape.w);
      for (auto& x : state.params[l].w) x = static_cast<T>(rng.uniform(-s, s));
      state.params[l].b.assign(shape.b, T(0));
      state.m[l].w.assign(shape.w, T(0));
      state.m[l].b.assign(shape.b, T(0));
      state.v[l].w.assign(shape.w, T(0));
      state.v[l].b.assign(shape.b, T(0));
    }
    channels = layer_out_channels(spec.layers[l], channels);
  }
  return state;
}

int feature_channels(FeatureMode mode, int attr_channels) {
  int base = mode == FeatureMode::const_xyz ? 4 : (mode == FeatureMode::xyz ? 3 : 1);
  return base + attr_channels;
}

template <class T>
Mat<T> make_input_features(const PointCloud& cloud, FeatureMode mode) {
  const int cols = feature_channels(mode, cloud.attr_channels);
  Mat<T> feats(cloud.size(), cols);
  for (int i = 0; i < cloud.size(); ++i) {
    T* row = feats.row(i);
    int c = 0;
    if (mode == FeatureMode::const_xyz || mode == FeatureMode::constant) row[c++] = T(1);
    if (mode == FeatureMode::const_xyz || mode == FeatureMode::xyz) {
      row[c++] = static_cast<T>(cloud.positions[i].x);
      row[c++] = static_cast<T>(cloud.positions[i].y);
      row[c++] = static_cast<T>(cloud.positions[i].z);
    }
    for (int a = 0; a < cloud.attr_channels; ++a) {
      row[c++] = static_cast<T>(cloud.attributes[static_cast<std::size_t>(i) * cloud.attr_channels + a]);
    }
  }
  return feats;
}

CloudGeometry build_geometry(const NetworkSpec& spec, const PointCloud& cloud) {
  CloudGeometry geometry;
  for (const LayerDesc& layer : spec.layers) {
    if (layer.kind != LayerKind::pointconv) continue;
    GridIndex index = build_grid(cloud, layer.kernel.gather_radius());
    geometry.bins.push_back(bin_neighbors(cloud, layer.kernel, index));
  }
  return geometry;
}

namespace {

template <class T>
Mat<T> dense_forward(const Mat<T>& in, const ParamBlock<T>& params, int c_out) {
  const int c_in = in.cols;
  Mat<T> out(in.rows, c_out);
  for (int r = 0; r < in.rows; ++r) {
    const T* x = in.row(r);
    T* y = out.row(r);
    for (int o = 0; o < c_out; ++o) {
      T acc = params.b[o];
      const T* wrow = params.w.data() + static_cast<std::size_t>(o) * c_in;
      for (int c = 0; c < c_in; ++c) acc += wrow[c] * x[c];
      y[o] = acc;
    }
  }
  return out;
}

}  // namespace

template <class T>
Mat<T> net_forward(const NetworkSpec& spec, const ModelState<T>& state, const Mat<T>& input,
                   const CloudGeometry& geometry, NetCaches<T>* caches, int workers) {
  if (input.cols != spec.input_channels) {
    throw std::invalid_argument("net_forward: input channel mismatch");
  }
  if (state.params.size() != spec.layers.size()) {
    throw std::invalid_argument("net_forward: model state does not match spec");
  }
  if (caches) {
    caches->clear();
    caches->resize(spec.layers.size());
  }

  Mat<T> x = input;
  int conv_idx = 0;
  for (std::size_t l = 0; l < spec.layers.size(); ++l) {
    const LayerDesc& layer = spec.layers[l];
    switch (layer.kind) {
      case LayerKind::pointconv: {
        if (conv_idx >= static_cast<int>(geometry.bins.size())) {
          throw std::invalid_argument("net_forward: geometry cache is missing conv layers");
        }
        auto bins = geometry.bins[conv_idx++];
        ConvParams<T> params;
        params.c_in = x.cols;
        params.c_out = layer.c_out;
        params.cells = layer.kernel.cell_count();
        params.weights = state.params[l].w;
        params.bias = state.params[l].b;
        Mat<T> y = conv_forward(*bins, x, params, workers);
        if (caches) {
          (*caches)[l].conv.bins = bins;
          (*caches)[l].conv.input = std::move(x);
        }
        x = std::move(y);
        break;
      }
      case LayerKind::relu: {
        for (auto& v : x.v) v = v > T(0) ? v : T(0);
        if (caches) (*caches)[l].relu_out = x;
        break;
      }
      case LayerKind::global_pool: {
        if (x.rows < 1) throw std::invalid_argument("net_forward: pooling over zero rows");
        Mat<T> y(1, x.cols);
        const T inv_n = T(1) / static_cast<T>(x.rows);
        for (int r = 0; r < x.rows; ++r) {
          const T* row = x.row(r);
          for (int c = 0; c < x.cols; ++c) y.v[c] += row[c];
        }
        for (auto& v : y.v) v *= inv_n;
        if (caches) (*caches)[l].pool_rows = x.rows;
        x = std::move(y);
        break;
      }
      case LayerKind::dense: {
        Mat<T> y = dense_forward(x, state.params[l], layer.c_out);
        if (caches) (*caches)[l].dense_in = std::move(x);
        x = std::move(y);
        break;
      }
    }
  }
  return x;
}

template <class T>
NetGrads<T> net_backward(const NetworkSpec& spec, const ModelState<T>& state,
                         const NetCaches<T>& caches, const Mat<T>& grad_out, int workers) {
  if (caches.size() != spec.layers.size()) {
    throw std::invalid_argument("net_backward: caches do not match spec");
  }
  NetGrads<T> grads;
  grads.blocks.resize(spec.layers.size());

  Mat<T> g = grad_out;
  for (int l = static_cast<int>(spec.layers.size()) - 1; l >= 0; --l) {
    const LayerDesc& layer = spec.layers[l];
    switch (layer.kind) {
      case LayerKind::pointconv: {
        const ConvCache<T>& cache = caches[l].conv;
        ConvParams<T> params;
        params.c_in = cache.input.cols;
        params.c_out = layer.c_out;
        params.cells = layer.kernel.cell_count();
        params.weights = state.params[l].w;
        params.bias = state.params[l].b;
        ConvGrads<T> cg = conv_backward(cache, params, g, workers);
        grads.blocks[l].w = std::move(cg.params.weights);
        grads.blocks[l].b = std::move(cg.params.bias);
        g = std::move(cg.input);
        break;
      }
      case LayerKind::relu: {
        const Mat<T>& out = caches[l].relu_out;
        if (!out.same_shape(g)) throw std::invalid_argument("net_backward: relu cache mismatch");
        for (std::size_t n = 0; n < g.v.size(); ++n) {
          if (!(out.v[n] > T(0))) g.v[n] = T(0);
        }
        break;
      }
      case LayerKind::global_pool: {
        const int rows = caches[l].pool_rows;
        if (g.rows != 1) throw std::invalid_argument("net_backward: pool cache mismatch");
        Mat<T> gin(rows, g.cols);
        const T inv_n = T(1) / static_cast<T>(rows);
        for (int r = 0; r < rows; ++r) {
          T* row = gin.row(r);
          for (int c = 0; c < g.cols; ++c) row[c] = g.v[c] * inv_n;
        }
        g = std::move(gin);
        break;
      }
      case LayerKind::dense: {
        const Mat<T>& in = caches[l].dense_in;
        const int c_in = in.cols, c_out = layer.c_out;
        if (g.rows != in.rows || g.cols != c_out) {
          throw std::invalid_argument("net_backward: dense cache mismatch");
        }
        grads.blocks[l].w.assign(static_cast<std::size_t>(c_out) * c_in, T(0));
        grads.blocks[l].b.assign(c_out, T(0));
        Mat<T> gin(in.rows, c_in);
        for (int r = 0; r < in.rows; ++r) {
          const T* grow = g.row(r);
          const T* xrow = in.row(r);
          T* girow = gin.row(r);
          for (int o = 0; o < c_out; ++o) {
            grads.blocks[l].b[o] += grow[o];
            T* wg = grads.blocks[l].w.data() + static_cast<std::size_t>(o) * c_in;
            const T* w = state.params[l].w.data() + static_cast<std::size_t>(o) * c_in;
            for (int c = 0; c < c_in; ++c) {
              wg[c] += grow[o] * xrow[c];
              girow[c] += grow[o] * w[c];
            }
          }
        }
        g = std::move(gin);
        break;
      }
    }
  }
  grads.input = std::move(g);
  return grads;
}

template <class T>
std::pair<double, Mat<T>> softmax_xent(const Mat<T>& logits, const std::vector<int>& targets) {
  if (logits.cols < 2) throw std::invalid_argument("softmax_xent: need at least 2 classes");
  if (static_cast<int>(targets.size()) != logits.rows) {
    throw std::invalid_argument("softmax_xent: one target per row required");
  }
  const int rows = logits.rows, classes = logits.cols;
  Mat<T> grad(rows, classes);
  double loss = 0.0;
  const T inv_rows = T(1) / static_cast<T>(rows);
  for (int r = 0; r < rows; ++r) {
    const int target = targets[r];
    if (target < 0 || target >= classes) {
      throw std::invalid_argument("softmax_xent: target class out of range");
    }
    const T* l = logits.row(r);
    T max = l[0];
    for (int c = 1; c < classes; ++c) max = l[c] > max ? l[c] : max;
    double denom = 0.0;
    for (int c = 0; c < classes; ++c) denom += std::exp(static_cast<double>(l[c] - max));
    loss += std::log(denom) - static_cast<double>(l[target] - max);
    T* g = grad.row(r);
    for (int c = 0; c < classes; ++c) {
      double p = std::exp(static_cast<double>(l[c] - max)) / denom;
      g[c] = (static_cast<T>(p) - (c == target ? T(1) : T(0))) * inv_rows;
    }
  }
  return {loss / rows, std::move(grad)};
}

namespace {

template <class T>
void check_grads(const ModelState<T>& state, const std::vector<ParamBlock<T>>& grads) {
  if (grads.size() != state.params.size()) {
    throw std::invalid_argument("optimizer: gradient block count mismatch");
  }
  for (std::size_t l = 0; l < grads.size(); ++l) {
    if (grads[l].w.size() != state.params[l].w.size() ||
        grads[l].b.size() != state.params[l].b.size()) {
      throw std::invalid_argument("optimizer: gradient shape mismatch");
    }
  }
}

}  // namespace

template <class T>
void sgd_step(ModelState<T>& state, const std::vector<ParamBlock<T>>& grads, double lr,
              double momentum) {
  if (lr < 0.0) throw std::invalid_argument("sgd_step: negative learning rate");
  if (momentum < 0.0 || momentum >= 1.0) throw std::invalid_argument("sgd_step: momentum not in [0,1)");
  check_grads(state, grads);
  const T lr_t = static_cast<T>(lr), mom = static_cast<T>(momentum);
  auto update = [&](std::vector<T>& p, std::vector<T>& vel, const std::vector<T>& g) {
    for (std::size_t n = 0; n < p.size(); ++n) {
      vel[n] = mom * vel[n] + g[n];
      p[n] -= lr_t * vel[n];
    }
  };
  for (std::size_t l = 0; l < state.params.size(); ++l) {
    update(state.params[l].w, state.m[l].w, grads[l].w);
    if (!state.bias_frozen) update(state.params[l].b, state.m[l].b, grads[l].b);
  }
  ++state.step;
}

template <class T>
void adam_step(ModelState<T>& state, const std::vector<ParamBlock<T>>& grads, double lr,
               double beta1, double beta2, double eps) {
  if (lr < 0.0) throw std::invalid_argument("adam_step: negative learning rate");
  check_grads(state, grads);
  const long long t = state.step + 1;
  const T corr1 = static_cast<T>(1.0 - std::pow(beta1, static_cast<double>(t)));
  const T corr2 = static_cast<T>(1.0 - std::pow(beta2, static_cast<double>(t)));
  const T b1 = static_cast<T>(beta1), b2 = static_cast<T>(beta2);
  const T lr_t = static_cast<T>(lr), eps_t = static_cast<T>(eps);
  auto update = [&](std::vector<T>& p, std::vector<T>& m, std::vector<T>& v,
                    const std::vector<T>& g) {
    for (std::size_t n = 0; n < p.size(); ++n) {
      m[n] = b1 * m[n] + (T(1) - b1) * g[n];
      v[n] = b2 * v[n] + (T(1) - b2) * g[n] * g[n];
      const T mhat = m[n] / corr1;
      const T vhat = v[n] / corr2;
      p[n] -= lr_t * mhat / (std::sqrt(vhat) + eps_t);
    }
  };
  for (std::size_t l = 0; l < state.params.size(); ++l) {
    update(state.params[l].w, state.m[l].w, state.v[l].w, grads[l].w);
    if (!state.bias_frozen) update(state.params[l].b, state.m[l].b, state.v[l].b, grads[l].b);
  }
  state.step = t;
}

FeatureMode feature_mode_from_string(const std::string& s) {
  if (s == "const+xyz") return FeatureMode::const_xyz;
  if (s == "xyz") return FeatureMode::xyz;
  if (s == "const") return FeatureMode::constant;
  throw std::invalid_argument("unknown feature mode: " + s);
}

std::string to_string(FeatureMode mode) {
  switch (mode) {
    case FeatureMode::const_xyz: return "const+xyz";
    case FeatureMode::xyz: return "xyz";
    case FeatureMode::constant: return "const";
  }
  return "?";
}

template ModelState<float> init_model<float>(const NetworkSpec&, std::uint64_t);
template ModelState<double> init_model<double>(const NetworkSpec&, std::uint64_t);
template Mat<float> make_input_features<float>(const PointCloud&, FeatureMode);
template Mat<double> make_input_features<double>(const PointCloud&, FeatureMode);
template Mat<float> net_forward<float>(const NetworkSpec&, const ModelState<float>&,
                                       const Mat<float>&, const CloudGeometry&, NetCaches<float>*,
                                       int);
template Mat<double> net_forward<double>(const NetworkSpec&, const ModelState<double>&,
                                         const Mat<double>&, const CloudGeometry&,
                                         NetCaches<double>*, int);
template NetGrads<float> net_backward<float>(const NetworkSpec&, const ModelState<float>&,
                                             const NetCaches<float>&, const Mat<float>&, int);
template NetGrads<double> net_backward<double>(const NetworkSpec&, const ModelState<double>&,
                                               const NetCaches<double>&, const Mat<double>&, int);
template std::pair<double, Mat<float>> softmax_xent<float>(const Mat<float>&,
                                                           const std::vector<int>&);
template std::pair<double, Mat<double>> softmax_xent<double>(const Mat<double>&,
                                                             const std::vector<int>&);
template void sgd_step<float>(ModelState<float>&, const std::vector<ParamBlock<float>>&, double,
                              double);
template void sgd_step<double>(ModelState<double>&, const std::vector<ParamBlock<double>>&, double,
                               double);
template void adam_step<float>(ModelState<float>&, const std::vector<ParamBlock<float>>&, double,
                               double, double, double);
template void adam_step<double>(ModelState<double>&, const std::vector<ParamBlock<double>>&,
                                double, double, double, double);

}  // namespace pwc
