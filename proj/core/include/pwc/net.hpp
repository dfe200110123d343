#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pwc/dataset.hpp"
#include "pwc/pointconv.hpp"

namespace pwc {

enum class LayerKind { pointconv, relu, global_pool, dense };

struct LayerDesc {
  LayerKind kind = LayerKind::relu;
  KernelSpec kernel;  // pointconv only
  int c_out = 0;      // pointconv and dense
};

// Ordered layer stack. Classification networks contain exactly one global
// average pool followed only by dense/relu layers; segmentation networks
// contain none, so every layer keeps one row per point.
struct NetworkSpec {
  Task task = Task::classification;
  int input_channels = 4;
  int num_classes = 0;
  std::vector<LayerDesc> layers;

  void validate() const;
  int conv_layer_count() const;
};

template <class T>
struct ParamBlock {
  std::vector<T> w;
  std::vector<T> b;
  bool empty() const { return w.empty() && b.empty(); }
};

template <class T>
struct ModelState {
  std::vector<ParamBlock<T>> params;  // aligned with spec.layers
  std::vector<ParamBlock<T>> m;       // first moment / SGD velocity
  std::vector<ParamBlock<T>> v;       // second moment (Adam)
  long long step = 0;
  bool bias_frozen = false;
};

// Weights uniform in (-s, s) with s = sqrt(6 / (fan_in + fan_out)); for
// conv layers fan counts include the kernel cells. Biases start at zero.
// Bit-identical for a fixed seed.
template <class T>
ModelState<T> init_model(const NetworkSpec& spec, std::uint64_t seed);

// Default input featurization: a constant-1 channel plus the 3 (normalized)
// coordinates. Cloud attribute channels, when present, are appended.
enum class FeatureMode { const_xyz, xyz, constant };

int feature_channels(FeatureMode mode, int attr_channels);

template <class T>
Mat<T> make_input_features(const PointCloud& cloud, FeatureMode mode);

// Neighborhood caches for every pointconv layer of a spec over one cloud,
// in layer order. Built once per cloud; valid as long as positions and the
// kernel specs do not change.
struct CloudGeometry {
  std::vector<std::shared_ptr<const BinCache>> bins;
};

CloudGeometry build_geometry(const NetworkSpec& spec, const PointCloud& cloud);

template <class T>
struct LayerCache {
  ConvCache<T> conv;
  Mat<T> relu_out;
  Mat<T> dense_in;
  int pool_rows = 0;
};

template <class T>
using NetCaches = std::vector<LayerCache<T>>;

template <class T>
Mat<T> net_forward(const NetworkSpec& spec, const ModelState<T>& state, const Mat<T>& input,
                   const CloudGeometry& geometry, NetCaches<T>* caches = nullptr, int workers = 1);

template <class T>
struct NetGrads {
  std::vector<ParamBlock<T>> blocks;  // aligned with spec.layers
  Mat<T> input;
};

template <class T>
NetGrads<T> net_backward(const NetworkSpec& spec, const ModelState<T>& state,
                         const NetCaches<T>& caches, const Mat<T>& grad_out, int workers = 1);

// Softmax cross entropy over rows, averaged over rows (one row for
// classification logits, one per point for segmentation). Stabilized by
// max subtraction. Returns (loss, d loss / d logits).
template <class T>
std::pair<double, Mat<T>> softmax_xent(const Mat<T>& logits, const std::vector<int>& targets);

// v <- momentum * v + g; p <- p - lr * v
template <class T>
void sgd_step(ModelState<T>& state, const std::vector<ParamBlock<T>>& grads, double lr,
              double momentum);

// Bias-corrected Adam.
template <class T>
void adam_step(ModelState<T>& state, const std::vector<ParamBlock<T>>& grads, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

FeatureMode feature_mode_from_string(const std::string& s);
std::string to_string(FeatureMode mode);

}  // namespace pwc
