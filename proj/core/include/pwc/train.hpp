#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "pwc/checkpoint.hpp"
#include "pwc/config.hpp"
#include "pwc/dataset.hpp"
#include "pwc/metrics.hpp"
#include "pwc/net.hpp"
#include "pwc/ordering.hpp"

namespace pwc {

enum class Precision { f32, f64 };
enum class OptKind { sgd, adam };

struct TrainConfig {
  DatasetSpec data;
  std::string data_path;  // when set, a saved dataset directory is loaded instead

  FeatureMode feature_mode = FeatureMode::const_xyz;
  std::vector<LayerDesc> layers;

  OptKind optimizer = OptKind::adam;
  double lr = 0.01;
  double momentum = 0.9;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  bool bias_enabled = true;

  int epochs = 50;
  int batch_size = 8;
  std::uint64_t seed = 1;
  int workers = 1;
  Precision precision = Precision::f32;
  OrderStrategy ordering = OrderStrategy::morton;
  int order_bits = 10;
  std::string out_dir = "out";

  void validate() const;
};

struct EpochRow {
  int epoch = 0;
  double train_loss = 0.0;
  double test_accuracy = 0.0;
  double test_miou = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  NetworkSpec spec;
  std::vector<EpochRow> epochs;
  std::vector<MetricsReport> test_reports;  // one per epoch
  int best_epoch = 0;
  double best_accuracy = 0.0;
  std::string csv_path;
  std::string checkpoint_path;
  std::variant<ModelState<float>, ModelState<double>> final_state;
};

// Runs the configured training loop: seeded shuffles, mean-of-batch
// gradients, one optimizer step per batch, per-epoch test evaluation, a
// metrics.csv log and a best-by-test-accuracy checkpoint under out_dir.
// With a fixed seed the loss/metric trajectory is bitwise reproducible
// run-to-run (the CSV seconds column records wall time and is the one
// nondeterministic field).
TrainResult train(const TrainConfig& config);

// Deterministic, mutation-free evaluation of a model over a set of
// examples. Clouds are normalized and ordered the same way train does it.
template <class T>
MetricsReport evaluate(const NetworkSpec& spec, const ModelState<T>& state,
                       const std::vector<Example>& examples, FeatureMode mode,
                       OrderStrategy ordering, int order_bits, int workers = 1);

// Layer descriptor syntax: "pointconv r=0.3 R=3 cout=16 geom=ball",
// "relu", "pool", "dense cout=8".
LayerDesc parse_layer_desc(const std::string& text);
std::string layer_desc_to_string(const LayerDesc& layer);

DatasetSpec dataset_spec_from_config(const Config& config);
TrainConfig train_config_from_config(const Config& config);

Precision precision_from_string(const std::string& s);
std::string to_string(Precision p);

}  // namespace pwc
