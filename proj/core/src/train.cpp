#include "pwc/train.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "pwc/parallel.hpp"
#include "pwc/rng.hpp"

namespace fs = std::filesystem;

namespace pwc {

void TrainConfig::validate() const {
  if (data_path.empty()) data.validate();
  if (layers.empty()) throw std::invalid_argument("train config has no network layers");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (lr < 0.0) throw std::invalid_argument("learning rate must be >= 0");
  if (out_dir.empty()) throw std::invalid_argument("output directory must be set");
  if (ordering != OrderStrategy::identity && (order_bits < 1 || order_bits > 21)) {
    throw std::invalid_argument("order bits must be in [1, 21]");
  }
}

namespace {

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

// One example after preprocessing: normalized, reordered, featurized, with
// per-layer neighborhoods ready for reuse across epochs.
template <class T>
struct Prepared {
  PointCloud cloud;
  Mat<T> feats;
  std::vector<int> targets;  // one entry for classification, N for segmentation
  CloudGeometry geometry;
};

template <class T>
Prepared<T> prepare_example(const Example& ex, const NetworkSpec& spec, FeatureMode mode,
                            OrderStrategy ordering, int order_bits) {
  Prepared<T> prep;
  PointCloud normalized = normalize_cloud(ex.cloud);
  prep.cloud = ordering == OrderStrategy::identity
                   ? std::move(normalized)
                   : apply_ordering(normalized, order_points(normalized, ordering, order_bits));
  prep.feats = make_input_features<T>(prep.cloud, mode);
  if (spec.task == Task::classification) {
    if (ex.label < 0) throw std::invalid_argument("classification example without a label");
    prep.targets = {ex.label};
  } else {
    if (!prep.cloud.has_labels()) {
      throw std::invalid_argument("segmentation example without per-point labels");
    }
    prep.targets = prep.cloud.labels;
  }
  prep.geometry = build_geometry(spec, prep.cloud);
  return prep;
}

template <class T>
int argmax_row(const T* row, int n) {
  int best = 0;
  for (int c = 1; c < n; ++c) {
    if (row[c] > row[best]) best = c;
  }
  return best;
}

template <class T>
void predict_into(const NetworkSpec& spec, const ModelState<T>& state, const Prepared<T>& prep,
                  std::vector<int>& pred, std::vector<int>& truth) {
  Mat<T> out = net_forward(spec, state, prep.feats, prep.geometry, static_cast<NetCaches<T>*>(nullptr), 1);
  if (spec.task == Task::classification) {
    pred.push_back(argmax_row(out.row(0), out.cols));
    truth.push_back(prep.targets[0]);
  } else {
    for (int r = 0; r < out.rows; ++r) {
      pred.push_back(argmax_row(out.row(r), out.cols));
      truth.push_back(prep.targets[r]);
    }
  }
}

template <class T>
MetricsReport evaluate_prepared(const NetworkSpec& spec, const ModelState<T>& state,
                                const std::vector<Prepared<T>>& prepared, int workers) {
  if (prepared.empty()) throw std::invalid_argument("evaluate: empty dataset");
  const double t0 = now_seconds();
  const int n = static_cast<int>(prepared.size());
  std::vector<std::vector<int>> preds(n), truths(n);
  parallel_for(n, workers, [&](int, int lo, int hi) {
    for (int i = lo; i < hi; ++i) predict_into(spec, state, prepared[i], preds[i], truths[i]);
  });
  std::vector<int> pred, truth;
  for (int i = 0; i < n; ++i) {
    pred.insert(pred.end(), preds[i].begin(), preds[i].end());
    truth.insert(truth.end(), truths[i].begin(), truths[i].end());
  }
  MetricsReport report = compute_metrics(pred, truth, spec.num_classes);
  report.seconds = now_seconds() - t0;
  return report;
}

void append_shortest(std::string& out, double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  out.append(buf, p);
}

template <class T>
struct CloudWork {  // per-cloud result within a batch
  double loss = 0.0;
  NetGrads<T> grads;
};

template <class T>
TrainResult train_impl(const TrainConfig& config, const Dataset& dataset) {
  if (dataset.train.empty()) throw std::invalid_argument("train: dataset has no training clouds");
  if (dataset.test.empty()) throw std::invalid_argument("train: dataset has no test clouds");

  NetworkSpec spec;
  spec.task = dataset.task;
  spec.num_classes = dataset.num_classes;
  spec.layers = config.layers;
  spec.input_channels =
      feature_channels(config.feature_mode, dataset.train.front().cloud.attr_channels);
  spec.validate();

  auto prepare_all = [&](const std::vector<Example>& examples) {
    std::vector<Prepared<T>> prepared(examples.size());
    parallel_for(static_cast<int>(examples.size()), config.workers, [&](int, int lo, int hi) {
      for (int i = lo; i < hi; ++i) {
        prepared[i] = prepare_example<T>(examples[i], spec, config.feature_mode, config.ordering,
                                         config.order_bits);
      }
    });
    return prepared;
  };
  std::vector<Prepared<T>> train_set = prepare_all(dataset.train);
  std::vector<Prepared<T>> test_set = prepare_all(dataset.test);

  ModelState<T> state = init_model<T>(spec, derive_seed(config.seed, kStreamInit));
  state.bias_frozen = !config.bias_enabled;

  fs::create_directories(config.out_dir);
  TrainResult result;
  result.spec = spec;
  result.csv_path = (fs::path(config.out_dir) / "metrics.csv").string();
  result.checkpoint_path = (fs::path(config.out_dir) / "best.ckpt").string();

  std::ofstream csv(result.csv_path, std::ios::binary);
  if (!csv) throw std::runtime_error("cannot write metrics csv: " + result.csv_path);
  csv << "epoch,train_loss,test_acc,test_miou,seconds\n";

  Rng shuffle_rng(derive_seed(config.seed, kStreamShuffle));
  std::vector<int> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  result.best_accuracy = -1.0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const double t0 = now_seconds();
    shuffle_rng.shuffle(order);

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const int count =
          static_cast<int>(std::min<std::size_t>(config.batch_size, order.size() - start));
      std::vector<CloudWork<T>> work(count);
      parallel_for(count, config.workers, [&](int, int lo, int hi) {
        for (int b = lo; b < hi; ++b) {
          const Prepared<T>& prep = train_set[order[start + b]];
          NetCaches<T> caches;
          Mat<T> out = net_forward(spec, state, prep.feats, prep.geometry, &caches, 1);
          auto [loss, grad] = softmax_xent(out, prep.targets);
          work[b].loss = loss;
          work[b].grads = net_backward(spec, state, caches, grad, 1);
        }
      });

      // reduce in ascending batch index order, then average
      std::vector<ParamBlock<T>> batch_grads = std::move(work[0].grads.blocks);
      loss_sum += work[0].loss;
      for (int b = 1; b < count; ++b) {
        loss_sum += work[b].loss;
        for (std::size_t l = 0; l < batch_grads.size(); ++l) {
          const ParamBlock<T>& g = work[b].grads.blocks[l];
          for (std::size_t n = 0; n < g.w.size(); ++n) batch_grads[l].w[n] += g.w[n];
          for (std::size_t n = 0; n < g.b.size(); ++n) batch_grads[l].b[n] += g.b[n];
        }
      }
      const T scale = T(1) / static_cast<T>(count);
      for (auto& block : batch_grads) {
        for (auto& g : block.w) g *= scale;
        for (auto& g : block.b) g *= scale;
      }

      if (config.optimizer == OptKind::sgd) {
        sgd_step(state, batch_grads, config.lr, config.momentum);
      } else {
        adam_step(state, batch_grads, config.lr, config.beta1, config.beta2, config.eps);
      }
    }

    MetricsReport report = evaluate_prepared(spec, state, test_set, config.workers);
    EpochRow row;
    row.epoch = epoch;
    row.train_loss = loss_sum / static_cast<double>(train_set.size());
    row.test_accuracy = report.accuracy;
    row.test_miou = report.mean_iou;
    row.seconds = now_seconds() - t0;
    result.epochs.push_back(row);
    result.test_reports.push_back(std::move(report));

    std::string line = std::to_string(epoch);
    line.push_back(',');
    append_shortest(line, row.train_loss);
    line.push_back(',');
    append_shortest(line, row.test_accuracy);
    line.push_back(',');
    append_shortest(line, row.test_miou);
    char sec[32];
    std::snprintf(sec, sizeof(sec), ",%.3f\n", row.seconds);
    line += sec;
    csv << line;
    csv.flush();

    if (row.test_accuracy > result.best_accuracy) {
      result.best_accuracy = row.test_accuracy;
      result.best_epoch = epoch;
      save_checkpoint(spec, state, result.checkpoint_path);
    }
  }

  result.final_state = std::move(state);
  return result;
}

}  // namespace

TrainResult train(const TrainConfig& config) {
  config.validate();
  Dataset dataset = config.data_path.empty() ? gen_dataset(config.data) : load_dataset(config.data_path);
  if (config.precision == Precision::f32) return train_impl<float>(config, dataset);
  return train_impl<double>(config, dataset);
}

template <class T>
MetricsReport evaluate(const NetworkSpec& spec, const ModelState<T>& state,
                       const std::vector<Example>& examples, FeatureMode mode,
                       OrderStrategy ordering, int order_bits, int workers) {
  if (examples.empty()) throw std::invalid_argument("evaluate: empty dataset");
  const double t0 = now_seconds();
  const int n = static_cast<int>(examples.size());
  std::vector<std::vector<int>> preds(n), truths(n);
  parallel_for(n, workers, [&](int, int lo, int hi) {
    for (int i = lo; i < hi; ++i) {
      Prepared<T> prep = prepare_example<T>(examples[i], spec, mode, ordering, order_bits);
      predict_into(spec, state, prep, preds[i], truths[i]);
    }
  });
  std::vector<int> pred, truth;
  for (int i = 0; i < n; ++i) {
    pred.insert(pred.end(), preds[i].begin(), preds[i].end());
    truth.insert(truth.end(), truths[i].begin(), truths[i].end());
  }
  MetricsReport report = compute_metrics(pred, truth, spec.num_classes);
  report.seconds = now_seconds() - t0;
  return report;
}

template MetricsReport evaluate<float>(const NetworkSpec&, const ModelState<float>&,
                                       const std::vector<Example>&, FeatureMode, OrderStrategy,
                                       int, int);
template MetricsReport evaluate<double>(const NetworkSpec&, const ModelState<double>&,
                                        const std::vector<Example>&, FeatureMode, OrderStrategy,
                                        int, int);

namespace {

std::map<std::string, std::string> parse_attrs(std::istringstream& in, const std::string& text) {
  std::map<std::string, std::string> attrs;
  std::string token;
  while (in >> token) {
    auto eq = token.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("layer descriptor '" + text + "': expected attr=value, got '" +
                                  token + "'");
    }
    attrs[token.substr(0, eq)] = token.substr(eq + 1);
  }
  return attrs;
}

double attr_double(const std::map<std::string, std::string>& attrs, const std::string& name,
                   const std::string& text) {
  auto it = attrs.find(name);
  if (it == attrs.end()) {
    throw std::invalid_argument("layer descriptor '" + text + "': missing " + name + "=");
  }
  return std::stod(it->second);
}

void reject_unknown(const std::map<std::string, std::string>& attrs,
                    std::initializer_list<const char*> known, const std::string& text) {
  for (const auto& [key, value] : attrs) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw std::invalid_argument("layer descriptor '" + text + "': unknown attr '" + key + "'");
  }
}

}  // namespace

LayerDesc parse_layer_desc(const std::string& text) {
  std::istringstream in(text);
  std::string kind;
  if (!(in >> kind)) throw std::invalid_argument("empty layer descriptor");
  LayerDesc layer;
  if (kind == "pointconv") {
    auto attrs = parse_attrs(in, text);
    reject_unknown(attrs, {"r", "R", "cout", "geom"}, text);
    layer.kind = LayerKind::pointconv;
    layer.kernel.radius = attr_double(attrs, "r", text);
    layer.kernel.resolution = attrs.count("R") ? std::stoi(attrs.at("R")) : 3;
    if (attrs.count("geom")) {
      const std::string& g = attrs.at("geom");
      if (g == "ball") {
        layer.kernel.geometry = KernelGeometry::ball;
      } else if (g == "cube") {
        layer.kernel.geometry = KernelGeometry::cube;
      } else {
        throw std::invalid_argument("layer descriptor '" + text + "': geom must be ball or cube");
      }
    }
    layer.c_out = static_cast<int>(attr_double(attrs, "cout", text));
    layer.kernel.validate();
  } else if (kind == "relu") {
    parse_attrs(in, text);  // validates syntax
    layer.kind = LayerKind::relu;
  } else if (kind == "pool") {
    parse_attrs(in, text);
    layer.kind = LayerKind::global_pool;
  } else if (kind == "dense") {
    auto attrs = parse_attrs(in, text);
    reject_unknown(attrs, {"cout"}, text);
    layer.kind = LayerKind::dense;
    layer.c_out = static_cast<int>(attr_double(attrs, "cout", text));
  } else {
    throw std::invalid_argument("unknown layer kind '" + kind + "'");
  }
  return layer;
}

std::string layer_desc_to_string(const LayerDesc& layer) {
  std::ostringstream out;
  switch (layer.kind) {
    case LayerKind::pointconv: {
      char r[32];
      auto [p, ec] = std::to_chars(r, r + sizeof(r), layer.kernel.radius);
      (void)ec;
      out << "pointconv r=" << std::string(r, p) << " R=" << layer.kernel.resolution
          << " cout=" << layer.c_out
          << " geom=" << (layer.kernel.geometry == KernelGeometry::ball ? "ball" : "cube");
      break;
    }
    case LayerKind::relu:
      out << "relu";
      break;
    case LayerKind::global_pool:
      out << "pool";
      break;
    case LayerKind::dense:
      out << "dense cout=" << layer.c_out;
      break;
  }
  return out.str();
}

DatasetSpec dataset_spec_from_config(const Config& config) {
  DatasetSpec spec;
  spec.task = task_from_string(config.get_string("task", "classification"));
  if (config.has("data.shapes")) {
    spec.shapes.clear();
    for (const std::string& s : config.get_list("data.shapes")) {
      spec.shapes.push_back(shape_kind_from_string(s));
    }
  }
  spec.clouds_per_class = static_cast<int>(config.get_int("data.clouds_per_class", 120));
  spec.scenes = static_cast<int>(config.get_int("data.scenes", 100));
  spec.blobs_per_scene = static_cast<int>(config.get_int("data.blobs_per_scene", 3));
  spec.points_per_cloud = static_cast<int>(config.get_int("data.points", 256));
  spec.noise_sigma = config.get_double("data.noise", 0.02);
  spec.train_fraction = config.get_double("data.train_fraction", 0.8);
  spec.test_fraction = config.get_double("data.test_fraction", 0.2);
  spec.seed = config.has("data.seed") ? config.get_u64("data.seed", 0)
                                      : derive_seed(config.get_u64("seed", 1), kStreamData);
  return spec;
}

TrainConfig train_config_from_config(const Config& config) {
  TrainConfig tc;
  tc.data = dataset_spec_from_config(config);
  tc.data_path = config.get_string("data.path", "");
  tc.feature_mode = feature_mode_from_string(config.get_string("net.input", "const+xyz"));
  for (const std::string& desc : config.get_indexed("net.layer")) {
    tc.layers.push_back(parse_layer_desc(desc));
  }

  const std::string opt = config.get_string("opt.kind", "adam");
  if (opt == "sgd") {
    tc.optimizer = OptKind::sgd;
  } else if (opt == "adam") {
    tc.optimizer = OptKind::adam;
  } else {
    throw std::invalid_argument("opt.kind must be sgd or adam, got '" + opt + "'");
  }
  tc.lr = config.get_double("opt.lr", 0.01);
  tc.momentum = config.get_double("opt.momentum", 0.9);
  tc.beta1 = config.get_double("opt.beta1", 0.9);
  tc.beta2 = config.get_double("opt.beta2", 0.999);
  tc.eps = config.get_double("opt.eps", 1e-8);
  tc.bias_enabled = config.get_bool("opt.bias", true);

  tc.epochs = static_cast<int>(config.get_int("train.epochs", 50));
  tc.batch_size = static_cast<int>(config.get_int("train.batch", 8));
  tc.seed = config.get_u64("seed", 1);
  tc.workers = static_cast<int>(config.get_int("workers", 1));
  tc.precision = precision_from_string(config.get_string("precision", "f32"));
  tc.ordering = order_strategy_from_string(config.get_string("order.strategy", "morton"));
  tc.order_bits = static_cast<int>(config.get_int("order.bits", 10));
  tc.out_dir = config.get_string("out", "out");
  return tc;
}

Precision precision_from_string(const std::string& s) {
  if (s == "f32") return Precision::f32;
  if (s == "f64") return Precision::f64;
  throw std::invalid_argument("precision must be f32 or f64, got '" + s + "'");
}

std::string to_string(Precision p) { return p == Precision::f32 ? "f32" : "f64"; }

}  // namespace pwc
