#include "pwc/metrics.hpp"

#include <stdexcept>
#include <string>

namespace pwc {

long long MetricsReport::total() const {
  long long n = 0;
  for (long long c : confusion) n += c;
  return n;
}

long long MetricsReport::trace() const {
  long long n = 0;
  for (int c = 0; c < num_classes; ++c) n += count(c, c);
  return n;
}

MetricsReport compute_metrics(const std::vector<int>& pred, const std::vector<int>& truth,
                              int num_classes) {
  if (pred.size() != truth.size()) {
    throw std::invalid_argument("compute_metrics: prediction/truth length mismatch");
  }
  if (pred.empty()) throw std::invalid_argument("compute_metrics: no samples");
  if (num_classes < 2) throw std::invalid_argument("compute_metrics: need >= 2 classes");

  MetricsReport report;
  report.num_classes = num_classes;
  report.confusion.assign(static_cast<std::size_t>(num_classes) * num_classes, 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] < 0 || pred[i] >= num_classes || truth[i] < 0 || truth[i] >= num_classes) {
      throw std::invalid_argument("compute_metrics: label out of range at sample " +
                                  std::to_string(i));
    }
    ++report.confusion[static_cast<std::size_t>(truth[i]) * num_classes + pred[i]];
  }

  report.accuracy = static_cast<double>(report.trace()) / static_cast<double>(report.total());
  report.per_class_accuracy.assign(num_classes, 0.0);
  report.iou.assign(num_classes, 0.0);

  double iou_sum = 0.0;
  int iou_classes = 0;
  for (int c = 0; c < num_classes; ++c) {
    long long tp = report.count(c, c);
    long long truth_count = 0, pred_count = 0;
    for (int o = 0; o < num_classes; ++o) {
      truth_count += report.count(c, o);
      pred_count += report.count(o, c);
    }
    const long long fn = truth_count - tp;
    const long long fp = pred_count - tp;
    if (truth_count > 0) {
      report.per_class_accuracy[c] = static_cast<double>(tp) / static_cast<double>(truth_count);
    }
    if (truth_count + pred_count > 0) {  // present in truth or prediction
      report.iou[c] = tp + fp + fn > 0
                          ? static_cast<double>(tp) / static_cast<double>(tp + fp + fn)
                          : 0.0;
      iou_sum += report.iou[c];
      ++iou_classes;
    }
  }
  report.mean_iou = iou_classes > 0 ? iou_sum / iou_classes : 0.0;
  return report;
}

}  // namespace pwc
