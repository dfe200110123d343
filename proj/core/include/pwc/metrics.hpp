#pragma once

#include <vector>

namespace pwc {

// Confusion-matrix derived quality numbers. confusion[true_class][pred] are
// raw counts; accuracy always equals trace / total.
struct MetricsReport {
  int num_classes = 0;
  double accuracy = 0.0;
  std::vector<double> per_class_accuracy;  // TP_c / truth count, 0 when the class is absent
  double mean_iou = 0.0;
  std::vector<double> iou;  // TP / (TP + FP + FN) per class
  std::vector<long long> confusion;  // row-major [true][pred]
  double seconds = 0.0;

  long long count(int truth, int pred) const {
    return confusion[static_cast<std::size_t>(truth) * num_classes + pred];
  }
  long long total() const;
  long long trace() const;
};

// IoU_c = TP / (TP + FP + FN); classes absent from both prediction and
// truth are excluded from the mean.
MetricsReport compute_metrics(const std::vector<int>& pred, const std::vector<int>& truth,
                              int num_classes);

}  // namespace pwc
