#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pwc/cloud.hpp"

namespace pwc {

enum class Task { classification, segmentation };

enum class ShapeKind { sphere, cube, disk };

// Synthetic dataset description. The seed fully determines the dataset;
// generation uses only the fixed generator from rng.hpp plus correctly
// rounded arithmetic, so output is identical across platforms.
struct DatasetSpec {
  Task task = Task::classification;

  // classification: one class per shape kind
  std::vector<ShapeKind> shapes = {ShapeKind::sphere, ShapeKind::cube, ShapeKind::disk};
  int clouds_per_class = 120;

  // segmentation: floor + spherical blobs, class 0 = floor, 1 = blob
  int scenes = 100;
  int blobs_per_scene = 3;

  int points_per_cloud = 256;
  double noise_sigma = 0.02;
  std::uint64_t seed = 1;
  double train_fraction = 0.8;
  double test_fraction = 0.2;

  void validate() const;
  int num_classes() const {
    return task == Task::classification ? static_cast<int>(shapes.size()) : 2;
  }
};

// One training example. For classification `label` is the cloud's class;
// for segmentation label is -1 and the per-point labels live in the cloud.
struct Example {
  PointCloud cloud;
  int label = -1;
};

struct Dataset {
  Task task = Task::classification;
  int num_classes = 0;
  std::vector<Example> train;
  std::vector<Example> test;
};

// Deterministic in spec.seed: same spec twice gives bit-identical clouds.
// Clouds are emitted in generation order; the first round(fraction * count)
// of each class (or of the scene list) form the train split.
Dataset gen_dataset(const DatasetSpec& spec);

// Directory layout: dataset.cfg (task, classes) plus train/ and test/
// holding cloud_NNNNN.xyz files. Classification labels are stored as a
// per-point column with the class id replicated on every line.
void save_dataset(const Dataset& ds, const std::string& dir);
Dataset load_dataset(const std::string& dir);

ShapeKind shape_kind_from_string(const std::string& s);
std::string to_string(ShapeKind kind);
std::string to_string(Task task);
Task task_from_string(const std::string& s);

}  // namespace pwc
