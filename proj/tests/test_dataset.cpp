#include <cstring>

#include "doctest.h"
#include "pwc/dataset.hpp"
#include "support.hpp"

using namespace pwc;

TEST_CASE("noise-free sphere points sit on the unit sphere") {
  DatasetSpec spec;
  spec.shapes = {ShapeKind::sphere};
  spec.clouds_per_class = 2;
  spec.points_per_cloud = 64;
  spec.noise_sigma = 0.0;
  spec.train_fraction = 0.5;
  spec.test_fraction = 0.5;
  Dataset ds = gen_dataset(spec);
  for (const auto& split : {ds.train, ds.test}) {
    for (const Example& ex : split) {
      for (const Vec3& p : ex.cloud.positions) {
        CHECK(std::fabs(p.norm() - 1.0) <= 1e-12);
      }
    }
  }
}

TEST_CASE("same seed yields a bitwise identical dataset") {
  DatasetSpec spec;
  spec.seed = 42;
  spec.clouds_per_class = 4;
  spec.points_per_cloud = 32;
  Dataset a = gen_dataset(spec);
  Dataset b = gen_dataset(spec);
  REQUIRE(a.train.size() == b.train.size());
  REQUIRE(a.test.size() == b.test.size());
  auto identical = [](const std::vector<Example>& x, const std::vector<Example>& y) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      REQUIRE(x[i].cloud.size() == y[i].cloud.size());
      REQUIRE(x[i].label == y[i].label);
      const auto& px = x[i].cloud.positions;
      const auto& py = y[i].cloud.positions;
      REQUIRE(std::memcmp(px.data(), py.data(), px.size() * sizeof(Vec3)) == 0);
    }
  };
  identical(a.train, b.train);
  identical(a.test, b.test);
}

TEST_CASE("different seeds differ") {
  DatasetSpec spec;
  spec.clouds_per_class = 1;
  spec.points_per_cloud = 16;
  spec.train_fraction = 1.0;
  spec.test_fraction = 0.0;
  DatasetSpec other = spec;
  other.seed = spec.seed + 1;
  Dataset a = gen_dataset(spec), b = gen_dataset(other);
  CHECK(a.train[0].cloud.positions[0].x != b.train[0].cloud.positions[0].x);
}

TEST_CASE("segmentation scenes label elevated points as blob") {
  DatasetSpec spec;
  spec.task = Task::segmentation;
  spec.scenes = 4;
  spec.blobs_per_scene = 1;
  spec.points_per_cloud = 512;
  spec.noise_sigma = 0.005;  // 6 sigma < 0.05, so floor points stay below the threshold
  Dataset ds = gen_dataset(spec);
  int blob_points = 0;
  for (const auto& split : {ds.train, ds.test}) {
    for (const Example& ex : split) {
      REQUIRE(ex.cloud.has_labels());
      for (int i = 0; i < ex.cloud.size(); ++i) {
        if (ex.cloud.positions[i].z > 0.05) {
          CHECK(ex.cloud.labels[i] == 1);
        }
        blob_points += ex.cloud.labels[i] == 1 ? 1 : 0;
      }
    }
  }
  CHECK(blob_points > 0);
}

TEST_CASE("classification split sizes follow the fractions") {
  DatasetSpec spec;
  spec.shapes = {ShapeKind::sphere, ShapeKind::cube, ShapeKind::disk};
  spec.clouds_per_class = 120;
  spec.points_per_cloud = 16;
  spec.train_fraction = 5.0 / 6.0;
  spec.test_fraction = 1.0 / 6.0;
  Dataset ds = gen_dataset(spec);
  CHECK(ds.train.size() == 300);
  CHECK(ds.test.size() == 60);
  CHECK(ds.num_classes == 3);
  int counts[3] = {0, 0, 0};
  for (const Example& ex : ds.train) ++counts[ex.label];
  CHECK(counts[0] == 100);
  CHECK(counts[1] == 100);
  CHECK(counts[2] == 100);
}

TEST_CASE("invalid dataset specs are rejected") {
  DatasetSpec spec;
  spec.points_per_cloud = 4;
  CHECK_THROWS_AS(gen_dataset(spec), std::invalid_argument);

  spec = DatasetSpec{};
  spec.shapes.clear();
  CHECK_THROWS_AS(gen_dataset(spec), std::invalid_argument);

  spec = DatasetSpec{};
  spec.clouds_per_class = 0;
  CHECK_THROWS_AS(gen_dataset(spec), std::invalid_argument);

  spec = DatasetSpec{};
  spec.train_fraction = 0.7;  // sums to 0.9
  CHECK_THROWS_AS(gen_dataset(spec), std::invalid_argument);

  CHECK_THROWS_AS(shape_kind_from_string("pyramid"), std::invalid_argument);
}

TEST_CASE("datasets roundtrip through disk") {
  testsupport::TempDir dir("dataset");

  DatasetSpec spec;
  spec.shapes = {ShapeKind::sphere, ShapeKind::cube};
  spec.clouds_per_class = 3;
  spec.points_per_cloud = 16;
  spec.train_fraction = 2.0 / 3.0;
  spec.test_fraction = 1.0 / 3.0;
  Dataset ds = gen_dataset(spec);
  save_dataset(ds, dir.str());
  Dataset back = load_dataset(dir.str());
  REQUIRE(back.train.size() == ds.train.size());
  REQUIRE(back.test.size() == ds.test.size());
  CHECK(back.task == ds.task);
  CHECK(back.num_classes == ds.num_classes);
  for (std::size_t i = 0; i < ds.train.size(); ++i) {
    CHECK(back.train[i].label == ds.train[i].label);
    REQUIRE(back.train[i].cloud.size() == ds.train[i].cloud.size());
    CHECK(back.train[i].cloud.positions[0] == ds.train[i].cloud.positions[0]);
  }

  DatasetSpec seg;
  seg.task = Task::segmentation;
  seg.scenes = 3;
  seg.points_per_cloud = 32;
  testsupport::TempDir seg_dir("dataset_seg");
  Dataset seg_ds = gen_dataset(seg);
  save_dataset(seg_ds, seg_dir.str());
  Dataset seg_back = load_dataset(seg_dir.str());
  REQUIRE(seg_back.train.size() == seg_ds.train.size());
  CHECK(seg_back.train[0].cloud.labels == seg_ds.train[0].cloud.labels);

  CHECK_THROWS_AS(load_dataset((dir.path() / "nope").string()), std::runtime_error);
}
