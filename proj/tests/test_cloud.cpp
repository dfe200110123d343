#include <fstream>

#include "doctest.h"
#include "pwc/cloud.hpp"
#include "pwc/rng.hpp"
#include "support.hpp"

using namespace pwc;
using testsupport::TempDir;

namespace {

std::string write_file(const TempDir& dir, const std::string& name, const std::string& text) {
  std::string path = (dir.path() / name).string();
  std::ofstream f(path, std::ios::binary);
  f << text;
  return path;
}

}  // namespace

TEST_CASE("load_cloud reads plain xyz lines") {
  TempDir dir("cloud");
  PointCloud c = load_cloud(write_file(dir, "a.xyz", "0 0 0\n1 2 3\n"));
  REQUIRE(c.size() == 2);
  CHECK_FALSE(c.has_labels());
  Bounds b = c.bounds();
  CHECK(b.min == Vec3{0, 0, 0});
  CHECK(b.max == Vec3{1, 2, 3});
}

TEST_CASE("load_cloud reads labels") {
  TempDir dir("cloud");
  PointCloud c = load_cloud(write_file(dir, "a.xyz", "0 0 0 1\n"));
  REQUIRE(c.size() == 1);
  REQUIRE(c.has_labels());
  CHECK(c.labels[0] == 1);
}

TEST_CASE("load_cloud reports the offending line") {
  TempDir dir("cloud");
  CHECK_THROWS_WITH_AS(load_cloud(write_file(dir, "a.xyz", "0 0\n")),
                       doctest::Contains(":1:"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(load_cloud(write_file(dir, "b.xyz", "0 0 0\n1 1 1 4\n")),
                       doctest::Contains("mixed"), std::invalid_argument);
  CHECK_THROWS_AS(load_cloud(write_file(dir, "c.xyz", "0 0 nan\n")), std::invalid_argument);
  CHECK_THROWS_AS(load_cloud(write_file(dir, "d.xyz", "")), std::invalid_argument);
  CHECK_THROWS_AS(load_cloud(write_file(dir, "e.xyz", "# only a comment\n")),
                  std::invalid_argument);
  CHECK_THROWS_AS(load_cloud(write_file(dir, "f.xyz", "0 0 0 -2\n")), std::invalid_argument);
  CHECK_THROWS_AS(load_cloud((dir.path() / "missing.xyz").string()), std::runtime_error);
}

TEST_CASE("load_cloud skips comments and blank lines") {
  TempDir dir("cloud");
  PointCloud c = load_cloud(write_file(dir, "a.xyz", "# header\n\n  0 0 0  # trailing\n\t1 1 1\n"));
  CHECK(c.size() == 2);
}

TEST_CASE("save/load roundtrip preserves positions and labels") {
  TempDir dir("cloud");
  Rng rng(99);
  PointCloud c;
  for (int i = 0; i < 100; ++i) {
    c.positions.push_back({rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)});
    c.labels.push_back(static_cast<int>(rng.uniform_int(4)));
  }
  c.refresh_bounds();
  std::string path = (dir.path() / "roundtrip.xyz").string();
  save_cloud(c, path);
  PointCloud back = load_cloud(path);
  REQUIRE(back.size() == c.size());
  for (int i = 0; i < c.size(); ++i) {
    CHECK(back.positions[i] == c.positions[i]);  // shortest round-trip formatting is exact
    CHECK(back.labels[i] == c.labels[i]);
  }
}

TEST_CASE("saving a labeled cloud writes 4 fields per line") {
  TempDir dir("cloud");
  PointCloud c;
  c.positions = {{0, 0, 0}, {1, 1, 1}};
  c.labels = {0, 3};
  std::string path = (dir.path() / "l.xyz").string();
  save_cloud(c, path);
  std::ifstream f(path);
  std::string line;
  while (std::getline(f, line)) {
    int fields = 0;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) ++fields;
    CHECK(fields == 4);
  }
}

TEST_CASE("empty cloud saves zero data lines and fails the load contract") {
  TempDir dir("cloud");
  PointCloud empty;
  std::string path = (dir.path() / "empty.xyz").string();
  save_cloud(empty, path);
  std::ifstream f(path);
  CHECK(f.peek() == EOF);
  CHECK_THROWS_AS(load_cloud(path), std::invalid_argument);
}

TEST_CASE("save_cloud rejects unwritable paths") {
  PointCloud c;
  c.positions = {{0, 0, 0}};
  CHECK_THROWS_AS(save_cloud(c, "/nonexistent_dir_pwcnet/x.xyz"), std::runtime_error);
}

TEST_CASE("normalize_cloud centers and scales to the unit ball") {
  PointCloud c;
  c.positions = {{0, 0, 0}, {2, 0, 0}};
  PointCloud n = normalize_cloud(c);
  CHECK(n.positions[0] == Vec3{-1, 0, 0});
  CHECK(n.positions[1] == Vec3{1, 0, 0});
}

TEST_CASE("normalize_cloud postcondition holds on random input") {
  Rng rng(4);
  PointCloud c;
  for (int i = 0; i < 1000; ++i) {
    c.positions.push_back({rng.uniform(0, 10), rng.uniform(0, 10), rng.uniform(0, 10)});
  }
  PointCloud n = normalize_cloud(c);

  Vec3 centroid;
  for (const Vec3& p : n.positions) centroid += p;
  centroid = centroid / static_cast<double>(n.size());
  CHECK(centroid.norm() <= 1e-6);

  double max_r = 0.0;
  for (const Vec3& p : n.positions) max_r = std::max(max_r, p.norm());
  CHECK(max_r >= 1.0 - 1e-6);
  CHECK(max_r <= 1.0 + 1e-12);
}

TEST_CASE("normalize_cloud is idempotent within 1e-6") {
  Rng rng(12);
  PointCloud c;
  for (int i = 0; i < 200; ++i) {
    c.positions.push_back({rng.uniform(-3, 9), rng.uniform(0, 2), rng.uniform(5, 6)});
  }
  PointCloud once = normalize_cloud(c);
  PointCloud twice = normalize_cloud(once);
  for (int i = 0; i < c.size(); ++i) {
    CHECK((once.positions[i] - twice.positions[i]).norm() <= 1e-6);
  }
}

TEST_CASE("normalize_cloud maps a degenerate cloud to the origin") {
  PointCloud c;
  c.positions = {{3, 3, 3}, {3, 3, 3}, {3, 3, 3}};
  PointCloud n = normalize_cloud(c);
  for (const Vec3& p : n.positions) CHECK(p == Vec3{0, 0, 0});
  CHECK_THROWS_AS(normalize_cloud(PointCloud{}), std::invalid_argument);
}
