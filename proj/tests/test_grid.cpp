#include <set>

#include "doctest.h"
#include "pwc/grid.hpp"
#include "pwc/rng.hpp"
#include "support.hpp"

using namespace pwc;

TEST_CASE("points land in the floor-rule cell") {
  PointCloud c;
  c.positions = {{0, 0, 0}, {2.5, 0, 0}};
  c.refresh_bounds();
  GridIndex g = build_grid(c, 1.0);
  auto it = g.cells.find(CellKey{2, 0, 0});
  REQUIRE(it != g.cells.end());
  CHECK(it->second == std::vector<int>{1});
}

TEST_CASE("empty cloud builds an empty grid") {
  PointCloud c;
  GridIndex g = build_grid(c, 1.0);
  CHECK(g.cells.empty());
  CHECK(query_ball(g, c, {0, 0, 0}, 1.0).empty());
  CHECK(query_ball_bruteforce(c, {0, 0, 0}, 1.0).empty());
}

TEST_CASE("grid cells partition the cloud") {
  PointCloud c = testsupport::random_cloud(10000, 1);
  GridIndex g = build_grid(c, 0.1);
  std::size_t total = 0;
  for (const auto& [key, ids] : g.cells) total += ids.size();
  CHECK(total == 10000);
}

TEST_CASE("build_grid rejects a non-positive cell size") {
  PointCloud c;
  c.positions = {{0, 0, 0}};
  CHECK_THROWS_AS(build_grid(c, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(build_grid(c, -1.0), std::invalid_argument);
}

TEST_CASE("unit ball on the integer lattice holds exactly 7 points") {
  PointCloud c;
  for (int x = -2; x <= 2; ++x) {
    for (int y = -2; y <= 2; ++y) {
      for (int z = -2; z <= 2; ++z) {
        c.positions.push_back({double(x), double(y), double(z)});
      }
    }
  }
  c.refresh_bounds();
  GridIndex g = build_grid(c, 1.0);
  std::vector<int> ids = query_ball(g, c, {0, 0, 0}, 1.0);
  REQUIRE(ids.size() == 7);  // origin plus 6 axis neighbors, boundary included
  CHECK(ids == query_ball_bruteforce(c, {0, 0, 0}, 1.0));
  for (int id : ids) {
    CHECK(c.positions[id].norm() <= 1.0);
  }
}

TEST_CASE("radius zero matches only coincident points") {
  PointCloud c;
  c.positions = {{1, 2, 3}, {1, 2, 3}, {1, 2, 3.0000001}};
  c.refresh_bounds();
  GridIndex g = build_grid(c, 0.5);
  CHECK(query_ball(g, c, {1, 2, 3}, 0.0) == std::vector<int>{0, 1});
  PointCloud single;
  single.positions = {{4, 4, 4}};
  single.refresh_bounds();
  CHECK(query_ball_bruteforce(single, {4, 4, 4}, 0.0) == std::vector<int>{0});
}

TEST_CASE("grid queries equal the brute-force oracle on random clouds") {
  PointCloud c = testsupport::random_cloud(10000, 5);
  GridIndex g = build_grid(c, 0.07);
  Rng rng(31);
  for (int q = 0; q < 300; ++q) {
    Vec3 center{rng.uniform(-0.1, 1.1), rng.uniform(-0.1, 1.1), rng.uniform(-0.1, 1.1)};
    double radius = rng.uniform(0.0, 0.2);
    CHECK(query_ball(g, c, center, radius) == query_ball_bruteforce(c, center, radius));
  }
}

TEST_CASE("queries from cloud points include the center point") {
  PointCloud c = testsupport::random_cloud(500, 9);
  GridIndex g = build_grid(c, 0.2);
  for (int i = 0; i < c.size(); i += 37) {
    std::vector<int> ids = query_ball(g, c, c.positions[i], 0.2);
    CHECK(std::count(ids.begin(), ids.end(), i) == 1);
  }
}

TEST_CASE("query_ball validates its inputs") {
  PointCloud c = testsupport::random_cloud(10, 2);
  GridIndex g = build_grid(c, 0.5);
  CHECK_THROWS_AS(query_ball(g, c, {0, 0, 0}, -0.1), std::invalid_argument);
  PointCloud other = testsupport::random_cloud(11, 3);
  CHECK_THROWS_AS(query_ball(g, other, {0, 0, 0}, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(query_ball_bruteforce(c, {0, 0, 0}, -1.0), std::invalid_argument);
}
