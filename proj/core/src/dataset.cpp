#include "pwc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "pwc/rng.hpp"

namespace fs = std::filesystem;

namespace pwc {

void DatasetSpec::validate() const {
  if (points_per_cloud < 8) throw std::invalid_argument("points_per_cloud must be >= 8");
  if (noise_sigma < 0.0) throw std::invalid_argument("noise_sigma must be >= 0");
  if (std::fabs(train_fraction + test_fraction - 1.0) > 1e-9) {
    throw std::invalid_argument("split fractions must sum to 1");
  }
  if (train_fraction < 0.0 || test_fraction < 0.0) {
    throw std::invalid_argument("split fractions must be non-negative");
  }
  if (task == Task::classification) {
    if (shapes.empty()) throw std::invalid_argument("classification needs at least one shape");
    if (clouds_per_class < 1) throw std::invalid_argument("clouds_per_class must be >= 1");
  } else {
    if (scenes < 1) throw std::invalid_argument("scenes must be >= 1");
    if (blobs_per_scene < 1) throw std::invalid_argument("blobs_per_scene must be >= 1");
  }
}

namespace {

// Uniform direction via Marsaglia rejection; no trig so the result is
// bit-identical wherever IEEE doubles are.
Vec3 sample_unit_sphere(Rng& rng) {
  for (;;) {
    Vec3 v{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    double s = v.squared_norm();
    if (s > 1e-12 && s <= 1.0) return v / std::sqrt(s);
  }
}

Vec3 sample_cube_surface(Rng& rng) {
  int face = static_cast<int>(rng.uniform_int(6));
  double a = rng.uniform(-1.0, 1.0);
  double b = rng.uniform(-1.0, 1.0);
  switch (face) {
    case 0: return {+1.0, a, b};
    case 1: return {-1.0, a, b};
    case 2: return {a, +1.0, b};
    case 3: return {a, -1.0, b};
    case 4: return {a, b, +1.0};
    default: return {a, b, -1.0};
  }
}

Vec3 sample_disk(Rng& rng) {
  for (;;) {
    double x = rng.uniform(-1.0, 1.0);
    double y = rng.uniform(-1.0, 1.0);
    if (x * x + y * y <= 1.0) return {x, y, 0.0};
  }
}

Vec3 sample_shape(ShapeKind kind, Rng& rng) {
  switch (kind) {
    case ShapeKind::sphere: return sample_unit_sphere(rng);
    case ShapeKind::cube: return sample_cube_surface(rng);
    case ShapeKind::disk: return sample_disk(rng);
  }
  throw std::invalid_argument("unknown shape kind");
}

void add_noise(Vec3& p, double sigma, Rng& rng) {
  if (sigma == 0.0) return;
  p.x += sigma * rng.gaussian();
  p.y += sigma * rng.gaussian();
  p.z += sigma * rng.gaussian();
}

PointCloud gen_shape_cloud(ShapeKind kind, int n, double sigma, Rng& rng) {
  PointCloud cloud;
  cloud.positions.reserve(n);
  for (int i = 0; i < n; ++i) {
    Vec3 p = sample_shape(kind, rng);
    add_noise(p, sigma, rng);
    cloud.positions.push_back(p);
  }
  cloud.refresh_bounds();
  return cloud;
}

constexpr double kBlobRadius = 0.2;

PointCloud gen_scene(int n, int blobs, double sigma, Rng& rng) {
  PointCloud cloud;
  cloud.positions.reserve(n);
  cloud.labels.reserve(n);

  std::vector<Vec3> centers;
  centers.reserve(blobs);
  for (int b = 0; b < blobs; ++b) {
    centers.push_back({rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7), kBlobRadius});
  }

  int per_blob = n / (2 * blobs);
  int floor_points = n - blobs * per_blob;
  for (int i = 0; i < floor_points; ++i) {
    Vec3 p{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), 0.0};
    add_noise(p, sigma, rng);
    cloud.positions.push_back(p);
    cloud.labels.push_back(0);
  }
  for (const Vec3& c : centers) {
    for (int i = 0; i < per_blob; ++i) {
      Vec3 p = c + sample_unit_sphere(rng) * kBlobRadius;
      add_noise(p, sigma, rng);
      cloud.positions.push_back(p);
      cloud.labels.push_back(1);
    }
  }
  cloud.refresh_bounds();
  return cloud;
}

int train_count(int total, double fraction) {
  int n = static_cast<int>(std::llround(total * fraction));
  return std::clamp(n, 0, total);
}

}  // namespace

Dataset gen_dataset(const DatasetSpec& spec) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, kStreamData));

  Dataset ds;
  ds.task = spec.task;
  ds.num_classes = spec.num_classes();

  if (spec.task == Task::classification) {
    int n_train = train_count(spec.clouds_per_class, spec.train_fraction);
    for (std::size_t c = 0; c < spec.shapes.size(); ++c) {
      for (int i = 0; i < spec.clouds_per_class; ++i) {
        Example ex{gen_shape_cloud(spec.shapes[c], spec.points_per_cloud, spec.noise_sigma, rng),
                   static_cast<int>(c)};
        (i < n_train ? ds.train : ds.test).push_back(std::move(ex));
      }
    }
  } else {
    int n_train = train_count(spec.scenes, spec.train_fraction);
    for (int i = 0; i < spec.scenes; ++i) {
      Example ex{gen_scene(spec.points_per_cloud, spec.blobs_per_scene, spec.noise_sigma, rng), -1};
      (i < n_train ? ds.train : ds.test).push_back(std::move(ex));
    }
  }
  return ds;
}

namespace {

void save_split(const std::vector<Example>& split, Task task, const fs::path& dir) {
  fs::create_directories(dir);
  char name[32];
  for (std::size_t i = 0; i < split.size(); ++i) {
    std::snprintf(name, sizeof(name), "cloud_%05zu.xyz", i);
    PointCloud c = split[i].cloud;
    if (task == Task::classification) {
      c.labels.assign(c.positions.size(), split[i].label);
    }
    save_cloud(c, (dir / name).string());
  }
}

std::vector<Example> load_split(Task task, const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("missing dataset split dir: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".xyz") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Example> out;
  out.reserve(files.size());
  for (const auto& f : files) {
    Example ex;
    ex.cloud = load_cloud(f.string());
    if (!ex.cloud.has_labels()) {
      throw std::runtime_error("dataset cloud has no labels: " + f.string());
    }
    if (task == Task::classification) {
      ex.label = ex.cloud.labels[0];
      for (int l : ex.cloud.labels) {
        if (l != ex.label) throw std::runtime_error("inconsistent class label in " + f.string());
      }
      ex.cloud.labels.clear();
    }
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& dir) {
  fs::path root(dir);
  fs::create_directories(root);
  std::ofstream meta(root / "dataset.cfg");
  if (!meta) throw std::runtime_error("cannot write " + (root / "dataset.cfg").string());
  meta << "task = " << to_string(ds.task) << "\n";
  meta << "classes = " << ds.num_classes << "\n";
  meta.close();
  save_split(ds.train, ds.task, root / "train");
  save_split(ds.test, ds.task, root / "test");
}

Dataset load_dataset(const std::string& dir) {
  fs::path root(dir);
  std::ifstream meta(root / "dataset.cfg");
  if (!meta) throw std::runtime_error("not a dataset directory (missing dataset.cfg): " + dir);
  Dataset ds;
  std::string line;
  while (std::getline(meta, line)) {
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
    };
    trim(key);
    trim(value);
    if (key == "task") ds.task = task_from_string(value);
    if (key == "classes") ds.num_classes = std::stoi(value);
  }
  if (ds.num_classes < 2) throw std::runtime_error("dataset.cfg missing a valid class count");
  ds.train = load_split(ds.task, root / "train");
  ds.test = load_split(ds.task, root / "test");
  return ds;
}

ShapeKind shape_kind_from_string(const std::string& s) {
  if (s == "sphere") return ShapeKind::sphere;
  if (s == "cube") return ShapeKind::cube;
  if (s == "disk") return ShapeKind::disk;
  throw std::invalid_argument("unknown shape kind: " + s);
}

std::string to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::sphere: return "sphere";
    case ShapeKind::cube: return "cube";
    case ShapeKind::disk: return "disk";
  }
  return "?";
}

std::string to_string(Task task) {
  return task == Task::classification ? "classification" : "segmentation";
}

Task task_from_string(const std::string& s) {
  if (s == "classification") return Task::classification;
  if (s == "segmentation") return Task::segmentation;
  throw std::invalid_argument("unknown task: " + s);
}

}  // namespace pwc
