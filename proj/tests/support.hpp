#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "pwc/net.hpp"
#include "pwc/pointconv.hpp"
#include "pwc/rng.hpp"

namespace testsupport {

// O(N^2) reference forward: direct pairwise distance tests and inline
// binning arithmetic, no grid index and no shared neighborhood code. Kept
// independent of the library path it is used to check.
template <class T>
pwc::Mat<T> conv_forward_reference(const pwc::PointCloud& cloud, const pwc::Mat<T>& feats,
                                   const pwc::ConvParams<T>& params,
                                   const pwc::KernelSpec& kernel) {
  const int n = cloud.size();
  const int res = kernel.resolution;
  const int cells = res * res * res;
  const double r = kernel.radius;
  const double width = 2.0 * r / res;

  pwc::Mat<T> out(n, params.c_out);
  for (int i = 0; i < n; ++i) {
    std::vector<std::vector<int>> members(cells);
    for (int j = 0; j < n; ++j) {
      const double dx = cloud.positions[j].x - cloud.positions[i].x;
      const double dy = cloud.positions[j].y - cloud.positions[i].y;
      const double dz = cloud.positions[j].z - cloud.positions[i].z;
      bool inside;
      if (kernel.geometry == pwc::KernelGeometry::ball) {
        inside = dx * dx + dy * dy + dz * dz <= r * r;
      } else {
        inside = std::fabs(dx) <= r && std::fabs(dy) <= r && std::fabs(dz) <= r;
      }
      if (!inside) continue;
      auto bin = [&](double v) {
        int c = static_cast<int>(std::floor((v + r) / width));
        if (c < 0) c = 0;
        if (c >= res) c = res - 1;
        return c;
      };
      members[(bin(dx) * res + bin(dy)) * res + bin(dz)].push_back(j);
    }
    for (int o = 0; o < params.c_out; ++o) {
      T acc = params.bias[o];
      for (int k = 0; k < cells; ++k) {
        if (members[k].empty()) continue;
        for (int c = 0; c < params.c_in; ++c) {
          T sum = T(0);
          for (int j : members[k]) sum += feats(j, c);
          acc += params.w(o, c, k) * (sum / static_cast<T>(members[k].size()));
        }
      }
      out(i, o) = acc;
    }
  }
  return out;
}

inline double rel_err(double a, double b) {
  return std::fabs(a - b) / std::max(1.0, std::fabs(b));
}

template <class T>
double max_rel_err(const pwc::Mat<T>& a, const pwc::Mat<T>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    worst = std::max(worst, rel_err(static_cast<double>(a.v[i]), static_cast<double>(b.v[i])));
  }
  return worst;
}

inline pwc::PointCloud random_cloud(int n, std::uint64_t seed, double extent = 1.0) {
  pwc::Rng rng(pwc::derive_seed(seed, 77));
  pwc::PointCloud cloud;
  cloud.positions.reserve(n);
  for (int i = 0; i < n; ++i) {
    cloud.positions.push_back(
        {rng.uniform(0.0, extent), rng.uniform(0.0, extent), rng.uniform(0.0, extent)});
  }
  cloud.refresh_bounds();
  return cloud;
}

struct NetFdResult {
  double max_param_rel = 0.0;
  double max_input_rel = 0.0;
};

// Central-difference check of the full network backward pass against the
// cross-entropy training loss, over every parameter and input coordinate.
inline NetFdResult net_finite_diff(const pwc::NetworkSpec& spec, pwc::ModelState<double>& state,
                                   pwc::Mat<double> input, const pwc::CloudGeometry& geometry,
                                   const std::vector<int>& targets, double step = 1e-5) {
  auto loss_of = [&]() {
    pwc::Mat<double> out = pwc::net_forward(spec, state, input, geometry,
                                            static_cast<pwc::NetCaches<double>*>(nullptr), 1);
    return pwc::softmax_xent(out, targets).first;
  };

  pwc::NetCaches<double> caches;
  pwc::Mat<double> out = pwc::net_forward(spec, state, input, geometry, &caches, 1);
  auto [loss, grad] = pwc::softmax_xent(out, targets);
  (void)loss;
  pwc::NetGrads<double> analytic = pwc::net_backward(spec, state, caches, grad, 1);

  NetFdResult result;
  auto probe = [&](double& slot, double analytic_g, double& worst) {
    const double saved = slot;
    slot = saved + step;
    const double up = loss_of();
    slot = saved - step;
    const double down = loss_of();
    slot = saved;
    worst = std::max(worst, rel_err(analytic_g, (up - down) / (2.0 * step)));
  };

  for (std::size_t l = 0; l < state.params.size(); ++l) {
    for (std::size_t k = 0; k < state.params[l].w.size(); ++k) {
      probe(state.params[l].w[k], analytic.blocks[l].w[k], result.max_param_rel);
    }
    for (std::size_t k = 0; k < state.params[l].b.size(); ++k) {
      probe(state.params[l].b[k], analytic.blocks[l].b[k], result.max_param_rel);
    }
  }
  for (std::size_t k = 0; k < input.v.size(); ++k) {
    probe(input.v[k], analytic.input.v[k], result.max_input_rel);
  }
  return result;
}

// Unique scratch directory under the system temp dir, removed on
// destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("pwcnet_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::string str() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace testsupport
