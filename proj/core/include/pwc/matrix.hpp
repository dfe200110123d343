#pragma once

#include <cstddef>
#include <vector>

namespace pwc {

// Dense row-major matrix. Feature maps are Mat<T> with one row per point;
// N x C_in going into a layer, N x C_out coming out.
template <class T>
struct Mat {
  int rows = 0, cols = 0;
  std::vector<T> v;

  Mat() = default;
  Mat(int r, int c, T fill = T(0))
      : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, fill) {}

  T& operator()(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  const T& operator()(int r, int c) const {
    return v[static_cast<std::size_t>(r) * cols + c];
  }
  T* row(int r) { return v.data() + static_cast<std::size_t>(r) * cols; }
  const T* row(int r) const { return v.data() + static_cast<std::size_t>(r) * cols; }

  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

using MatF = Mat<float>;
using MatD = Mat<double>;

}  // namespace pwc
