#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace repartee {

// All parameter and activation tensors are at most rank 2. Row-major storage
// so the on-disk layout (row-major little-endian) is a straight copy.
template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

using MatF = Mat<float>;
using VecF = Vec<float>;
using MatD = Mat<double>;
using VecD = Vec<double>;
using EIndex = Eigen::Index;

template <typename T>
bool all_finite(const Mat<T>& m) {
  return m.allFinite();
}

template <typename T>
bool all_finite(const Vec<T>& v) {
  return v.allFinite();
}

template <typename Dst, typename Src>
Mat<Dst> cast_mat(const Mat<Src>& m) {
  return m.template cast<Dst>();
}

template <typename Dst, typename Src>
Vec<Dst> cast_vec(const Vec<Src>& v) {
  return v.template cast<Dst>();
}

}  // namespace repartee
