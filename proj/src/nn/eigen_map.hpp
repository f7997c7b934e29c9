#pragma once

#include <Eigen/Core>

#include <cstddef>

namespace emgkey::nn::detail {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MapMat = Eigen::Map<Mat<T>>;
template <class T>
using CMapMat = Eigen::Map<const Mat<T>>;

template <class T>
MapMat<T> map(T* p, std::size_t rows, std::size_t cols) {
  return MapMat<T>(p, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

template <class T>
CMapMat<T> cmap(const T* p, std::size_t rows, std::size_t cols) {
  return CMapMat<T>(p, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

}  // namespace emgkey::nn::detail
