#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "genrank/errors.hpp"

namespace genrank {

// Row-major dense 2-D tensor. Vectors are 1xN, scalars 1x1.
template <typename Scalar>
using Tensor = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Index = Eigen::Index;
using TokenId = std::int32_t;

enum class Precision { f32, f64 };

template <typename Scalar>
constexpr Precision precision_of() {
  static_assert(std::is_same_v<Scalar, float> || std::is_same_v<Scalar, double>);
  return std::is_same_v<Scalar, float> ? Precision::f32 : Precision::f64;
}

inline std::string shape_string(Index rows, Index cols) {
  return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
}

template <typename Derived>
std::string shape_string(const Eigen::MatrixBase<Derived>& m) {
  return shape_string(m.rows(), m.cols());
}

template <typename Scalar>
Tensor<Scalar> make_tensor(Index rows, Index cols, std::initializer_list<Scalar> values) {
  if (static_cast<Index>(values.size()) != rows * cols) {
    throw ConfigError("make_tensor: " + std::to_string(values.size()) +
                      " values for shape " + shape_string(rows, cols));
  }
  Tensor<Scalar> t(rows, cols);
  Index i = 0;
  for (Scalar v : values) t.data()[i++] = v;
  return t;
}

template <typename Scalar>
Tensor<Scalar> scalar_tensor(Scalar v) {
  Tensor<Scalar> t(1, 1);
  t(0, 0) = v;
  return t;
}

// Copy between scalar types, shape preserved.
template <typename To, typename From>
Tensor<To> tensor_cast(const Tensor<From>& t) {
  return t.template cast<To>();
}

}  // namespace genrank
