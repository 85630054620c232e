#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "genrank/numeric/tensor.hpp"

namespace genrank {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename Scalar>
struct AdamState {
  AdamConfig config;
  std::vector<Tensor<Scalar>> first_moment;
  std::vector<Tensor<Scalar>> second_moment;
  std::int64_t step = 0;
};

template <typename Scalar>
AdamState<Scalar> make_adam_state(std::span<const Tensor<Scalar>> params, AdamConfig config = {}) {
  AdamState<Scalar> state;
  state.config = config;
  for (const auto& p : params) {
    state.first_moment.push_back(Tensor<Scalar>::Zero(p.rows(), p.cols()));
    state.second_moment.push_back(Tensor<Scalar>::Zero(p.rows(), p.cols()));
  }
  return state;
}

// Bias-corrected Adam update, in place.
template <typename Scalar>
void adam_step(std::span<Tensor<Scalar>> params, std::span<const Tensor<Scalar>> grads,
               AdamState<Scalar>& state) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    throw ConfigError("adam_step: " + std::to_string(params.size()) + " params, " +
                      std::to_string(grads.size()) + " grads, " +
                      std::to_string(state.first_moment.size()) + " moment slots");
  }
  if (state.step < 0) throw ConfigError("adam_step: negative step count");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].rows() != grads[i].rows() || params[i].cols() != grads[i].cols() ||
        state.first_moment[i].rows() != params[i].rows() ||
        state.first_moment[i].cols() != params[i].cols()) {
      throw ConfigError("adam_step: shape mismatch at tensor " + std::to_string(i) + " " +
                        shape_string(params[i]) + " vs grad " + shape_string(grads[i]));
    }
  }
  const auto& c = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const auto b1 = static_cast<Scalar>(c.beta1);
  const auto b2 = static_cast<Scalar>(c.beta2);
  const auto corr1 = static_cast<Scalar>(1.0 - std::pow(c.beta1, t));
  const auto corr2 = static_cast<Scalar>(1.0 - std::pow(c.beta2, t));
  const auto lr = static_cast<Scalar>(c.learning_rate);
  const auto eps = static_cast<Scalar>(c.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    m = b1 * m + (Scalar(1) - b1) * grads[i];
    v = b2 * v + (Scalar(1) - b2) * grads[i].cwiseAbs2();
    params[i].array() -= lr * (m.array() / corr1) / ((v.array() / corr2).sqrt() + eps);
  }
}

// Rescales grads in place so their joint L2 norm is at most max_norm.
// Returns the norm before clipping.
template <typename Scalar>
double clip_global_norm(std::span<Tensor<Scalar>> grads, double max_norm) {
  double sq = 0.0;
  for (const auto& g : grads) sq += static_cast<double>(g.squaredNorm());
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const auto factor = static_cast<Scalar>(max_norm / norm);
    for (auto& g : grads) g *= factor;
  }
  return norm;
}

}  // namespace genrank
