#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "genrank/numeric/tensor.hpp"
#include "genrank/util/random.hpp"

namespace genrank::lm {

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t d_model = 128;
  std::size_t n_layers = 2;
  std::size_t n_heads = 4;
  std::size_t d_ff = 512;
  std::size_t max_seq_len = 256;
  double dropout = 0.0;
  bool tie_embeddings = true;

  // Throws ConfigError.
  void validate() const;
  std::size_t head_dim() const { return d_model / n_heads; }
  // Longest encoded pair: its final <eoq> is never an input.
  std::size_t pair_budget() const { return max_seq_len + 1; }

  bool operator==(const ModelConfig&) const = default;
};

// Named weight tensors in a fixed order determined by the config.
template <typename Scalar>
struct ModelParams {
  std::vector<std::string> names;
  std::vector<Tensor<Scalar>> tensors;

  std::size_t size() const { return tensors.size(); }
  std::size_t index_of(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return i;
    }
    throw ConfigError("model params: no tensor named '" + std::string(name) + "'");
  }
  const Tensor<Scalar>& operator[](std::string_view name) const { return tensors[index_of(name)]; }
  Tensor<Scalar>& operator[](std::string_view name) { return tensors[index_of(name)]; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += static_cast<std::size_t>(t.size());
    return n;
  }

  template <typename To>
  ModelParams<To> cast() const {
    ModelParams<To> out;
    out.names = names;
    for (const auto& t : tensors) out.tensors.push_back(t.template cast<To>());
    return out;
  }
};

struct TensorSpec {
  std::string name;
  Index rows;
  Index cols;
};

// Names and shapes of every weight tensor for `config`, in storage order.
std::vector<TensorSpec> parameter_layout(const ModelConfig& config);

// GPT-2 style init: N(0, 0.02) weights, residual projections scaled by
// 1/sqrt(2 * n_layers), zero biases, unit layer-norm gains.
template <typename Scalar>
ModelParams<Scalar> init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  ModelParams<Scalar> params;
  const double residual_std = 0.02 / std::sqrt(2.0 * static_cast<double>(config.n_layers));
  for (const auto& spec : parameter_layout(config)) {
    Tensor<Scalar> t(spec.rows, spec.cols);
    const auto& n = spec.name;
    const auto ends_with = [&](std::string_view suffix) {
      return n.size() >= suffix.size() && n.compare(n.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    if (ends_with(".gain")) {
      t.setOnes();
    } else if (ends_with(".bias")) {
      t.setZero();
    } else {
      const double std = (ends_with("attn.out.weight") || ends_with("ffn.out.weight")) ? residual_std : 0.02;
      for (Index i = 0; i < t.size(); ++i) t.data()[i] = static_cast<Scalar>(std * rng.normal());
    }
    params.names.push_back(spec.name);
    params.tensors.push_back(std::move(t));
  }
  return params;
}

}  // namespace genrank::lm
