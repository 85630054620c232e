#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "genrank/model/config.hpp"
#include "genrank/numeric/ops.hpp"
#include "genrank/text/encoding.hpp"
#include "genrank/util/random.hpp"

namespace genrank::lm {

using text::EncodedPair;

// Per-call dropout source. Absent means evaluation mode.
struct DropoutContext {
  Rng* rng = nullptr;
  double rate = 0.0;
};

template <typename Scalar>
class CausalLm;

// A model's weights registered as leaves of one graph.
template <typename Scalar>
struct BoundModel {
  const CausalLm<Scalar>* model = nullptr;
  Graph<Scalar>* graph = nullptr;
  std::vector<Var<Scalar>> params;
  DropoutContext dropout;

  const Var<Scalar>& param(std::size_t i) const { return params[i]; }
};

// Decoder-only pre-LN transformer with learned positions.
template <typename Scalar>
class CausalLm {
 public:
  CausalLm(ModelConfig config, ModelParams<Scalar> params) : config_(config), params_(std::move(params)) {
    config_.validate();
    const auto layout = parameter_layout(config_);
    if (layout.size() != params_.size()) {
      throw ConfigError("model: expected " + std::to_string(layout.size()) + " tensors, got " +
                        std::to_string(params_.size()));
    }
    for (std::size_t i = 0; i < layout.size(); ++i) {
      const auto& t = params_.tensors[i];
      if (params_.names[i] != layout[i].name || t.rows() != layout[i].rows || t.cols() != layout[i].cols) {
        throw ConfigError("model: tensor " + std::to_string(i) + " is " + params_.names[i] + shape_string(t) +
                          ", expected " + layout[i].name + shape_string(layout[i].rows, layout[i].cols));
      }
    }
  }

  static CausalLm initialized(const ModelConfig& config, std::uint64_t seed) {
    return CausalLm(config, init_params<Scalar>(config, seed));
  }

  const ModelConfig& config() const { return config_; }
  const ModelParams<Scalar>& params() const { return params_; }
  // Callers must not change tensor shapes.
  ModelParams<Scalar>& mutable_params() { return params_; }

  // Registers the weights in `graph`. Views alias this model, which must stay
  // alive and unchanged until the graph is gone.
  BoundModel<Scalar> bind(Graph<Scalar>& graph, bool trainable, DropoutContext dropout = {}) const {
    BoundModel<Scalar> bound{this, &graph, {}, dropout};
    bound.params.reserve(params_.size());
    for (const auto& t : params_.tensors) {
      bound.params.push_back(trainable ? graph.parameter_view(t) : graph.constant_view(t));
    }
    return bound;
  }

  // Final-layer-normalised hidden states, [len x d_model].
  Var<Scalar> hidden_states(const BoundModel<Scalar>& b, std::span<const TokenId> ids) const {
    if (ids.empty()) throw InputError("forward: empty token sequence");
    if (ids.size() > config_.max_seq_len) {
      throw InputError("forward: sequence of " + std::to_string(ids.size()) + " exceeds max_seq_len " +
                       std::to_string(config_.max_seq_len));
    }
    std::vector<TokenId> positions(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) positions[i] = static_cast<TokenId>(i);

    Var<Scalar> x = add(embedding(b.param(0), ids), embedding(b.param(1), std::span<const TokenId>(positions)));
    x = maybe_dropout(b, x);

    const Index d = static_cast<Index>(config_.d_model);
    const Index hd = static_cast<Index>(config_.head_dim());
    const auto inv_sqrt = static_cast<Scalar>(1.0 / std::sqrt(static_cast<double>(hd)));
    std::size_t p = 2;
    for (std::size_t layer = 0; layer < config_.n_layers; ++layer, p += 12) {
      Var<Scalar> h = layer_norm(x, b.param(p), b.param(p + 1));
      Var<Scalar> qkv = add_row(matmul(h, b.param(p + 2)), b.param(p + 3));
      std::vector<Var<Scalar>> heads;
      heads.reserve(config_.n_heads);
      for (std::size_t head = 0; head < config_.n_heads; ++head) {
        const Index off = static_cast<Index>(head) * hd;
        Var<Scalar> q = slice_cols(qkv, off, hd);
        Var<Scalar> k = slice_cols(qkv, d + off, hd);
        Var<Scalar> v = slice_cols(qkv, 2 * d + off, hd);
        Var<Scalar> att = softmax_rows(causal_mask(scale(matmul_nt(q, k), inv_sqrt)));
        heads.push_back(matmul(att, v));
      }
      Var<Scalar> mixed = heads.size() == 1 ? heads.front() : concat_cols(heads);
      Var<Scalar> attn_out = add_row(matmul(mixed, b.param(p + 4)), b.param(p + 5));
      x = add(x, maybe_dropout(b, attn_out));

      h = layer_norm(x, b.param(p + 6), b.param(p + 7));
      Var<Scalar> f = gelu(add_row(matmul(h, b.param(p + 8)), b.param(p + 9)));
      f = add_row(matmul(f, b.param(p + 10)), b.param(p + 11));
      x = add(x, maybe_dropout(b, f));
    }
    return layer_norm(x, b.param(p), b.param(p + 1));
  }

  // Next-token logits for each row of `hidden`, [rows x vocab].
  Var<Scalar> project(const BoundModel<Scalar>& b, const Var<Scalar>& hidden) const {
    const auto& head = config_.tie_embeddings ? b.param(0) : b.params.back();
    return matmul_nt(hidden, head);
  }

  Var<Scalar> logits(const BoundModel<Scalar>& b, std::span<const TokenId> ids) const {
    return project(b, hidden_states(b, ids));
  }

  // Row i holds the logits for the token following ids[0..i].
  Tensor<Scalar> forward_logits(std::span<const TokenId> ids) const {
    Graph<Scalar> graph;
    auto b = bind(graph, false);
    return logits(b, ids).value();
  }

 private:
  Var<Scalar> maybe_dropout(const BoundModel<Scalar>& b, const Var<Scalar>& x) const {
    if (b.dropout.rng == nullptr || b.dropout.rate <= 0.0) return x;
    Tensor<Scalar> keep(x.rows(), x.cols());
    for (Index i = 0; i < keep.size(); ++i) {
      keep.data()[i] = b.dropout.rng->uniform() >= b.dropout.rate ? Scalar(1) : Scalar(0);
    }
    return dropout(x, keep, static_cast<Scalar>(b.dropout.rate));
  }

  ModelConfig config_;
  ModelParams<Scalar> params_;
};

// log p(target_i | prefix) for each scored target of `pair`, [question_len x 1].
template <typename Scalar>
Var<Scalar> target_log_probs(const BoundModel<Scalar>& b, const EncodedPair& pair) {
  text::validate(pair);
  const auto& model = *b.model;
  const std::span<const TokenId> ids(pair.ids);
  // The final <eoq> is never an input.
  const auto hidden = model.hidden_states(b, ids.first(ids.size() - 1));
  const auto scored = slice_rows(hidden, static_cast<Index>(pair.loss_start), static_cast<Index>(pair.question_len));
  return pick_per_row(log_softmax_rows(model.project(b, scored)), pair.targets());
}

// Sequence log-likelihood of the target given the context, as a 1x1 node.
template <typename Scalar>
Var<Scalar> sequence_log_likelihood(const BoundModel<Scalar>& b, const EncodedPair& pair) {
  return sum(target_log_probs(b, pair));
}

template <typename Scalar>
std::vector<Scalar> per_token_log_probs(const CausalLm<Scalar>& model, const EncodedPair& pair) {
  if (pair.question_len == 0) throw InputError("per_token_log_probs: question_len is 0");
  Graph<Scalar> graph;
  auto b = model.bind(graph, false);
  const auto& lp = target_log_probs(b, pair).value();
  return std::vector<Scalar>(lp.data(), lp.data() + lp.size());
}

// log p(question | passage): sum over the question tokens and <eoq>.
template <typename Scalar>
Scalar cond_log_likelihood(const CausalLm<Scalar>& model, const EncodedPair& pair) {
  if (pair.question_len == 0) throw InputError("cond_log_likelihood: question_len is 0");
  Graph<Scalar> graph;
  auto b = model.bind(graph, false);
  return sequence_log_likelihood(b, pair).item();
}

extern template class CausalLm<float>;
extern template class CausalLm<double>;

}  // namespace genrank::lm
