#pragma once

#include <span>
#include <vector>

#include "genrank/model/transformer.hpp"

// Fine-tuning objectives over conditional question likelihoods.
//
// MLE and LUL use a mean-per-token reduction: the summed token losses are
// divided by the number of scored targets in the batch (multiply by
// token_count() to recover corpus sums). RLL averages its hinge over triples
// and uses summed, not length-normalised, sequence log-likelihoods.
//
// Each batch loss takes an optional `normalizer`; passing the count of a larger
// batch lets several sub-batch graphs add up to that batch's loss exactly.

namespace genrank::objectives {

using lm::BoundModel;
using lm::CausalLm;
using text::EncodedPair;

// Probabilities entering log(1 - p) are clamped to [kProbClamp, 1 - kProbClamp].
inline constexpr double kProbClamp = 1e-12;

struct LabeledPair {
  EncodedPair pair;
  int label = 1;  // 1 relevant, 0 not
};

struct RankTriple {
  EncodedPair positive;  // q | a+
  EncodedPair negative;  // q | a-
  double margin = 1.0;
};

std::size_t token_count(std::span<const EncodedPair> batch);
std::size_t token_count(std::span<const LabeledPair> batch);

// Throws UsageError unless both encodings score the same question tokens.
void check_triple(const RankTriple& triple);

// -sum_i log p(q_i | q_<i, a)
template <typename S>
Var<S> nll_sum(const BoundModel<S>& b, const EncodedPair& pair) {
  return affine(sum(lm::target_log_probs(b, pair)), S(-1));
}

// -sum_i log(1 - p(q_i | q_<i, a)), p clamped away from 0 and 1.
template <typename S>
Var<S> unlikelihood_sum(const BoundModel<S>& b, const EncodedPair& pair) {
  const auto lo = static_cast<S>(kProbClamp);
  const auto hi = static_cast<S>(1.0 - kProbClamp);
  auto p = clamp(exp(lm::target_log_probs(b, pair)), lo, hi);
  return affine(sum(log(affine(p, S(-1), S(1)))), S(-1));
}

template <typename S>
Var<S> labeled_sum(const BoundModel<S>& b, const LabeledPair& item) {
  if (item.label != 0 && item.label != 1) {
    throw UsageError("lul: label must be 0 or 1, got " + std::to_string(item.label));
  }
  return item.label == 1 ? nll_sum(b, item.pair) : unlikelihood_sum(b, item.pair);
}

// max{0, margin - log_pos + log_neg} over 1x1 log-likelihood nodes.
template <typename S>
Var<S> ranking_hinge(const Var<S>& log_pos, const Var<S>& log_neg, double margin) {
  if (!(margin >= 0.0)) throw UsageError("rll: margin must be nonnegative");
  return relu(affine(sub(log_neg, log_pos), S(1), static_cast<S>(margin)));
}

template <typename S>
Var<S> hinge(const BoundModel<S>& b, const RankTriple& triple) {
  check_triple(triple);
  return ranking_hinge(lm::sequence_log_likelihood(b, triple.positive),
                       lm::sequence_log_likelihood(b, triple.negative), triple.margin);
}

namespace detail {

template <typename S, typename Item, typename Term>
Var<S> reduce(const BoundModel<S>& b, std::span<const Item> batch, double normalizer, Term term) {
  Var<S> total = term(b, batch.front());
  for (std::size_t i = 1; i < batch.size(); ++i) total = add(total, term(b, batch[i]));
  return scale(total, static_cast<S>(1.0 / normalizer));
}

}  // namespace detail

template <typename S>
Var<S> mle_loss(const BoundModel<S>& b, std::span<const EncodedPair> batch, double normalizer = 0.0) {
  if (batch.empty()) throw UsageError("mle_loss: empty batch");
  if (normalizer <= 0.0) normalizer = static_cast<double>(token_count(batch));
  return detail::reduce<S>(b, batch, normalizer, [](const auto& bb, const EncodedPair& p) { return nll_sum(bb, p); });
}

template <typename S>
Var<S> lul_loss(const BoundModel<S>& b, std::span<const LabeledPair> batch, double normalizer = 0.0) {
  if (batch.empty()) throw UsageError("lul_loss: empty batch");
  if (normalizer <= 0.0) normalizer = static_cast<double>(token_count(batch));
  return detail::reduce<S>(b, batch, normalizer,
                           [](const auto& bb, const LabeledPair& p) { return labeled_sum(bb, p); });
}

template <typename S>
Var<S> rll_loss(const BoundModel<S>& b, std::span<const RankTriple> triples, double normalizer = 0.0) {
  if (triples.empty()) throw UsageError("rll_loss: no triples");
  if (normalizer <= 0.0) normalizer = static_cast<double>(triples.size());
  return detail::reduce<S>(b, triples, normalizer, [](const auto& bb, const RankTriple& t) { return hinge(bb, t); });
}

// Value-only evaluation on a model.
template <typename S>
S mle_loss(const CausalLm<S>& model, std::span<const EncodedPair> batch) {
  Graph<S> g;
  return mle_loss(model.bind(g, false), batch).item();
}

template <typename S>
S lul_loss(const CausalLm<S>& model, std::span<const LabeledPair> batch) {
  Graph<S> g;
  return lul_loss(model.bind(g, false), batch).item();
}

template <typename S>
S rll_loss(const CausalLm<S>& model, std::span<const RankTriple> triples) {
  Graph<S> g;
  return rll_loss(model.bind(g, false), triples).item();
}

}  // namespace genrank::objectives
