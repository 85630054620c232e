#include "genrank/generation/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "genrank/errors.hpp"
#include "genrank/text/encoding.hpp"

namespace genrank::gen {

void SamplerConfig::validate() const {
  if (top_k < 1) throw ConfigError("sampler: top_k must be >= 1");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw ConfigError("sampler: top_p must be in (0, 1]");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw ConfigError("sampler: temperature must be positive");
}

std::vector<double> filter_logits(std::span<const double> logits, const SamplerConfig& config) {
  config.validate();
  const std::size_t n = logits.size();
  if (n == 0) throw InputError("filter_logits: empty logits");
  for (double z : logits) {
    if (!std::isfinite(z)) throw InputError("filter_logits: non-finite logit");
  }
  std::vector<double> p(n);
  const double peak = *std::max_element(logits.begin(), logits.end());
  for (std::size_t i = 0; i < n; ++i) p[i] = std::exp((logits[i] - peak) / config.temperature);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });

  const std::size_t k = std::min(config.top_k, n);
  double top_mass = 0.0;
  for (std::size_t i = 0; i < k; ++i) top_mass += p[order[i]];

  std::size_t keep = 0;
  double cumulative = 0.0;
  while (keep < k) {
    cumulative += p[order[keep]] / top_mass;
    ++keep;
    if (cumulative >= config.top_p) break;
  }

  double kept_mass = 0.0;
  for (std::size_t i = 0; i < keep; ++i) kept_mass += p[order[i]];
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < keep; ++i) out[order[i]] = p[order[i]] / kept_mass;
  return out;
}

TokenId draw(std::span<const double> distribution, double u) {
  double cumulative = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < distribution.size(); ++i) {
    if (distribution[i] <= 0.0) continue;
    last = i;
    cumulative += distribution[i];
    if (u < cumulative) return static_cast<TokenId>(i);
  }
  return static_cast<TokenId>(last);  // rounding left u just above the total
}

template <typename Scalar>
std::vector<TokenId> sample_continuation(const lm::CausalLm<Scalar>& model, std::vector<TokenId> prompt,
                                         const SamplerConfig& config, Rng& rng, const StepObserver& observer) {
  config.validate();
  if (prompt.empty()) throw InputError("sample: empty prompt");
  const std::size_t window = model.config().max_seq_len;
  std::vector<TokenId> generated;
  std::vector<double> logits(model.config().vocab_size);
  for (std::size_t step = 0; step < config.max_new_tokens && prompt.size() <= window; ++step) {
    const auto all = model.forward_logits(prompt);
    const auto last = all.row(all.rows() - 1);
    for (std::size_t i = 0; i < logits.size(); ++i) logits[i] = static_cast<double>(last(static_cast<Index>(i)));
    const auto dist = filter_logits(logits, config);
    const TokenId token = draw(dist, rng.uniform());
    if (observer) observer(step, dist, token);
    if (token == text::kEoq) break;
    generated.push_back(token);
    prompt.push_back(token);
  }
  return generated;
}

template <typename Scalar>
std::string sample_question(const lm::CausalLm<Scalar>& model, const text::Vocabulary& vocab,
                            std::string_view passage, const SamplerConfig& config, const StepObserver& observer) {
  auto prompt = text::encode_prompt(passage, vocab, model.config().pair_budget());
  Rng rng(config.seed);
  return vocab.decode(sample_continuation(model, std::move(prompt), config, rng, observer));
}

#define GENRANK_INSTANTIATE(S)                                                                                  \
  template std::vector<TokenId> sample_continuation(const lm::CausalLm<S>&, std::vector<TokenId>,             \
                                                    const SamplerConfig&, Rng&, const StepObserver&);         \
  template std::string sample_question(const lm::CausalLm<S>&, const text::Vocabulary&, std::string_view,     \
                                       const SamplerConfig&, const StepObserver&);

GENRANK_INSTANTIATE(float)
GENRANK_INSTANTIATE(double)

#undef GENRANK_INSTANTIATE

}  // namespace genrank::gen
