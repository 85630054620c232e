#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "genrank/model/transformer.hpp"
#include "genrank/text/vocabulary.hpp"
#include "genrank/util/random.hpp"

namespace genrank::gen {

struct SamplerConfig {
  std::size_t top_k = 50;
  double top_p = 0.95;
  double temperature = 1.0;
  std::size_t max_new_tokens = 32;
  std::uint64_t seed = 0;

  // Throws ConfigError.
  void validate() const;
};

// Temperature, softmax, top-k, then the smallest nucleus of the renormalised
// survivors with mass >= top_p. Tokens outside the support get probability 0.
std::vector<double> filter_logits(std::span<const double> logits, const SamplerConfig& config);

// Index drawn from a distribution by walking its cumulative sum with u in [0, 1).
TokenId draw(std::span<const double> distribution, double u);

// Sees each step's filtered distribution and the token drawn from it.
using StepObserver = std::function<void(std::size_t step, std::span<const double> distribution, TokenId token)>;

// Extends `prompt` until <eoq>, max_new_tokens or the context window is full.
// Returns the generated ids, <eoq> excluded.
template <typename Scalar>
std::vector<TokenId> sample_continuation(const lm::CausalLm<Scalar>& model, std::vector<TokenId> prompt,
                                         const SamplerConfig& config, Rng& rng, const StepObserver& observer = {});

// Samples a question for `passage` (or, with the roles swapped, a passage for
// a question) using config.seed. Throws InputError if the prompt cannot fit.
template <typename Scalar>
std::string sample_question(const lm::CausalLm<Scalar>& model, const text::Vocabulary& vocab,
                            std::string_view passage, const SamplerConfig& config, const StepObserver& observer = {});

}  // namespace genrank::gen
