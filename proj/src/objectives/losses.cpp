#include "genrank/objectives/losses.hpp"

#include <algorithm>

namespace genrank::objectives {

std::size_t token_count(std::span<const EncodedPair> batch) {
  std::size_t n = 0;
  for (const auto& p : batch) n += p.question_len;
  return n;
}

std::size_t token_count(std::span<const LabeledPair> batch) {
  std::size_t n = 0;
  for (const auto& p : batch) n += p.pair.question_len;
  return n;
}

void check_triple(const RankTriple& triple) {
  const auto a = triple.positive.targets();
  const auto b = triple.negative.targets();
  if (!std::equal(a.begin(), a.end(), b.begin(), b.end())) {
    throw UsageError("rll: positive and negative encodings score different question tokens");
  }
}

}  // namespace genrank::objectives
