#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "genrank/text/vocabulary.hpp"

namespace genrank::text {

// `<bos> context <boq> target <eoq>` with the loss boundary.
//
// loss_start is the index of <boq>: the first position whose next-token
// prediction is scored. question_len counts the scored targets, i.e. the
// target tokens plus <eoq>.
struct EncodedPair {
  std::vector<TokenId> ids;
  std::size_t loss_start = 0;
  std::size_t question_len = 0;

  // The scored next-token targets, ids[loss_start + 1 ..].
  std::span<const TokenId> targets() const {
    return std::span<const TokenId>(ids).subspan(loss_start + 1);
  }
  // Target tokens without the trailing <eoq>.
  std::span<const TokenId> question_tokens() const {
    return std::span<const TokenId>(ids).subspan(loss_start + 1, question_len - 1);
  }

  bool operator==(const EncodedPair&) const = default;
};

// Context tokens are dropped from the right when the pair exceeds max_len.
// Throws InputError when the target is empty or cannot fit on its own.
EncodedPair encode_pair(std::span<const TokenId> context, std::span<const TokenId> target,
                        std::size_t max_len);
EncodedPair encode_pair(std::string_view passage, std::string_view question, const Vocabulary& vocab,
                        std::size_t max_len);

// `<bos> context <boq>`, the generation prompt. Throws if it does not leave
// room for at least one generated token within max_len.
std::vector<TokenId> encode_prompt(std::string_view context, const Vocabulary& vocab, std::size_t max_len);

// Throws InputError describing the first broken structural invariant.
void validate(const EncodedPair& pair);

}  // namespace genrank::text
