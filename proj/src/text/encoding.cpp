#include "genrank/text/encoding.hpp"

#include <algorithm>
#include <string>

#include "genrank/errors.hpp"

namespace genrank::text {

EncodedPair encode_pair(std::span<const TokenId> context, std::span<const TokenId> target,
                        std::size_t max_len) {
  if (target.empty()) throw InputError("encode_pair: empty question");
  if (max_len < 3 || target.size() > max_len - 3) {
    throw InputError("encode_pair: question of " + std::to_string(target.size()) +
                     " tokens does not fit max_len " + std::to_string(max_len));
  }
  const std::size_t kept = std::min(context.size(), max_len - 3 - target.size());
  EncodedPair pair;
  pair.ids.reserve(kept + target.size() + 3);
  pair.ids.push_back(kBos);
  pair.ids.insert(pair.ids.end(), context.begin(), context.begin() + static_cast<std::ptrdiff_t>(kept));
  pair.loss_start = pair.ids.size();
  pair.ids.push_back(kBoq);
  pair.ids.insert(pair.ids.end(), target.begin(), target.end());
  pair.ids.push_back(kEoq);
  pair.question_len = target.size() + 1;
  return pair;
}

EncodedPair encode_pair(std::string_view passage, std::string_view question, const Vocabulary& vocab,
                        std::size_t max_len) {
  const auto context = vocab.encode(passage);
  const auto target = vocab.encode(question);
  return encode_pair(context, target, max_len);
}

std::vector<TokenId> encode_prompt(std::string_view context, const Vocabulary& vocab, std::size_t max_len) {
  auto tokens = vocab.encode(context);
  if (tokens.size() + 3 > max_len) {
    throw InputError("encode_prompt: context of " + std::to_string(tokens.size()) +
                     " tokens leaves no room to generate within " + std::to_string(max_len));
  }
  std::vector<TokenId> ids;
  ids.reserve(tokens.size() + 2);
  ids.push_back(kBos);
  ids.insert(ids.end(), tokens.begin(), tokens.end());
  ids.push_back(kBoq);
  return ids;
}

void validate(const EncodedPair& pair) {
  const auto& ids = pair.ids;
  if (ids.size() < 4) throw InputError("encoded pair: too short");
  if (ids.front() != kBos) throw InputError("encoded pair: must start with <bos>");
  if (ids.back() != kEoq) throw InputError("encoded pair: must end with <eoq>");
  if (std::count(ids.begin(), ids.end(), kBoq) != 1) throw InputError("encoded pair: need exactly one <boq>");
  if (pair.loss_start >= ids.size() || ids[pair.loss_start] != kBoq) {
    throw InputError("encoded pair: loss_start does not point at <boq>");
  }
  if (pair.question_len != ids.size() - 1 - pair.loss_start) {
    throw InputError("encoded pair: question_len inconsistent with loss_start");
  }
  if (pair.question_len < 2) throw InputError("encoded pair: empty question");
}

}  // namespace genrank::text
