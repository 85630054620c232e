#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace genrank::text {

// Word-level tokenizer: ASCII-lowercases, splits on Unicode whitespace and
// peels leading/trailing ASCII punctuation into one-character tokens.
// Inner punctuation ("don't", "3.5") stays attached.
std::vector<std::string> tokenize(std::string_view text);

// Joins tokens with single spaces.
std::string detokenize(const std::vector<std::string>& tokens);

}  // namespace genrank::text
