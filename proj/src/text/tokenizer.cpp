#include "genrank/text/tokenizer.hpp"

#include <cctype>

namespace genrank::text {
namespace {

// Byte length of the whitespace code point starting at `pos`, or 0.
std::size_t whitespace_length(std::string_view s, std::size_t pos) {
  const auto byte = [&](std::size_t k) -> unsigned char {
    return pos + k < s.size() ? static_cast<unsigned char>(s[pos + k]) : 0;
  };
  const unsigned char b0 = byte(0);
  if (b0 == ' ' || (b0 >= 0x09 && b0 <= 0x0D)) return 1;
  if (b0 == 0xC2 && (byte(1) == 0x85 || byte(1) == 0xA0)) return 2;
  if (b0 == 0xE1 && byte(1) == 0x9A && byte(2) == 0x80) return 3;  // U+1680
  if (b0 == 0xE2 && byte(1) == 0x80) {
    const unsigned char b2 = byte(2);
    if ((b2 >= 0x80 && b2 <= 0x8A) || b2 == 0xA8 || b2 == 0xA9 || b2 == 0xAF) return 3;
  }
  if (b0 == 0xE2 && byte(1) == 0x81 && byte(2) == 0x9F) return 3;  // U+205F
  if (b0 == 0xE3 && byte(1) == 0x80 && byte(2) == 0x80) return 3;  // U+3000
  return 0;
}

bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

void split_chunk(std::string_view chunk, std::vector<std::string>& out) {
  std::size_t begin = 0;
  std::size_t end = chunk.size();
  while (begin < end && is_punct(chunk[begin])) out.emplace_back(1, chunk[begin++]);
  std::vector<std::string> trailing;
  while (end > begin && is_punct(chunk[end - 1])) trailing.emplace_back(1, chunk[--end]);
  if (end > begin) {
    std::string word(chunk.substr(begin, end - begin));
    for (auto& c : word) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    out.push_back(std::move(word));
  }
  out.insert(out.end(), trailing.rbegin(), trailing.rend());
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t pos = 0;
  std::size_t chunk_start = 0;
  while (pos < text.size()) {
    const std::size_t ws = whitespace_length(text, pos);
    if (ws == 0) {
      ++pos;
      continue;
    }
    if (pos > chunk_start) split_chunk(text.substr(chunk_start, pos - chunk_start), tokens);
    pos += ws;
    chunk_start = pos;
  }
  if (pos > chunk_start) split_chunk(text.substr(chunk_start, pos - chunk_start), tokens);
  return tokens;
}

std::string detokenize(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

}  // namespace genrank::text
