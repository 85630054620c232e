#include "genrank/text/vocabulary.hpp"

#include <algorithm>
#include <fstream>

#include "genrank/errors.hpp"
#include "genrank/text/tokenizer.hpp"

namespace genrank::text {

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  for (std::size_t i = 0; i < kReservedCount; ++i) {
    if (i >= tokens_.size() || tokens_[i] != kReservedTokens[i]) {
      throw InputError("vocabulary: reserved token " + std::string(kReservedTokens[i]) +
                       " must have id " + std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) throw InputError("vocabulary: empty token at id " + std::to_string(i));
    auto [it, inserted] = index_.emplace(tokens_[i], static_cast<TokenId>(i));
    if (!inserted) throw InputError("vocabulary: duplicate token '" + tokens_[i] + "'");
  }
}

Vocabulary Vocabulary::build(std::span<const std::string> corpus, std::size_t max_size,
                             std::size_t min_freq) {
  if (corpus.empty()) throw InputError("build_vocab: empty corpus");
  if (max_size < kReservedCount) {
    throw ConfigError("build_vocab: max_size " + std::to_string(max_size) + " below reserved count " +
                      std::to_string(kReservedCount));
  }
  std::map<std::string, std::size_t, std::less<>> counts;
  for (const auto& record : corpus) {
    for (auto& t : tokenize(record)) ++counts[std::move(t)];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [token, n] : counts) {
    const bool reserved = std::find(kReservedTokens.begin(), kReservedTokens.end(), token) != kReservedTokens.end();
    if (!reserved && n >= min_freq) ranked.emplace_back(token, n);
  }
  // counts is already lexicographic, so a stable sort on frequency keeps ties ascending.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens(kReservedTokens.begin(), kReservedTokens.end());
  for (auto& [token, n] : ranked) {
    if (tokens.size() >= max_size) break;
    tokens.push_back(token);
  }
  return Vocabulary(std::move(tokens));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) { return Vocabulary(std::move(tokens)); }

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("vocabulary: cannot open " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  return Vocabulary(std::move(tokens));
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("vocabulary: cannot write " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::id(std::string_view token) const { return find(token).value_or(kUnk); }

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw InputError("vocabulary: id " + std::to_string(id) + " out of range");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<TokenId> Vocabulary::encode(std::string_view text) const {
  std::vector<TokenId> ids;
  for (const auto& t : tokenize(text)) ids.push_back(id(t));
  return ids;
}

std::string Vocabulary::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) {
    if (!out.empty()) out += ' ';
    out += token(id);
  }
  return out;
}

}  // namespace genrank::text
