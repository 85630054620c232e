#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "genrank/numeric/tensor.hpp"

namespace genrank::text {

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kUnk = 1;
inline constexpr TokenId kBos = 2;
inline constexpr TokenId kBoq = 3;
inline constexpr TokenId kEoq = 4;
inline constexpr std::array<std::string_view, 5> kReservedTokens{"<pad>", "<unk>", "<bos>", "<boq>", "<eoq>"};
inline constexpr std::size_t kReservedCount = kReservedTokens.size();

// Token <-> id map. Reserved tokens occupy ids 0..4; everything else follows.
// Immutable once built.
class Vocabulary {
 public:
  // Keeps the most frequent tokens (ties: lexicographically smaller first) with
  // count >= min_freq, up to max_size entries in total including reserved ones.
  static Vocabulary build(std::span<const std::string> corpus, std::size_t max_size,
                          std::size_t min_freq = 1);

  // Tokens in id order; the reserved prefix must be exactly kReservedTokens.
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  // One token per line, line number = id.
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::optional<TokenId> find(std::string_view token) const;
  // Unknown tokens map to kUnk.
  TokenId id(std::string_view token) const;
  const std::string& token(TokenId id) const;

  std::vector<TokenId> encode(std::string_view text) const;
  std::string decode(std::span<const TokenId> ids) const;

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  explicit Vocabulary(std::vector<std::string> tokens);

  std::vector<std::string> tokens_;
  std::map<std::string, TokenId, std::less<>> index_;
};

}  // namespace genrank::text
