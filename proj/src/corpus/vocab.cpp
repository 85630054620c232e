#include "genrank/corpus/vocab.hpp"

#include <algorithm>
#include <set>

#include "genrank/text/tokenizer.hpp"

namespace genrank::corpus {

text::Vocabulary build_vocabulary(const QaDataset& data, std::span<const Split> splits, std::size_t max_size,
                                  std::size_t min_freq) {
  std::vector<std::string> tokens;
  std::set<std::string_view> seen;
  const auto append = [&](const std::string& text) {
    for (auto& t : text::tokenize(text)) tokens.push_back(std::move(t));
  };
  for (const auto& q : data.questions()) {
    if (std::find(splits.begin(), splits.end(), q.split) == splits.end()) continue;
    append(q.text);
    for (const auto& c : q.candidates) {
      if (seen.insert(c.pid).second) append(data.passage(c.pid));
    }
  }
  return text::Vocabulary::build(tokens, max_size, min_freq);
}

}  // namespace genrank::corpus
