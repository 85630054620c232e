#pragma once

#include <span>

#include "genrank/corpus/dataset.hpp"
#include "genrank/text/vocabulary.hpp"

namespace genrank::corpus {

// Vocabulary over the question texts and (distinct) passages of `splits` only.
text::Vocabulary build_vocabulary(const QaDataset& data, std::span<const Split> splits, std::size_t max_size,
                                  std::size_t min_freq = 1);

}  // namespace genrank::corpus
