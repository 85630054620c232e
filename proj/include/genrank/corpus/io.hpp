#pragma once

#include <filesystem>

#include "genrank/corpus/dataset.hpp"

namespace genrank::corpus {

// One record per judgment:
//   jsonl: {"qid", "question", "pid", "passage", "label", "split"}
//   tsv:   header "qid question pid passage label split", tab separated
// question/passage text may be omitted on records whose ids were defined by an
// earlier record.
enum class Format { jsonl, tsv };

// From the extension: .jsonl/.json or .tsv.
Format format_for(const std::filesystem::path& path);

// Validates the result and logs per-split counts. Malformed lines raise
// InputError with the line number; referential problems raise ValidationError.
QaDataset load_dataset(const std::filesystem::path& path, Format format);
QaDataset load_dataset(const std::filesystem::path& path);

void save_dataset(const QaDataset& data, const std::filesystem::path& path, Format format);
void save_dataset(const QaDataset& data, const std::filesystem::path& path);

}  // namespace genrank::corpus
