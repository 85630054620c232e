#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "genrank/corpus/dataset.hpp"
#include "genrank/rank/run.hpp"

namespace genrank::rank {

// `qid Q0 pid rank score tag`, scores with 6 decimals.
void write_run(std::ostream& out, std::span<const RunRecord> run);
void write_run(const std::filesystem::path& path, std::span<const RunRecord> run);
// Records in first-appearance order of their qid, rankings sorted by score.
std::vector<RunRecord> read_run(std::istream& in, const std::string& source = "run");
std::vector<RunRecord> read_run(const std::filesystem::path& path);

// `qid 0 pid rel`.
void write_qrels(std::ostream& out, const Qrels& qrels);
void write_qrels(const std::filesystem::path& path, const Qrels& qrels);
Qrels read_qrels(std::istream& in, const std::string& source = "qrels");
Qrels read_qrels(const std::filesystem::path& path);

// Judgments of every question, or only those in `split`.
Qrels qrels_from(const corpus::QaDataset& data, std::optional<corpus::Split> split = std::nullopt);
Qrels qrels_from(const corpus::SplitView& split);

}  // namespace genrank::rank
