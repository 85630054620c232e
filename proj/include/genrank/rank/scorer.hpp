#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "genrank/corpus/dataset.hpp"
#include "genrank/model/transformer.hpp"
#include "genrank/rank/run.hpp"
#include "genrank/text/vocabulary.hpp"

namespace genrank::rank {

struct PassageRef {
  std::string pid;
  std::string_view text;
};

// q_given_a: log p(question | passage).
// a_given_q_lennorm: log p(passage | question) / (passage tokens + 1).
template <typename Scalar>
double score_pair(const lm::CausalLm<Scalar>& model, const text::Vocabulary& vocab, std::string_view question,
                  std::string_view passage, Scorer scorer);

// Scores every candidate and sorts them. Throws InputError when empty.
template <typename Scalar>
RunRecord score_candidates(const lm::CausalLm<Scalar>& model, const text::Vocabulary& vocab, const std::string& qid,
                           std::string_view question, std::span<const PassageRef> passages, Scorer scorer,
                           std::size_t workers = 1);

// One record per question of the split, in split order.
template <typename Scalar>
std::vector<RunRecord> rank_split(const lm::CausalLm<Scalar>& model, const text::Vocabulary& vocab,
                                  const corpus::SplitView& split, Scorer scorer, std::size_t workers = 1);

}  // namespace genrank::rank
