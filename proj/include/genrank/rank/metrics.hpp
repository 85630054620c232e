#pragma once

#include <optional>
#include <span>

#include "genrank/rank/run.hpp"

namespace genrank::rank {

// Mean over relevant positions k of precision@k. Relevant items that were
// not retrieved count toward `total_relevant` and contribute zero.
// Empty when total_relevant is 0: the query is skipped.
std::optional<double> average_precision(std::span<const int> ranked_labels, std::size_t total_relevant);
std::optional<double> average_precision(std::span<const int> ranked_labels);

// 1/rank of the first relevant label, 0 when there is none.
double reciprocal_rank(std::span<const int> ranked_labels);

struct MetricsReport {
  double map = 0.0;
  double mrr = 0.0;
  double p_at_1 = 0.0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;  // no relevant judgments
};

// The ranking inside each record is re-sorted by score before evaluation.
// Throws InputError for a qid absent from qrels, an unjudged pid or a pid
// listed twice for one query.
MetricsReport evaluate(std::span<const RunRecord> run, const Qrels& qrels);

}  // namespace genrank::rank
