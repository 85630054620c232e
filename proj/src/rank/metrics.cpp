#include "genrank/rank/metrics.hpp"

#include <algorithm>
#include <set>

#include "genrank/errors.hpp"

namespace genrank::rank {

std::optional<double> average_precision(std::span<const int> ranked_labels, std::size_t total_relevant) {
  if (total_relevant == 0) return std::nullopt;
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < ranked_labels.size(); ++k) {
    if (ranked_labels[k] > 0) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
  }
  return sum / static_cast<double>(total_relevant);
}

std::optional<double> average_precision(std::span<const int> ranked_labels) {
  const auto relevant = static_cast<std::size_t>(std::count_if(ranked_labels.begin(), ranked_labels.end(),
                                                               [](int label) { return label > 0; }));
  return average_precision(ranked_labels, relevant);
}

double reciprocal_rank(std::span<const int> ranked_labels) {
  for (std::size_t k = 0; k < ranked_labels.size(); ++k) {
    if (ranked_labels[k] > 0) return 1.0 / static_cast<double>(k + 1);
  }
  return 0.0;
}

MetricsReport evaluate(std::span<const RunRecord> run, const Qrels& qrels) {
  MetricsReport report;
  std::set<std::string, std::less<>> seen;
  for (const auto& record : run) {
    if (!qrels.contains(record.qid)) throw InputError("evaluate: query " + record.qid + " has no qrels");
    if (!seen.insert(record.qid).second) throw InputError("evaluate: query " + record.qid + " appears twice in run");
    auto ranking = record.ranking;
    sort_ranking(ranking);
    std::vector<int> labels;
    labels.reserve(ranking.size());
    std::set<std::string_view> pids;
    for (const auto& item : ranking) {
      if (!pids.insert(item.pid).second) {
        throw InputError("evaluate: passage " + item.pid + " listed twice for query " + record.qid);
      }
      const auto label = qrels.label(record.qid, item.pid);
      if (!label) throw InputError("evaluate: unknown passage " + item.pid + " for query " + record.qid);
      labels.push_back(*label);
    }
    const auto ap = average_precision(labels, qrels.relevant_count(record.qid));
    if (!ap) {
      ++report.skipped;
      continue;
    }
    ++report.evaluated;
    report.map += *ap;
    report.mrr += reciprocal_rank(labels);
    report.p_at_1 += !labels.empty() && labels.front() > 0 ? 1.0 : 0.0;
  }
  if (report.evaluated > 0) {
    const auto n = static_cast<double>(report.evaluated);
    report.map /= n;
    report.mrr /= n;
    report.p_at_1 /= n;
  }
  return report;
}

}  // namespace genrank::rank
