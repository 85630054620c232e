#include "genrank/rank/run.hpp"

#include <algorithm>

#include "genrank/errors.hpp"

namespace genrank::rank {

std::string_view to_string(Scorer scorer) {
  return scorer == Scorer::q_given_a ? "q_given_a" : "a_given_q_lennorm";
}

Scorer parse_scorer(std::string_view name) {
  if (name == "q_given_a") return Scorer::q_given_a;
  if (name == "a_given_q" || name == "a_given_q_lennorm") return Scorer::a_given_q_lennorm;
  throw ConfigError("unknown scorer '" + std::string(name) + "' (expected q_given_a or a_given_q)");
}

bool ranks_before(const ScoredPassage& a, const ScoredPassage& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.pid > b.pid;
}

void sort_ranking(std::vector<ScoredPassage>& ranking) { std::sort(ranking.begin(), ranking.end(), ranks_before); }

void Qrels::add(const std::string& qid, const std::string& pid, int relevance) {
  if (relevance != 0 && relevance != 1) {
    throw InputError("qrels: relevance for (" + qid + ", " + pid + ") must be 0 or 1, got " +
                     std::to_string(relevance));
  }
  auto& row = judgments_[qid];
  if (!row.emplace(pid, relevance).second) throw InputError("qrels: duplicate judgment (" + qid + ", " + pid + ")");
}

std::optional<int> Qrels::label(std::string_view qid, std::string_view pid) const {
  auto q = judgments_.find(qid);
  if (q == judgments_.end()) return std::nullopt;
  auto p = q->second.find(pid);
  if (p == q->second.end()) return std::nullopt;
  return p->second;
}

std::size_t Qrels::relevant_count(std::string_view qid) const {
  auto q = judgments_.find(qid);
  if (q == judgments_.end()) return 0;
  std::size_t n = 0;
  for (const auto& [pid, rel] : q->second) n += rel > 0;
  return n;
}

std::size_t Qrels::size() const {
  std::size_t n = 0;
  for (const auto& [qid, row] : judgments_) n += row.size();
  return n;
}

}  // namespace genrank::rank
