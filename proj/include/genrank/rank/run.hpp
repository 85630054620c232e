#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace genrank::rank {

enum class Scorer { q_given_a, a_given_q_lennorm };

std::string_view to_string(Scorer scorer);
// Accepts q_given_a, a_given_q and a_given_q_lennorm.
Scorer parse_scorer(std::string_view name);

struct ScoredPassage {
  std::string pid;
  double score = 0.0;

  bool operator==(const ScoredPassage&) const = default;
};

// Ranked candidates for one query.
struct RunRecord {
  std::string qid;
  std::vector<ScoredPassage> ranking;
  std::string tag;

  bool operator==(const RunRecord&) const = default;
};

// Score descending, ties by pid descending.
bool ranks_before(const ScoredPassage& a, const ScoredPassage& b);
void sort_ranking(std::vector<ScoredPassage>& ranking);

// Binary relevance judgments keyed by (qid, pid).
class Qrels {
 public:
  // Non-binary labels and repeated pairs are InputErrors.
  void add(const std::string& qid, const std::string& pid, int relevance);

  bool contains(std::string_view qid) const { return judgments_.find(qid) != judgments_.end(); }
  std::optional<int> label(std::string_view qid, std::string_view pid) const;
  std::size_t relevant_count(std::string_view qid) const;
  std::size_t size() const;

  // qid -> pid -> relevance, both in lexicographic order.
  const std::map<std::string, std::map<std::string, int, std::less<>>, std::less<>>& judgments() const {
    return judgments_;
  }

  bool operator==(const Qrels&) const = default;

 private:
  std::map<std::string, std::map<std::string, int, std::less<>>, std::less<>> judgments_;
};

}  // namespace genrank::rank
