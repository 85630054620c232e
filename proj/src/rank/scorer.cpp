#include "genrank/rank/scorer.hpp"

#include "genrank/errors.hpp"
#include "genrank/text/encoding.hpp"
#include "genrank/util/parallel.hpp"

namespace genrank::rank {

template <typename Scalar>
double score_pair(const lm::CausalLm<Scalar>& model, const text::Vocabulary& vocab, std::string_view question,
                  std::string_view passage, Scorer scorer) {
  const auto max_len = model.config().pair_budget();
  if (scorer == Scorer::q_given_a) {
    const auto pair = text::encode_pair(passage, question, vocab, max_len);
    return static_cast<double>(lm::cond_log_likelihood(model, pair));
  }
  const auto pair = text::encode_pair(question, passage, vocab, max_len);
  return static_cast<double>(lm::cond_log_likelihood(model, pair)) / static_cast<double>(pair.question_len);
}

template <typename Scalar>
RunRecord score_candidates(const lm::CausalLm<Scalar>& model, const text::Vocabulary& vocab, const std::string& qid,
                           std::string_view question, std::span<const PassageRef> passages, Scorer scorer,
                           std::size_t workers) {
  if (passages.empty()) throw InputError("score_candidates: query " + qid + " has no candidates");
  RunRecord record{qid, std::vector<ScoredPassage>(passages.size()), std::string(to_string(scorer))};
  parallel_for(passages.size(), workers, [&](std::size_t i) {
    record.ranking[i] = {passages[i].pid, score_pair(model, vocab, question, passages[i].text, scorer)};
  });
  sort_ranking(record.ranking);
  return record;
}

template <typename Scalar>
std::vector<RunRecord> rank_split(const lm::CausalLm<Scalar>& model, const text::Vocabulary& vocab,
                                  const corpus::SplitView& split, Scorer scorer, std::size_t workers) {
  struct Job {
    std::size_t question;
    std::size_t candidate;
  };
  std::vector<Job> jobs;
  std::vector<RunRecord> run;
  run.reserve(split.size());
  for (std::size_t qi = 0; qi < split.size(); ++qi) {
    const auto& q = *split.questions()[qi];
    if (q.candidates.empty()) throw InputError("rank: query " + q.id + " has no candidates");
    run.push_back(RunRecord{q.id, std::vector<ScoredPassage>(q.candidates.size()), std::string(to_string(scorer))});
    for (std::size_t ci = 0; ci < q.candidates.size(); ++ci) jobs.push_back({qi, ci});
  }
  parallel_for(jobs.size(), workers, [&](std::size_t j) {
    const auto& q = *split.questions()[jobs[j].question];
    const auto& pid = q.candidates[jobs[j].candidate].pid;
    run[jobs[j].question].ranking[jobs[j].candidate] = {pid,
                                                        score_pair(model, vocab, q.text, split.passage(pid), scorer)};
  });
  for (auto& record : run) sort_ranking(record.ranking);
  return run;
}

#define GENRANK_INSTANTIATE(S)                                                                                    \
  template double score_pair(const lm::CausalLm<S>&, const text::Vocabulary&, std::string_view, std::string_view, \
                             Scorer);                                                                             \
  template RunRecord score_candidates(const lm::CausalLm<S>&, const text::Vocabulary&, const std::string&,        \
                                      std::string_view, std::span<const PassageRef>, Scorer, std::size_t);        \
  template std::vector<RunRecord> rank_split(const lm::CausalLm<S>&, const text::Vocabulary&,                     \
                                             const corpus::SplitView&, Scorer, std::size_t);

GENRANK_INSTANTIATE(float)
GENRANK_INSTANTIATE(double)

#undef GENRANK_INSTANTIATE

}  // namespace genrank::rank
