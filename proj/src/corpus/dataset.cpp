#include "genrank/corpus/dataset.hpp"

#include <algorithm>

#include "genrank/errors.hpp"

namespace genrank::corpus {

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train:
      return "train";
    case Split::validation:
      return "validation";
    case Split::test:
      return "test";
  }
  return "?";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "validation" || name == "valid" || name == "dev") return Split::validation;
  if (name == "test") return Split::test;
  throw InputError("unknown split '" + std::string(name) + "'");
}

std::size_t Question::positives() const {
  return static_cast<std::size_t>(
      std::count_if(candidates.begin(), candidates.end(), [](const Candidate& c) { return c.label == 1; }));
}

void QaDataset::define_question(const std::string& qid, const std::string& text, Split split) {
  if (qid.empty()) throw ValidationError("empty question id");
  if (auto it = question_index_.find(qid); it != question_index_.end()) {
    const auto& q = questions_[it->second];
    if (q.text != text || q.split != split) {
      throw ValidationError("question " + qid + " defined twice with different text or split");
    }
    return;
  }
  Question q{qid, text, split, {}};
  if (auto p = pending_.find(qid); p != pending_.end()) {
    q.candidates = std::move(p->second);
    pending_.erase(p);
  }
  question_index_.emplace(qid, questions_.size());
  questions_.push_back(std::move(q));
}

void QaDataset::define_passage(const std::string& pid, const std::string& text) {
  if (pid.empty()) throw ValidationError("empty passage id");
  auto [it, inserted] = passages_.emplace(pid, text);
  if (!inserted && it->second != text) throw ValidationError("passage " + pid + " defined twice with different text");
}

void QaDataset::add_judgment(const std::string& qid, const std::string& pid, int label) {
  if (label != 0 && label != 1) {
    throw ValidationError("judgment (" + qid + ", " + pid + "): label must be 0 or 1, got " + std::to_string(label));
  }
  auto it = question_index_.find(qid);
  auto& list = it != question_index_.end() ? questions_[it->second].candidates : pending_[qid];
  if (std::any_of(list.begin(), list.end(), [&](const Candidate& c) { return c.pid == pid; })) {
    throw ValidationError("duplicate judgment (" + qid + ", " + pid + ")");
  }
  list.push_back({pid, label});
}

void QaDataset::validate() const {
  if (!pending_.empty()) {
    throw ValidationError("judgment references unknown question id " + pending_.begin()->first);
  }
  std::map<std::string_view, Split> passage_split;
  for (const auto& q : questions_) {
    if (q.candidates.empty()) throw ValidationError("question " + q.id + " has no candidate passages");
    for (const auto& c : q.candidates) {
      if (!has_passage(c.pid)) {
        throw ValidationError("judgment (" + q.id + ", " + c.pid + ") references missing passage id " + c.pid);
      }
      auto [it, inserted] = passage_split.emplace(c.pid, q.split);
      if (!inserted && it->second != q.split) {
        throw ValidationError("passage " + c.pid + " is a candidate in both " + std::string(to_string(it->second)) +
                              " and " + std::string(to_string(q.split)));
      }
    }
  }
}

const Question& QaDataset::question(std::string_view qid) const {
  auto it = question_index_.find(qid);
  if (it == question_index_.end()) throw ValidationError("unknown question id " + std::string(qid));
  return questions_[it->second];
}

const std::string& QaDataset::passage(std::string_view pid) const {
  auto it = passages_.find(pid);
  if (it == passages_.end()) throw ValidationError("unknown passage id " + std::string(pid));
  return it->second;
}

std::size_t QaDataset::judgment_count() const {
  std::size_t n = 0;
  for (const auto& q : questions_) n += q.candidates.size();
  return n;
}

SplitStats QaDataset::stats(Split split) const {
  SplitStats s;
  for (const auto& q : questions_) {
    if (q.split != split) continue;
    ++s.questions;
    s.judgments += q.candidates.size();
    s.positives += q.positives();
  }
  return s;
}

bool QaDataset::operator==(const QaDataset& other) const {
  if (passages_ != other.passages_ || questions_.size() != other.questions_.size()) return false;
  for (std::size_t i = 0; i < questions_.size(); ++i) {
    const auto& a = questions_[i];
    const auto& b = other.questions_[i];
    if (a.id != b.id || a.text != b.text || a.split != b.split || a.candidates.size() != b.candidates.size()) {
      return false;
    }
    for (std::size_t k = 0; k < a.candidates.size(); ++k) {
      if (a.candidates[k].pid != b.candidates[k].pid || a.candidates[k].label != b.candidates[k].label) return false;
    }
  }
  return true;
}

SplitView::SplitView(const QaDataset& data, Split split) : data_(&data), split_(split) {
  for (const auto& q : data.questions()) {
    if (q.split == split) questions_.push_back(&q);
  }
}

}  // namespace genrank::corpus
