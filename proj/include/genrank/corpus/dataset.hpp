#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace genrank::corpus {

enum class Split { train, validation, test };

std::string_view to_string(Split split);
// Accepts train | validation | valid | dev | test.
Split parse_split(std::string_view name);

struct Candidate {
  std::string pid;
  int label = 0;

  bool operator==(const Candidate&) const = default;
};

struct Question {
  std::string id;
  std::string text;
  Split split = Split::train;
  std::vector<Candidate> candidates;  // judgment order

  std::size_t positives() const;
};

struct SplitStats {
  std::size_t questions = 0;
  std::size_t judgments = 0;
  std::size_t positives = 0;
  double passages_per_question() const {
    return questions == 0 ? 0.0 : static_cast<double>(judgments) / static_cast<double>(questions);
  }
};

// Questions, passages and binary judgments, each question tagged with a split.
// Built incrementally, then checked with validate().
class QaDataset {
 public:
  // Defining an id twice with different text/split is a ValidationError.
  void define_question(const std::string& qid, const std::string& text, Split split);
  void define_passage(const std::string& pid, const std::string& text);
  // Duplicate (qid, pid) pairs and non-binary labels are ValidationErrors.
  void add_judgment(const std::string& qid, const std::string& pid, int label);

  // Dangling ids, questions without candidates, passages shared across splits.
  void validate() const;

  const std::vector<Question>& questions() const { return questions_; }
  const Question& question(std::string_view qid) const;
  const std::string& passage(std::string_view pid) const;
  bool has_passage(std::string_view pid) const { return passages_.find(pid) != passages_.end(); }
  std::size_t passage_count() const { return passages_.size(); }
  std::size_t judgment_count() const;

  SplitStats stats(Split split) const;

  bool operator==(const QaDataset& other) const;

 private:
  std::vector<Question> questions_;
  std::map<std::string, std::size_t, std::less<>> question_index_;
  std::map<std::string, std::string, std::less<>> passages_;
  // Judgments may arrive before their question is defined.
  std::map<std::string, std::vector<Candidate>, std::less<>> pending_;
};

// Read-only access to the questions of one split.
class SplitView {
 public:
  SplitView(const QaDataset& data, Split split);

  Split split() const { return split_; }
  const QaDataset& dataset() const { return *data_; }
  const std::vector<const Question*>& questions() const { return questions_; }
  std::size_t size() const { return questions_.size(); }
  const std::string& passage(std::string_view pid) const { return data_->passage(pid); }

 private:
  const QaDataset* data_;
  Split split_;
  std::vector<const Question*> questions_;
};

}  // namespace genrank::corpus
