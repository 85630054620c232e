#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "genrank/corpus/dataset.hpp"
#include "genrank/model/transformer.hpp"
#include "genrank/objectives/losses.hpp"
#include "genrank/rank/run.hpp"
#include "genrank/text/vocabulary.hpp"
#include "genrank/util/random.hpp"

namespace genrank::train {

enum class Objective { mle, lul, rll };

std::string_view to_string(Objective objective);
Objective parse_objective(std::string_view name);

// Which side of a pair is generated. a_given_q trains p(passage | question)
// and validates with the length-normalised reverse scorer.
enum class Direction { q_given_a, a_given_q };

std::string_view to_string(Direction direction);
Direction parse_direction(std::string_view name);

struct TrainConfig {
  Objective objective = Objective::mle;
  Direction direction = Direction::q_given_a;
  std::size_t max_epochs = 10;
  std::size_t batch_size = 32;         // pairs per step, MLE and LUL
  std::size_t rll_batch_questions = 8;  // questions per step, RLL
  std::size_t negatives_per_positive = 5;
  std::size_t rll_sample_size = 15;
  double rll_margin = 1.0;
  double learning_rate = 1e-4;
  double clip_norm = 1.0;
  std::size_t patience = 2;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::size_t chunk_size = 4;  // examples per gradient chunk; fixes summation order

  // Throws ConfigError.
  void validate() const;

  bool operator==(const TrainConfig&) const = default;
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_map = 0.0;
  std::size_t steps = 0;
  bool improved = false;
};

struct TrainReport {
  TrainConfig config;
  std::vector<double> train_loss;  // per epoch, mean over steps
  std::vector<double> val_map;     // per epoch
  std::size_t best_epoch = 0;      // 1-based, 0 before any epoch
  double best_val_map = 0.0;
  bool stopped_early = false;
  std::size_t steps = 0;
  std::string checkpoint;

  std::string to_json() const;
  bool operator==(const TrainReport&) const = default;
};

// Stop after `patience` consecutive epochs without a strictly better metric.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  // Returns true when `metric` is the new best.
  bool update(double metric);
  bool should_stop() const { return stale_ >= patience_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best() const { return best_; }

 private:
  std::size_t patience_;
  std::size_t epochs_ = 0;
  std::size_t stale_ = 0;
  std::size_t best_epoch_ = 0;
  double best_ = 0.0;
};

// For each positive, up to `per_positive` negatives drawn without replacement
// from the question's negatives; each positive is followed by its negatives.
// Empty when the question has no positive.
std::vector<corpus::Candidate> sample_lul_batch(const corpus::Question& question, Rng& rng,
                                                std::size_t per_positive = 5);

// Index of the largest score; ties go to the lexicographically smallest pid.
std::size_t pick_hardest(std::span<const double> scores, std::span<const std::string> pids);

// The candidate whose encoding the model finds most likely.
// Throws UsageError when `pairs` is empty.
template <typename Scalar>
std::size_t hardest_negative(const lm::CausalLm<Scalar>& model, std::span<const text::EncodedPair> pairs,
                             std::span<const std::string> pids, std::size_t workers = 1);

template <typename Scalar>
struct BatchGradient {
  double loss = 0.0;
  std::vector<Tensor<Scalar>> grads;
};

// Loss and gradient of one batch, built from fixed-size chunks whose graphs
// share the batch normaliser. Chunk results are summed in chunk order, so the
// result does not depend on `workers`. `dropout_seed` seeds chunk c with
// Rng(dropout_seed + c) when the model has dropout.
template <typename Scalar>
BatchGradient<Scalar> mle_gradient(const lm::CausalLm<Scalar>& model, std::span<const text::EncodedPair> batch,
                                   std::size_t chunk_size, std::size_t workers, std::uint64_t dropout_seed = 0);
template <typename Scalar>
BatchGradient<Scalar> lul_gradient(const lm::CausalLm<Scalar>& model, std::span<const objectives::LabeledPair> batch,
                                   std::size_t chunk_size, std::size_t workers, std::uint64_t dropout_seed = 0);
template <typename Scalar>
BatchGradient<Scalar> rll_gradient(const lm::CausalLm<Scalar>& model, std::span<const objectives::RankTriple> batch,
                                   std::size_t chunk_size, std::size_t workers, std::uint64_t dropout_seed = 0);

// Validation MAP of `model` with the scorer matching `direction`.
template <typename Scalar>
double validation_map(const lm::CausalLm<Scalar>& model, const text::Vocabulary& vocab,
                      const corpus::SplitView& validation, Direction direction, std::size_t workers = 1);

using EpochCallback = std::function<void(const EpochStats&)>;

// Fine-tunes `model` on the train split, validating after every epoch, and
// leaves the best-validation weights in `model`. Those weights are also written
// to `checkpoint` when it is given, with `vocabulary_file` recorded in it.
// Only the train and validation views are read; any other split is a
// UsageError. A non-finite loss restores the best weights and rethrows.
template <typename Scalar>
TrainReport train(lm::CausalLm<Scalar>& model, const text::Vocabulary& vocab, const corpus::SplitView& train_split,
                  const corpus::SplitView& validation, const TrainConfig& config,
                  const std::optional<std::filesystem::path>& checkpoint = std::nullopt,
                  const std::string& vocabulary_file = {}, const EpochCallback& on_epoch = {});

}  // namespace genrank::train
