#include "genrank/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

#include "genrank/errors.hpp"
#include "genrank/model/checkpoint.hpp"
#include "genrank/numeric/adam.hpp"
#include "genrank/rank/metrics.hpp"
#include "genrank/rank/scorer.hpp"
#include "genrank/rank/trec_io.hpp"
#include "genrank/text/encoding.hpp"
#include "genrank/util/log.hpp"
#include "genrank/util/parallel.hpp"

namespace genrank::train {

using objectives::LabeledPair;
using objectives::RankTriple;
using text::EncodedPair;

std::string_view to_string(Objective objective) {
  switch (objective) {
    case Objective::mle:
      return "mle";
    case Objective::lul:
      return "lul";
    case Objective::rll:
      return "rll";
  }
  return "?";
}

Objective parse_objective(std::string_view name) {
  if (name == "mle") return Objective::mle;
  if (name == "lul") return Objective::lul;
  if (name == "rll") return Objective::rll;
  throw ConfigError("unknown objective '" + std::string(name) + "' (expected mle, lul or rll)");
}

std::string_view to_string(Direction direction) {
  return direction == Direction::q_given_a ? "q_given_a" : "a_given_q";
}

Direction parse_direction(std::string_view name) {
  if (name == "q_given_a") return Direction::q_given_a;
  if (name == "a_given_q") return Direction::a_given_q;
  throw ConfigError("unknown direction '" + std::string(name) + "' (expected q_given_a or a_given_q)");
}

void TrainConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string("train: ") + name + " must be positive");
  };
  positive(max_epochs, "max_epochs");
  positive(patience, "patience");
  positive(workers, "workers");
  positive(chunk_size, "chunk_size");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("train: learning_rate must be positive");
  }
  if (!(clip_norm >= 0.0)) throw ConfigError("train: clip_norm must be nonnegative (0 disables)");
  switch (objective) {
    case Objective::mle:
      positive(batch_size, "batch_size");
      break;
    case Objective::lul:
      positive(batch_size, "batch_size");
      positive(negatives_per_positive, "negatives_per_positive");
      break;
    case Objective::rll:
      positive(rll_batch_questions, "rll_batch_questions");
      positive(rll_sample_size, "rll_sample_size");
      if (!(rll_margin >= 0.0)) throw ConfigError("train: rll_margin must be nonnegative");
      break;
  }
}

std::string TrainReport::to_json() const {
  nlohmann::ordered_json j;
  j["objective"] = to_string(config.objective);
  j["direction"] = to_string(config.direction);
  j["config"] = {{"max_epochs", config.max_epochs},
                 {"batch_size", config.batch_size},
                 {"rll_batch_questions", config.rll_batch_questions},
                 {"negatives_per_positive", config.negatives_per_positive},
                 {"rll_sample_size", config.rll_sample_size},
                 {"rll_margin", config.rll_margin},
                 {"learning_rate", config.learning_rate},
                 {"clip_norm", config.clip_norm},
                 {"patience", config.patience},
                 {"seed", config.seed},
                 {"chunk_size", config.chunk_size}};
  j["train_loss"] = train_loss;
  j["val_map"] = val_map;
  j["best_epoch"] = best_epoch;
  j["best_val_map"] = best_val_map;
  j["stopped_early"] = stopped_early;
  j["steps"] = steps;
  j["checkpoint"] = checkpoint;
  return j.dump(2) + "\n";
}

bool EarlyStopping::update(double metric) {
  ++epochs_;
  if (best_epoch_ == 0 || metric > best_) {
    best_ = metric;
    best_epoch_ = epochs_;
    stale_ = 0;
    return true;
  }
  ++stale_;
  return false;
}

std::vector<corpus::Candidate> sample_lul_batch(const corpus::Question& question, Rng& rng,
                                                std::size_t per_positive) {
  std::vector<const corpus::Candidate*> negatives;
  for (const auto& c : question.candidates) {
    if (c.label == 0) negatives.push_back(&c);
  }
  std::vector<corpus::Candidate> out;
  for (const auto& c : question.candidates) {
    if (c.label != 1) continue;
    out.push_back(c);
    for (std::size_t i : rng.sample_indices(negatives.size(), per_positive)) out.push_back(*negatives[i]);
  }
  if (out.empty()) log().debug("lul: question {} has no positive, skipped", question.id);
  return out;
}

std::size_t pick_hardest(std::span<const double> scores, std::span<const std::string> pids) {
  if (scores.empty() || scores.size() != pids.size()) throw UsageError("pick_hardest: need matching nonempty inputs");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best] || (scores[i] == scores[best] && pids[i] < pids[best])) best = i;
  }
  return best;
}

template <typename Scalar>
std::size_t hardest_negative(const lm::CausalLm<Scalar>& model, std::span<const EncodedPair> pairs,
                             std::span<const std::string> pids, std::size_t workers) {
  if (pairs.empty()) throw UsageError("hardest_negative: no candidates");
  std::vector<double> scores(pairs.size());
  parallel_for(pairs.size(), workers,
               [&](std::size_t i) { scores[i] = static_cast<double>(lm::cond_log_likelihood(model, pairs[i])); });
  return pick_hardest(scores, pids);
}

namespace {

template <typename Scalar, typename Item, typename Loss>
BatchGradient<Scalar> chunked_gradient(const lm::CausalLm<Scalar>& model, std::span<const Item> batch,
                                       double normalizer, std::size_t chunk_size, std::size_t workers,
                                       std::uint64_t dropout_seed, Loss loss) {
  if (batch.empty()) throw UsageError("gradient: empty batch");
  if (chunk_size == 0) throw UsageError("gradient: chunk_size must be positive");
  const std::size_t chunks = (batch.size() + chunk_size - 1) / chunk_size;
  std::vector<double> losses(chunks);
  std::vector<std::vector<Tensor<Scalar>>> grads(chunks);
  const double rate = model.config().dropout;
  parallel_for(chunks, workers, [&](std::size_t c) {
    Rng rng(dropout_seed + c);
    lm::DropoutContext dropout;
    if (rate > 0.0) dropout = {&rng, rate};
    Graph<Scalar> graph;
    auto b = model.bind(graph, true, dropout);
    const std::size_t begin = c * chunk_size;
    const auto part = batch.subspan(begin, std::min(chunk_size, batch.size() - begin));
    auto value = loss(b, part, normalizer);
    graph.backward(value);
    losses[c] = static_cast<double>(value.item());
    grads[c].reserve(b.params.size());
    for (const auto& p : b.params) grads[c].push_back(graph.grad(p));
  });
  BatchGradient<Scalar> out;
  out.grads = std::move(grads[0]);
  out.loss = losses[0];
  for (std::size_t c = 1; c < chunks; ++c) {
    out.loss += losses[c];
    for (std::size_t i = 0; i < out.grads.size(); ++i) out.grads[i] += grads[c][i];
  }
  return out;
}

}  // namespace

template <typename Scalar>
BatchGradient<Scalar> mle_gradient(const lm::CausalLm<Scalar>& model, std::span<const EncodedPair> batch,
                                   std::size_t chunk_size, std::size_t workers, std::uint64_t dropout_seed) {
  const auto tokens = static_cast<double>(objectives::token_count(batch));
  return chunked_gradient(model, batch, tokens, chunk_size, workers, dropout_seed,
                          [](const auto& b, std::span<const EncodedPair> part, double n) {
                            return objectives::mle_loss(b, part, n);
                          });
}

template <typename Scalar>
BatchGradient<Scalar> lul_gradient(const lm::CausalLm<Scalar>& model, std::span<const LabeledPair> batch,
                                   std::size_t chunk_size, std::size_t workers, std::uint64_t dropout_seed) {
  const auto tokens = static_cast<double>(objectives::token_count(batch));
  return chunked_gradient(model, batch, tokens, chunk_size, workers, dropout_seed,
                          [](const auto& b, std::span<const LabeledPair> part, double n) {
                            return objectives::lul_loss(b, part, n);
                          });
}

template <typename Scalar>
BatchGradient<Scalar> rll_gradient(const lm::CausalLm<Scalar>& model, std::span<const RankTriple> batch,
                                   std::size_t chunk_size, std::size_t workers, std::uint64_t dropout_seed) {
  return chunked_gradient(model, batch, static_cast<double>(batch.size()), chunk_size, workers, dropout_seed,
                          [](const auto& b, std::span<const RankTriple> part, double n) {
                            return objectives::rll_loss(b, part, n);
                          });
}

template <typename Scalar>
double validation_map(const lm::CausalLm<Scalar>& model, const text::Vocabulary& vocab,
                      const corpus::SplitView& validation, Direction direction, std::size_t workers) {
  const auto scorer = direction == Direction::q_given_a ? rank::Scorer::q_given_a : rank::Scorer::a_given_q_lennorm;
  const auto run = rank::rank_split(model, vocab, validation, scorer, workers);
  return rank::evaluate(run, rank::qrels_from(validation)).map;
}

namespace {

// Token ids of every question and passage the trainer may touch.
class EncodedSplits {
 public:
  EncodedSplits(const text::Vocabulary& vocab, const corpus::SplitView& split, Direction direction,
                std::size_t budget)
      : direction_(direction), budget_(budget) {
    for (const auto* q : split.questions()) {
      questions_.emplace(q->id, vocab.encode(q->text));
      for (const auto& c : q->candidates) {
        if (!passages_.count(c.pid)) passages_.emplace(c.pid, vocab.encode(split.passage(c.pid)));
      }
    }
  }

  EncodedPair pair(const std::string& qid, const std::string& pid) const {
    const auto& q = questions_.at(qid);
    const auto& p = passages_.at(pid);
    return direction_ == Direction::q_given_a ? text::encode_pair(p, q, budget_) : text::encode_pair(q, p, budget_);
  }

 private:
  Direction direction_;
  std::size_t budget_;
  std::map<std::string, std::vector<TokenId>, std::less<>> questions_;
  std::map<std::string, std::vector<TokenId>, std::less<>> passages_;
};

template <typename Scalar>
class Loop {
 public:
  Loop(lm::CausalLm<Scalar>& model, const corpus::SplitView& split, const EncodedSplits& encoded,
       const TrainConfig& config)
      : model_(model),
        split_(split),
        encoded_(encoded),
        config_(config),
        rng_(config.seed),
        adam_(make_adam_state<Scalar>(model.params().tensors, AdamConfig{config.learning_rate})) {
    if (config.objective == Objective::mle) {
      for (const auto* q : split.questions()) {
        for (const auto& c : q->candidates) {
          if (c.label == 1) positives_.push_back(encoded.pair(q->id, c.pid));
        }
      }
      if (positives_.empty()) throw InputError("train: the train split has no relevant pairs");
    }
  }

  std::size_t steps() const { return steps_; }

  // Mean step loss over one pass of the train split.
  double epoch() {
    double total = 0.0;
    std::size_t count = 0;
    auto step = [&](const BatchGradient<Scalar>& g) {
      total += g.loss;
      ++count;
      apply(g);
    };
    switch (config_.objective) {
      case Objective::mle: {
        std::vector<std::size_t> order(positives_.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        rng_.shuffle(order);
        for (std::size_t begin = 0; begin < order.size(); begin += config_.batch_size) {
          std::vector<EncodedPair> batch;
          for (std::size_t i = begin; i < std::min(order.size(), begin + config_.batch_size); ++i) {
            batch.push_back(positives_[order[i]]);
          }
          const auto seed = rng_.derive();
          step(mle_gradient<Scalar>(model_, batch, config_.chunk_size, config_.workers, seed));
        }
        break;
      }
      case Objective::lul: {
        std::vector<LabeledPair> stream;
        for (const auto* q : shuffled_questions()) {
          for (const auto& c : sample_lul_batch(*q, rng_, config_.negatives_per_positive)) {
            stream.push_back({encoded_.pair(q->id, c.pid), c.label});
          }
        }
        for (std::size_t begin = 0; begin < stream.size(); begin += config_.batch_size) {
          const auto batch =
              std::span<const LabeledPair>(stream).subspan(begin, std::min(config_.batch_size, stream.size() - begin));
          const auto seed = rng_.derive();
          step(lul_gradient<Scalar>(model_, batch, config_.chunk_size, config_.workers, seed));
        }
        break;
      }
      case Objective::rll: {
        const auto order = shuffled_questions();
        for (std::size_t begin = 0; begin < order.size(); begin += config_.rll_batch_questions) {
          std::vector<RankTriple> batch;
          for (std::size_t i = begin; i < std::min(order.size(), begin + config_.rll_batch_questions); ++i) {
            if (auto t = triple(*order[i])) batch.push_back(std::move(*t));
          }
          const auto seed = rng_.derive();
          if (batch.empty()) continue;
          step(rll_gradient<Scalar>(model_, batch, config_.chunk_size, config_.workers, seed));
        }
        break;
      }
    }
    if (count == 0) throw InputError("train: no usable training examples in the train split");
    return total / static_cast<double>(count);
  }

 private:
  std::vector<const corpus::Question*> shuffled_questions() {
    auto order = split_.questions();
    rng_.shuffle(order);
    return order;
  }

  // One (q, a+, hardest sampled a-) triple, or none when either side is empty.
  std::optional<RankTriple> triple(const corpus::Question& q) {
    std::vector<const corpus::Candidate*> pos, neg;
    for (const auto& c : q.candidates) (c.label == 1 ? pos : neg).push_back(&c);
    if (pos.empty() || neg.empty()) {
      log().debug("rll: question {} lacks a positive or a negative, skipped", q.id);
      return std::nullopt;
    }
    const auto* positive = pos[rng_.below(pos.size())];
    std::vector<EncodedPair> pairs;
    std::vector<std::string> pids;
    for (std::size_t i : rng_.sample_indices(neg.size(), config_.rll_sample_size)) {
      pairs.push_back(encoded_.pair(q.id, neg[i]->pid));
      pids.push_back(neg[i]->pid);
    }
    const std::size_t hardest = hardest_negative(model_, std::span<const EncodedPair>(pairs), pids, config_.workers);
    return RankTriple{encoded_.pair(q.id, positive->pid), std::move(pairs[hardest]), config_.rll_margin};
  }

  void apply(const BatchGradient<Scalar>& g) {
    auto grads = g.grads;
    const double norm = clip_global_norm<Scalar>(grads, config_.clip_norm);
    if (!std::isfinite(norm) || !std::isfinite(g.loss)) {
      throw NumericError("train: non-finite loss or gradient at step " + std::to_string(steps_ + 1));
    }
    adam_step<Scalar>(model_.mutable_params().tensors, grads, adam_);
    ++steps_;
  }

  lm::CausalLm<Scalar>& model_;
  const corpus::SplitView& split_;
  const EncodedSplits& encoded_;
  const TrainConfig& config_;
  Rng rng_;
  AdamState<Scalar> adam_;
  std::vector<EncodedPair> positives_;
  std::size_t steps_ = 0;
};

}  // namespace

template <typename Scalar>
TrainReport train(lm::CausalLm<Scalar>& model, const text::Vocabulary& vocab, const corpus::SplitView& train_split,
                  const corpus::SplitView& validation, const TrainConfig& config,
                  const std::optional<std::filesystem::path>& checkpoint, const std::string& vocabulary_file,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (train_split.split() != corpus::Split::train) throw UsageError("train: first split must be the train split");
  if (validation.split() != corpus::Split::validation) {
    throw UsageError("train: second split must be the validation split");
  }
  if (train_split.size() == 0) throw InputError("train: the train split is empty");
  if (validation.size() == 0) throw InputError("train: the validation split is empty");
  if (vocab.size() != model.config().vocab_size) {
    throw ConfigError("train: vocabulary has " + std::to_string(vocab.size()) + " tokens, model expects " +
                      std::to_string(model.config().vocab_size));
  }

  const EncodedSplits encoded(vocab, train_split, config.direction, model.config().pair_budget());
  Loop<Scalar> loop(model, train_split, encoded, config);
  EarlyStopping stopper(config.patience);
  TrainReport report;
  report.config = config;
  if (checkpoint) report.checkpoint = checkpoint->string();
  auto best = model.params();

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    EpochStats stats;
    stats.epoch = epoch;
    try {
      stats.train_loss = loop.epoch();
      stats.val_map = validation_map(model, vocab, validation, config.direction, config.workers);
    } catch (const NumericError& e) {
      model.mutable_params() = best;
      log().error("epoch {}: {}; best weights from epoch {} restored", epoch, e.what(), stopper.best_epoch());
      throw NumericError("train: epoch " + std::to_string(epoch) + ": " + e.what());
    }
    stats.steps = loop.steps();
    stats.improved = stopper.update(stats.val_map);
    report.train_loss.push_back(stats.train_loss);
    report.val_map.push_back(stats.val_map);
    if (stats.improved) {
      best = model.params();
      if (checkpoint) lm::save_model(*checkpoint, model, vocabulary_file);
    }
    log().debug("epoch={} loss={:.6f} val_map={:.6f}", epoch, stats.train_loss, stats.val_map);
    if (on_epoch) on_epoch(stats);
    if (stopper.should_stop() && epoch < config.max_epochs) {
      report.stopped_early = true;
      break;
    }
  }
  model.mutable_params() = best;
  report.best_epoch = stopper.best_epoch();
  report.best_val_map = stopper.best();
  report.steps = loop.steps();
  return report;
}

#define GENRANK_INSTANTIATE(S)                                                                                   \
  template std::size_t hardest_negative(const lm::CausalLm<S>&, std::span<const EncodedPair>,                  \
                                        std::span<const std::string>, std::size_t);                            \
  template BatchGradient<S> mle_gradient(const lm::CausalLm<S>&, std::span<const EncodedPair>, std::size_t,    \
                                         std::size_t, std::uint64_t);                                          \
  template BatchGradient<S> lul_gradient(const lm::CausalLm<S>&, std::span<const LabeledPair>, std::size_t,    \
                                         std::size_t, std::uint64_t);                                          \
  template BatchGradient<S> rll_gradient(const lm::CausalLm<S>&, std::span<const RankTriple>, std::size_t,     \
                                         std::size_t, std::uint64_t);                                          \
  template double validation_map(const lm::CausalLm<S>&, const text::Vocabulary&, const corpus::SplitView&,    \
                                 Direction, std::size_t);                                                      \
  template TrainReport train(lm::CausalLm<S>&, const text::Vocabulary&, const corpus::SplitView&,              \
                             const corpus::SplitView&, const TrainConfig&,                                     \
                             const std::optional<std::filesystem::path>&, const std::string&,                  \
                             const EpochCallback&);

GENRANK_INSTANTIATE(float)
GENRANK_INSTANTIATE(double)

#undef GENRANK_INSTANTIATE

}  // namespace genrank::train
