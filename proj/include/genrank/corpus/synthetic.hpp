#pragma once

#include <cstdint>
#include <string>

#include "genrank/corpus/dataset.hpp"

namespace genrank::corpus {

enum class DistractorStrategy {
  // Each distractor states the queried attribute, but for another entity.
  same_attribute,
  // Each distractor states random facts about another entity.
  other_entities,
};

DistractorStrategy parse_distractor_strategy(std::string_view name);
std::string_view to_string(DistractorStrategy strategy);

// A fact world "entity has attribute value" rendered into answer-selection data.
// Passages are bags of facts about one entity; questions ask for one attribute
// of one entity ("what is <attr> of <entity> ?"). Each question gets exactly one
// relevant passage (its entity's facts, including the queried one) and
// candidates - 1 distractors about other entities. When fewer than
// candidates - 1 other entities exist, unqueried background entities are added.
struct SynthSpec {
  std::size_t n_entities = 100;
  std::size_t n_attributes = 8;
  std::size_t n_values = 20;
  std::size_t train_questions = 500;
  std::size_t validation_questions = 100;
  std::size_t test_questions = 100;
  std::size_t candidates = 8;
  std::size_t facts_per_passage = 3;  // capped at n_attributes
  DistractorStrategy distractors = DistractorStrategy::same_attribute;
  std::uint64_t seed = 0;

  // Throws ConfigError.
  void validate() const;
  std::size_t total_questions() const { return train_questions + validation_questions + test_questions; }
};

// Deterministic for a given spec. Passage ids are unique per question and no
// passage text is shared between splits. (entity, attribute) pairs are never
// asked twice.
QaDataset generate_synthetic(const SynthSpec& spec);

}  // namespace genrank::corpus
