#include "genrank/corpus/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <vector>

#include "genrank/errors.hpp"
#include "genrank/util/random.hpp"

namespace genrank::corpus {
namespace {

std::size_t digits(std::size_t n) {
  std::size_t d = 1;
  while (n >= 10) {
    n /= 10;
    ++d;
  }
  return std::max<std::size_t>(d, 2);
}

std::string numbered(const char* prefix, std::size_t i, std::size_t count) {
  std::string n = std::to_string(i);
  const std::size_t width = digits(count > 0 ? count - 1 : 0);
  return prefix + std::string(width > n.size() ? width - n.size() : 0, '0') + n;
}

struct World {
  std::size_t entities;  // queried + background
  std::vector<std::vector<std::size_t>> value;  // value[entity][attribute]
};

class Renderer {
 public:
  Renderer(const SynthSpec& spec, std::size_t world_entities)
      : spec_(spec), world_entities_(world_entities) {}

  std::string entity(std::size_t e) const { return numbered("ent", e, world_entities_); }
  std::string attribute(std::size_t a) const { return numbered("attr", a, spec_.n_attributes); }
  std::string value(std::size_t v) const { return numbered("val", v, spec_.n_values); }

  std::string passage(const World& world, std::size_t e, const std::vector<std::size_t>& attributes) const {
    std::string text;
    for (auto a : attributes) {
      if (!text.empty()) text += ' ';
      text += entity(e) + " has " + attribute(a) + " " + value(world.value[e][a]) + " .";
    }
    return text;
  }

  std::string question(std::size_t e, std::size_t a) const {
    return "what is " + attribute(a) + " of " + entity(e) + " ?";
  }

 private:
  const SynthSpec& spec_;
  std::size_t world_entities_;
};

// `count` distinct attributes, `required` among them when given, in random order.
std::vector<std::size_t> pick_attributes(Rng& rng, std::size_t n_attributes, std::size_t count,
                                         std::optional<std::size_t> required) {
  std::vector<std::size_t> out;
  if (required) out.push_back(*required);
  for (auto a : rng.sample_indices(n_attributes, n_attributes)) {
    if (out.size() == count) break;
    if (required && a == *required) continue;
    out.push_back(a);
  }
  rng.shuffle(out);
  return out;
}

}  // namespace

DistractorStrategy parse_distractor_strategy(std::string_view name) {
  if (name == "same_attribute") return DistractorStrategy::same_attribute;
  if (name == "other_entities") return DistractorStrategy::other_entities;
  throw ConfigError("unknown distractor strategy '" + std::string(name) + "'");
}

std::string_view to_string(DistractorStrategy strategy) {
  return strategy == DistractorStrategy::same_attribute ? "same_attribute" : "other_entities";
}

void SynthSpec::validate() const {
  const auto fail = [](const std::string& what) { throw ConfigError("synthetic spec: " + what); };
  if (n_entities == 0 || n_attributes == 0 || n_values == 0) fail("entity, attribute and value counts must be positive");
  if (candidates < 1) fail("need at least one candidate per question");
  if (facts_per_passage < 1) fail("facts_per_passage must be positive");
  if (total_questions() == 0) fail("no questions requested");
  if (total_questions() > n_entities * n_attributes) {
    fail(std::to_string(total_questions()) + " questions need more than the " + std::to_string(n_entities * n_attributes) +
         " distinct (entity, attribute) pairs available");
  }
}

QaDataset generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);

  // Background entities fill distractor slots when the queried pool is too small.
  const std::size_t background = spec.candidates > spec.n_entities ? spec.candidates - spec.n_entities : 0;
  World world{spec.n_entities + background, {}};
  world.value.resize(world.entities);
  for (auto& row : world.value) {
    row.resize(spec.n_attributes);
    for (auto& v : row) v = static_cast<std::size_t>(rng.below(spec.n_values));
  }
  const Renderer render(spec, world.entities);
  const std::size_t facts = std::min(spec.facts_per_passage, spec.n_attributes);

  const auto pairs = rng.sample_indices(spec.n_entities * spec.n_attributes, spec.total_questions());
  const std::size_t total = spec.total_questions();
  const std::size_t total_passages = total * spec.candidates;

  QaDataset data;
  std::map<std::string, Split> passage_owner;
  std::size_t next_pid = 0;
  for (std::size_t qi = 0; qi < total; ++qi) {
    const Split split = qi < spec.train_questions                                  ? Split::train
                        : qi < spec.train_questions + spec.validation_questions ? Split::validation
                                                                                  : Split::test;
    const std::size_t entity = pairs[qi] / spec.n_attributes;
    const std::size_t attribute = pairs[qi] % spec.n_attributes;
    const std::string qid = numbered("q", qi, total);
    data.define_question(qid, render.question(entity, attribute), split);

    std::vector<std::pair<std::string, int>> pool;
    // A passage text may repeat within a split but never across splits.
    const auto try_passage = [&](std::size_t e, std::optional<std::size_t> required) -> std::optional<std::string> {
      for (int attempt = 0; attempt < 100; ++attempt) {
        auto text = render.passage(world, e, pick_attributes(rng, spec.n_attributes, facts, required));
        auto [it, inserted] = passage_owner.emplace(text, split);
        if (inserted || it->second == split) return text;
      }
      return std::nullopt;
    };
    const auto blocked = [&]() {
      return ConfigError("synthetic spec: cannot keep passages disjoint across splits for " + qid +
                         "; add attributes, values or entities");
    };

    auto positive = try_passage(entity, attribute);
    if (!positive) throw blocked();
    pool.emplace_back(std::move(*positive), 1);
    std::vector<std::size_t> others;
    for (std::size_t e = 0; e < world.entities; ++e) {
      if (e != entity) others.push_back(e);
    }
    // Distractor entities in random order; ones whose text belongs to another split are passed over.
    const bool same = spec.distractors == DistractorStrategy::same_attribute;
    for (auto k : rng.sample_indices(others.size(), others.size())) {
      if (pool.size() == spec.candidates) break;
      auto text = try_passage(others[k], same ? std::optional<std::size_t>(attribute) : std::nullopt);
      if (text) pool.emplace_back(std::move(*text), 0);
    }
    if (pool.size() < spec.candidates) throw blocked();
    rng.shuffle(pool);
    for (auto& [text, label] : pool) {
      const std::string pid = numbered("p", next_pid++, total_passages);
      data.define_passage(pid, text);
      data.add_judgment(qid, pid, label);
    }
  }
  data.validate();
  return data;
}

}  // namespace genrank::corpus
