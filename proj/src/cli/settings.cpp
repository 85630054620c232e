#include "genrank/cli/settings.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>

#include "genrank/errors.hpp"
#include "genrank/rank/run.hpp"

namespace genrank::cli {
namespace {

enum class Kind { count, real, flag, text, objective, direction, scorer, precision, split, distractors };

struct Key {
  const char* name;
  const char* fallback;
  Kind kind;
};

constexpr Key kKeys[] = {
    {"seed", "0", Kind::count},
    {"workers", "1", Kind::count},
    // model
    {"d_model", "128", Kind::count},
    {"n_layers", "2", Kind::count},
    {"n_heads", "4", Kind::count},
    {"d_ff", "512", Kind::count},
    {"max_seq_len", "256", Kind::count},
    {"dropout", "0", Kind::real},
    {"tie_embeddings", "true", Kind::flag},
    {"vocab_max_size", "30000", Kind::count},
    {"vocab_min_freq", "1", Kind::count},
    {"precision", "float", Kind::precision},
    // training
    {"objective", "mle", Kind::objective},
    {"direction", "q_given_a", Kind::direction},
    {"max_epochs", "10", Kind::count},
    {"batch_size", "32", Kind::count},
    {"rll_batch_questions", "8", Kind::count},
    {"negatives_per_positive", "5", Kind::count},
    {"rll_sample_size", "15", Kind::count},
    {"rll_margin", "1", Kind::real},
    {"learning_rate", "0.0001", Kind::real},
    {"clip_norm", "1", Kind::real},
    {"patience", "2", Kind::count},
    {"chunk_size", "4", Kind::count},
    // ranking and evaluation
    {"scorer", "q_given_a", Kind::scorer},
    {"split", "test", Kind::split},
    // synthetic data
    {"n_entities", "100", Kind::count},
    {"n_attributes", "8", Kind::count},
    {"n_values", "20", Kind::count},
    {"train_questions", "500", Kind::count},
    {"validation_questions", "100", Kind::count},
    {"test_questions", "100", Kind::count},
    {"candidates", "8", Kind::count},
    {"facts_per_passage", "3", Kind::count},
    {"distractors", "same_attribute", Kind::distractors},
    // generation
    {"top_k", "50", Kind::count},
    {"top_p", "0.95", Kind::real},
    {"temperature", "1", Kind::real},
    {"max_new_tokens", "32", Kind::count},
    {"n_samples", "1", Kind::count},
    {"limit", "5", Kind::count},
    {"prompt", "", Kind::text},
    // gradient check
    {"gradcheck_weight_scale", "0.3", Kind::real},
    {"gradcheck_step", "0.0001", Kind::real},
    {"gradcheck_tolerance", "0.0001", Kind::real},
};

const Key* find_key(std::string_view name) {
  for (const auto& k : kKeys) {
    if (name == k.name) return &k;
  }
  return nullptr;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return !text.empty() && ec == std::errc() && ptr == end;
}

bool parse_flag(std::string_view v, bool& out) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") {
    out = true;
    return true;
  }
  if (v == "false" || v == "0" || v == "no" || v == "off") {
    out = false;
    return true;
  }
  return false;
}

void check(const Key& key, std::string_view value) {
  const auto bad = [&](const char* expected) {
    return ConfigError("setting " + std::string(key.name) + "=" + std::string(value) + ": expected " + expected);
  };
  switch (key.kind) {
    case Kind::count: {
      std::uint64_t v = 0;
      if (!parse_number(value, v)) throw bad("a nonnegative integer");
      break;
    }
    case Kind::real: {
      double v = 0;
      if (!parse_number(value, v)) throw bad("a number");
      break;
    }
    case Kind::flag: {
      bool v = false;
      if (!parse_flag(value, v)) throw bad("true or false");
      break;
    }
    case Kind::text:
      break;
    case Kind::objective:
      train::parse_objective(value);
      break;
    case Kind::direction:
      train::parse_direction(value);
      break;
    case Kind::scorer:
      rank::parse_scorer(value);
      break;
    case Kind::precision:
      if (value != "float" && value != "double") throw bad("float or double");
      break;
    case Kind::split:
      corpus::parse_split(value);
      break;
    case Kind::distractors:
      corpus::parse_distractor_strategy(value);
      break;
  }
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Settings::Settings() {
  for (const auto& k : kKeys) values_.emplace(k.name, k.fallback);
}

void Settings::set(std::string_view key, std::string_view value) {
  const Key* k = find_key(key);
  if (k == nullptr) throw ConfigError("unknown setting '" + std::string(key) + "'");
  check(*k, value);
  values_.find(key)->second = std::string(value);
}

void Settings::apply(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("expected key=value, got '" + std::string(assignment) + "'");
  }
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void Settings::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read config " + path.string());
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    const auto body = trim(std::string_view(line).substr(0, line.find('#')));
    if (body.empty()) continue;
    try {
      apply(body);
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

const std::string& Settings::get(std::string_view key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown setting '" + std::string(key) + "'");
  return it->second;
}

std::size_t Settings::count(std::string_view key) const {
  std::uint64_t v = 0;
  parse_number(std::string_view(get(key)), v);
  return static_cast<std::size_t>(v);
}

double Settings::real(std::string_view key) const {
  double v = 0;
  parse_number(std::string_view(get(key)), v);
  return v;
}

bool Settings::flag(std::string_view key) const {
  bool v = false;
  parse_flag(get(key), v);
  return v;
}

std::string Settings::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [k, v] : values_) {
    for (char c : k + "=" + v + "\n") {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

lm::ModelConfig Settings::model_config(std::size_t vocab_size) const {
  lm::ModelConfig c;
  c.vocab_size = vocab_size;
  c.d_model = count("d_model");
  c.n_layers = count("n_layers");
  c.n_heads = count("n_heads");
  c.d_ff = count("d_ff");
  c.max_seq_len = count("max_seq_len");
  c.dropout = real("dropout");
  c.tie_embeddings = flag("tie_embeddings");
  c.validate();
  return c;
}

train::TrainConfig Settings::train_config() const {
  train::TrainConfig c;
  c.objective = train::parse_objective(get("objective"));
  c.direction = train::parse_direction(get("direction"));
  c.max_epochs = count("max_epochs");
  c.batch_size = count("batch_size");
  c.rll_batch_questions = count("rll_batch_questions");
  c.negatives_per_positive = count("negatives_per_positive");
  c.rll_sample_size = count("rll_sample_size");
  c.rll_margin = real("rll_margin");
  c.learning_rate = real("learning_rate");
  c.clip_norm = real("clip_norm");
  c.patience = count("patience");
  c.seed = static_cast<std::uint64_t>(count("seed"));
  c.workers = count("workers");
  c.chunk_size = count("chunk_size");
  c.validate();
  return c;
}

corpus::SynthSpec Settings::synth_spec() const {
  corpus::SynthSpec s;
  s.n_entities = count("n_entities");
  s.n_attributes = count("n_attributes");
  s.n_values = count("n_values");
  s.train_questions = count("train_questions");
  s.validation_questions = count("validation_questions");
  s.test_questions = count("test_questions");
  s.candidates = count("candidates");
  s.facts_per_passage = count("facts_per_passage");
  s.distractors = corpus::parse_distractor_strategy(get("distractors"));
  s.seed = static_cast<std::uint64_t>(count("seed"));
  s.validate();
  return s;
}

gen::SamplerConfig Settings::sampler_config() const {
  gen::SamplerConfig c;
  c.top_k = count("top_k");
  c.top_p = real("top_p");
  c.temperature = real("temperature");
  c.max_new_tokens = count("max_new_tokens");
  c.seed = static_cast<std::uint64_t>(count("seed"));
  c.validate();
  return c;
}

objectives::GradientAuditConfig Settings::audit_config() const {
  objectives::GradientAuditConfig c;
  c.seed = static_cast<std::uint64_t>(count("seed"));
  c.weight_scale = real("gradcheck_weight_scale");
  c.options.step = real("gradcheck_step");
  c.options.tolerance = real("gradcheck_tolerance");
  return c;
}

}  // namespace genrank::cli
