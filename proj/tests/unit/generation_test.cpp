#include <cmath>
#include <numeric>

#include "doctest.h"
#include "genrank/errors.hpp"
#include "genrank/generation/sampler.hpp"
#include "genrank/numeric/adam.hpp"
#include "genrank/objectives/losses.hpp"
#include "genrank/text/encoding.hpp"

using namespace genrank;
using namespace genrank::gen;

namespace {

std::vector<double> logs(std::vector<double> p) {
  for (auto& x : p) x = std::log(x);
  return p;
}

std::size_t support(const std::vector<double>& d) {
  return static_cast<std::size_t>(std::count_if(d.begin(), d.end(), [](double x) { return x > 0.0; }));
}

text::Vocabulary small_vocab() {
  return text::Vocabulary::from_tokens(
      {"<pad>", "<unk>", "<bos>", "<boq>", "<eoq>", "ent3", "has", "color", "red", "what", "is", "of", "?", "."});
}

lm::ModelConfig small_config(std::size_t vocab) {
  lm::ModelConfig c;
  c.vocab_size = vocab;
  c.d_model = 16;
  c.n_layers = 1;
  c.n_heads = 2;
  c.d_ff = 32;
  c.max_seq_len = 24;
  return c;
}

}  // namespace

TEST_CASE("top_k = 1 is greedy") {
  SamplerConfig c;
  c.top_k = 1;
  auto d = filter_logits(std::vector<double>{0.1, 2.0, -1.0, 1.9}, c);
  CHECK(d == std::vector<double>{0.0, 1.0, 0.0, 0.0});
}

TEST_CASE("top_p = 1 with top_k = |V| is the plain softmax") {
  SamplerConfig c;
  c.top_k = 4;
  c.top_p = 1.0;
  const std::vector<double> p{0.1, 0.2, 0.3, 0.4};
  auto d = filter_logits(logs(p), c);
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(d[i] == doctest::Approx(p[i]).epsilon(1e-12));
}

TEST_CASE("top-k then nucleus keeps the renormalised head") {
  SamplerConfig c;
  c.top_k = 3;
  c.top_p = 0.8;
  auto d = filter_logits(logs({0.5, 0.3, 0.15, 0.05}), c);
  CHECK(d[0] == doctest::Approx(0.625).epsilon(1e-12));
  CHECK(d[1] == doctest::Approx(0.375).epsilon(1e-12));
  CHECK(d[2] == 0.0);
  CHECK(d[3] == 0.0);
}

TEST_CASE("temperature sharpens and flattens") {
  SamplerConfig c;
  c.top_k = 2;
  c.top_p = 1.0;
  c.temperature = 0.5;
  auto d = filter_logits(std::vector<double>{0.0, std::log(2.0)}, c);
  CHECK(d[1] == doctest::Approx(0.8).epsilon(1e-12));
  c.temperature = 1e6;
  d = filter_logits(std::vector<double>{0.0, std::log(2.0)}, c);
  CHECK(d[0] == doctest::Approx(0.5).epsilon(1e-5));
}

TEST_CASE("filtered distributions sum to one, respect top_k and grow with top_p") {
  Rng rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> z(2 + rng.below(30));
    for (auto& x : z) x = 3.0 * rng.normal();
    SamplerConfig c;
    c.top_k = 1 + rng.below(z.size() + 3);
    c.temperature = 0.2 + 2.0 * rng.uniform();
    std::size_t previous = 0;
    for (double p : {0.05, 0.2, 0.5, 0.8, 0.95, 1.0}) {
      c.top_p = p;
      auto d = filter_logits(z, c);
      CHECK(std::accumulate(d.begin(), d.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-6));
      const auto s = support(d);
      CHECK(s >= 1);
      CHECK(s <= c.top_k);
      CHECK(s >= previous);
      previous = s;
    }
  }
}

TEST_CASE("invalid sampler settings") {
  SamplerConfig c;
  c.top_k = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SamplerConfig{};
  c.top_p = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.top_p = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = SamplerConfig{};
  c.temperature = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(filter_logits(std::vector<double>{0.0, NAN}, SamplerConfig{}), InputError);
}

TEST_CASE("draw walks the cumulative distribution") {
  const std::vector<double> d{0.0, 0.25, 0.0, 0.75};
  CHECK(draw(d, 0.0) == 1);
  CHECK(draw(d, 0.2499) == 1);
  CHECK(draw(d, 0.25) == 3);
  CHECK(draw(d, 0.99999) == 3);
}

TEST_CASE("sampling halts, stays in the filtered support and is deterministic") {
  const auto vocab = small_vocab();
  auto model = lm::CausalLm<double>::initialized(small_config(vocab.size()), 8);
  for (std::size_t max_new : {0u, 1u, 5u, 40u}) {
    SamplerConfig c;
    c.max_new_tokens = max_new;
    c.top_k = 5;
    c.top_p = 0.9;
    c.seed = 17;
    std::size_t steps = 0;
    bool in_support = true;
    auto text = sample_question(model, vocab, "ent3 has color red .", c,
                                [&](std::size_t, std::span<const double> dist, TokenId token) {
                                  ++steps;
                                  in_support = in_support && dist[static_cast<std::size_t>(token)] > 0.0;
                                });
    CHECK(in_support);
    CHECK(steps <= max_new);
    const auto ids = vocab.encode(text);
    CHECK(ids.size() <= max_new);
    CHECK(sample_question(model, vocab, "ent3 has color red .", c) == text);
  }
}

TEST_CASE("prompts that fill the window are rejected") {
  const auto vocab = small_vocab();
  auto config = small_config(vocab.size());
  config.max_seq_len = 6;
  auto model = lm::CausalLm<double>::initialized(config, 1);
  CHECK_THROWS_AS(sample_question(model, vocab, "ent3 has color red . red red", SamplerConfig{}), InputError);
}

TEST_CASE("greedy decoding reproduces the question of an overfit pair") {
  const auto vocab = small_vocab();
  auto model = lm::CausalLm<double>::initialized(small_config(vocab.size()), 2);
  const std::string passage = "ent3 has color red .";
  const std::string question = "what is color of ent3 ?";
  const std::vector<text::EncodedPair> batch{text::encode_pair(passage, question, vocab, 25)};

  AdamConfig adam;
  adam.learning_rate = 1e-2;
  auto& params = model.mutable_params().tensors;
  auto state = make_adam_state<double>(params, adam);
  for (int step = 0; step < 150; ++step) {
    Graph<double> graph;
    auto b = model.bind(graph, true);
    auto loss = objectives::mle_loss(b, std::span<const text::EncodedPair>(batch));
    graph.backward(loss);
    std::vector<Tensor<double>> grads;
    for (const auto& v : b.params) grads.push_back(graph.grad(v));
    adam_step<double>(params, grads, state);
  }
  CHECK(objectives::mle_loss(model, std::span<const text::EncodedPair>(batch)) < 0.01);
  SamplerConfig greedy;
  greedy.top_k = 1;
  CHECK(sample_question(model, vocab, passage, greedy) == question);
}
