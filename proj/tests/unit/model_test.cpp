#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "genrank/model/checkpoint.hpp"
#include "genrank/model/transformer.hpp"
#include "unit/test_support.hpp"

using namespace genrank;
using namespace genrank::lm;

namespace {

ModelConfig tiny_config(bool tied = true) {
  ModelConfig c;
  c.vocab_size = 24;
  c.d_model = 16;
  c.n_layers = 2;
  c.n_heads = 2;
  c.d_ff = 32;
  c.max_seq_len = 24;
  c.tie_embeddings = tied;
  return c;
}

std::vector<TokenId> random_ids(Rng& rng, std::size_t n, std::size_t vocab) {
  std::vector<TokenId> ids(n);
  for (auto& id : ids) id = static_cast<TokenId>(5 + rng.below(vocab - 5));
  return ids;
}

EncodedPair random_pair(Rng& rng, std::size_t vocab, std::size_t passage_len, std::size_t question_len) {
  auto p = random_ids(rng, passage_len, vocab);
  auto q = random_ids(rng, question_len, vocab);
  return text::encode_pair(p, q, 64);
}

}  // namespace

TEST_CASE("config validation") {
  auto c = tiny_config();
  c.n_heads = 3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny_config();
  c.vocab_size = 2;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_NOTHROW(tiny_config().validate());
}

TEST_CASE("default config matches the desk-scale shape") {
  ModelConfig c;
  CHECK(c.n_layers == 2);
  CHECK(c.n_heads == 4);
  CHECK(c.d_model == 128);
  CHECK(c.d_ff == 512);
  CHECK(c.max_seq_len == 256);
  CHECK(c.tie_embeddings);
}

TEST_CASE("zero output projection gives a uniform next-token distribution") {
  auto model = CausalLm<double>::initialized(tiny_config(false), 3);
  model.mutable_params()["lm_head.weight"].setZero();
  Rng rng(1);
  auto logits = model.forward_logits(random_ids(rng, 7, 24));
  CHECK(logits.rows() == 7);
  CHECK(logits.cols() == 24);
  CHECK(logits.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("logits at i depend only on ids[0..i]") {
  auto model = CausalLm<double>::initialized(tiny_config(), 9);
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 3 + rng.below(10);
    auto ids = random_ids(rng, n, 24);
    auto base = model.forward_logits(ids);
    const auto j = rng.below(n);
    auto perturbed = ids;
    perturbed[j] = static_cast<TokenId>(5 + (perturbed[j] - 5 + 1 + rng.below(18)) % 19);
    auto other = model.forward_logits(perturbed);
    for (std::size_t i = 0; i < n; ++i) {
      const double diff = (base.row(static_cast<Index>(i)) - other.row(static_cast<Index>(i))).cwiseAbs().maxCoeff();
      if (i < j) {
        CHECK(diff == 0.0);
      } else if (i == j) {
        CHECK(diff > 0.0);
      }
    }
  }
}

TEST_CASE("forward is bit-deterministic without dropout") {
  auto model = CausalLm<double>::initialized(tiny_config(), 4);
  Rng rng(3);
  auto ids = random_ids(rng, 9, 24);
  CHECK(model.forward_logits(ids) == model.forward_logits(ids));
  auto again = CausalLm<double>::initialized(tiny_config(), 4);
  CHECK(again.forward_logits(ids) == model.forward_logits(ids));
}

TEST_CASE("input errors") {
  auto model = CausalLm<double>::initialized(tiny_config(), 4);
  CHECK_THROWS_AS(model.forward_logits(std::vector<TokenId>{2, 99}), InputError);
  CHECK_THROWS_AS(model.forward_logits(std::vector<TokenId>(25, 5)), InputError);
  CHECK_THROWS_AS(model.forward_logits(std::vector<TokenId>{}), InputError);
}

TEST_CASE("uniform model scores every question token at -ln|V|") {
  auto model = CausalLm<double>::initialized(tiny_config(false), 5);
  model.mutable_params()["lm_head.weight"].setZero();
  Rng rng(4);
  auto pair = random_pair(rng, 24, 6, 4);
  const double m = static_cast<double>(pair.question_len);
  CHECK(cond_log_likelihood(model, pair) == doctest::Approx(-m * std::log(24.0)).epsilon(1e-14));
  for (double lp : per_token_log_probs(model, pair)) CHECK(lp == doctest::Approx(-std::log(24.0)));
}

TEST_CASE("conditional likelihood equals per-token sums from raw logits") {
  auto model = CausalLm<double>::initialized(tiny_config(), 6);
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    auto pair = random_pair(rng, 24, rng.below(8), 1 + rng.below(5));
    auto logits = model.forward_logits(pair.ids);
    double expected = 0.0;
    for (std::size_t t = pair.loss_start; t + 1 < pair.ids.size(); ++t) {
      const auto row = logits.row(static_cast<Index>(t));
      const double mx = row.maxCoeff();
      const double lse = mx + std::log((row.array() - mx).exp().sum());
      expected += row(pair.ids[t + 1]) - lse;
    }
    const double ll = cond_log_likelihood(model, pair);
    CHECK(ll == doctest::Approx(expected).epsilon(1e-12));
    CHECK(ll <= 0.0);
    auto per = per_token_log_probs(model, pair);
    CHECK(per.size() == pair.question_len);
    double total = 0.0;
    for (double lp : per) {
      CHECK(lp <= 0.0);
      total += lp;
    }
    CHECK(std::abs(total - ll) < 1e-6);
  }
}

TEST_CASE("extra passage text never changes which targets are scored") {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    auto p = random_ids(rng, rng.below(6), 24);
    auto q = random_ids(rng, 1 + rng.below(4), 24);
    auto a = text::encode_pair(p, q, 64);
    auto longer = p;
    for (auto id : random_ids(rng, 1 + rng.below(6), 24)) longer.push_back(id);
    auto b = text::encode_pair(longer, q, 64);
    CHECK(std::equal(a.targets().begin(), a.targets().end(), b.targets().begin(), b.targets().end()));
    CHECK(b.question_len == a.question_len);
    CHECK(b.loss_start == a.loss_start + (longer.size() - p.size()));
  }
}

TEST_CASE("conditional likelihood gradient matches finite differences") {
  auto config = tiny_config();
  config.vocab_size = 12;
  config.d_model = 8;
  config.d_ff = 12;
  config.max_seq_len = 10;
  auto model = CausalLm<double>::initialized(config, 8);
  // Bigger weights than the init scale so every path carries signal.
  Rng rng(8);
  for (auto& t : model.mutable_params().tensors) t += testing::random_tensor(rng, t.rows(), t.cols(), 0.3);
  auto pair = text::encode_pair(std::vector<TokenId>{5, 7, 9}, std::vector<TokenId>{6, 11}, 10);
  auto result = testing::gradcheck_fn(model.params().tensors, [&](Graph<double>& g, const auto& leaves) {
    BoundModel<double> b{&model, &g, leaves, {}};
    return sequence_log_likelihood(b, pair);
  });
  CHECK(result.compared > 100);
  CHECK_MESSAGE(result.ok(), result.worst);
}

TEST_CASE("dropout changes training forward and is reproducible per seed") {
  auto config = tiny_config();
  config.dropout = 0.5;
  auto model = CausalLm<double>::initialized(config, 2);
  std::vector<TokenId> ids{2, 5, 6, 7};
  auto run = [&](std::uint64_t seed) {
    Rng rng(seed);
    Graph<double> g;
    auto b = model.bind(g, false, DropoutContext{&rng, config.dropout});
    return Tensor<double>(model.logits(b, ids).value());
  };
  CHECK(run(1) == run(1));
  CHECK(run(1) != model.forward_logits(ids));
}

TEST_CASE("float and double precision agree") {
  auto d = CausalLm<double>::initialized(tiny_config(), 12);
  CausalLm<float> f(d.config(), d.params().cast<float>());
  Rng rng(12);
  auto pair = random_pair(rng, 24, 5, 3);
  CHECK(static_cast<double>(cond_log_likelihood(f, pair)) == doctest::Approx(cond_log_likelihood(d, pair)).epsilon(1e-4));
}

TEST_CASE("checkpoint round trip and rejection") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto path = dir / "genrank_model_test.grnk";
  auto model = CausalLm<float>::initialized(tiny_config(false), 21);
  save_model(path, model, "vocab.txt");
  auto ck = read_checkpoint(path);
  CHECK(ck.config == model.config());
  CHECK(ck.vocabulary_file == "vocab.txt");
  for (std::size_t i = 0; i < ck.params.size(); ++i) {
    CHECK(ck.params.names[i] == model.params().names[i]);
    CHECK(ck.params.tensors[i] == model.params().tensors[i]);
  }
  {
    std::ifstream in(path, std::ios::binary);
    char magic[4];
    in.read(magic, 4);
    CHECK(std::string(magic, 4) == "GRNK");
  }

  // Unknown version.
  {
    std::fstream io(path, std::ios::binary | std::ios::in | std::ios::out);
    io.seekp(4);
    const std::uint32_t v = 99;
    io.write(reinterpret_cast<const char*>(&v), 4);
  }
  CHECK_THROWS_WITH_AS(read_checkpoint(path), doctest::Contains("version 99"), InputError);
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOPE";
  }
  CHECK_THROWS_AS(read_checkpoint(path), InputError);
  std::filesystem::remove(path);
}
