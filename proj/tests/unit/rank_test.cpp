#include <cmath>
#include <sstream>

#include "doctest.h"
#include "genrank/errors.hpp"
#include "genrank/rank/metrics.hpp"
#include "genrank/rank/scorer.hpp"
#include "genrank/rank/trec_io.hpp"
#include "unit/metric_oracle.hpp"

using namespace genrank;
using namespace genrank::rank;

namespace {

std::vector<int> labels(std::initializer_list<int> l) { return l; }

// Small vocabulary and an untied model whose zero output head is uniform.
struct UniformFixture {
  text::Vocabulary vocab = text::Vocabulary::from_tokens(
      {"<pad>", "<unk>", "<bos>", "<boq>", "<eoq>", "a", "b", "c", "d", "e", "f", "?", "."});
  lm::CausalLm<double> model = make();

  lm::CausalLm<double> make() {
    lm::ModelConfig c;
    c.vocab_size = vocab.size();
    c.d_model = 8;
    c.n_layers = 1;
    c.n_heads = 2;
    c.d_ff = 16;
    c.max_seq_len = 32;
    c.tie_embeddings = false;
    auto m = lm::CausalLm<double>::initialized(c, 1);
    m.mutable_params()["lm_head.weight"].setZero();
    return m;
  }
};

}  // namespace

TEST_CASE("average precision hand cases") {
  CHECK(*average_precision(labels({1, 0, 1})) == doctest::Approx(0.8333333333333).epsilon(1e-12));
  CHECK(*average_precision(labels({1, 1, 1})) == 1.0);
  CHECK(*average_precision(labels({0, 0, 1})) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK_FALSE(average_precision(labels({0, 0})).has_value());
  // A relevant passage missing from the ranking still counts in the denominator.
  CHECK(*average_precision(labels({1, 0}), 2) == 0.5);
  CHECK(reciprocal_rank(labels({0, 1, 1})) == 0.5);
  CHECK(reciprocal_rank(labels({0, 0})) == 0.0);
}

TEST_CASE("evaluate: first relevant at rank 2 and a perfect run") {
  Qrels qrels;
  qrels.add("q", "a", 0);
  qrels.add("q", "b", 1);
  std::vector<RunRecord> run{{"q", {{"a", 2.0}, {"b", 1.0}}, "t"}};
  auto m = evaluate(run, qrels);
  CHECK(m.mrr == 0.5);
  CHECK(m.p_at_1 == 0.0);
  CHECK(m.map == 0.5);
  run[0].ranking[1].score = 3.0;
  m = evaluate(run, qrels);
  CHECK(m.map == 1.0);
  CHECK(m.mrr == 1.0);
  CHECK(m.p_at_1 == 1.0);
  CHECK(m.evaluated == 1);
}

TEST_CASE("evaluate skips queries without relevant passages and counts them") {
  Qrels qrels;
  qrels.add("q1", "a", 1);
  qrels.add("q2", "b", 0);
  std::vector<RunRecord> run{{"q1", {{"a", 0.0}}, ""}, {"q2", {{"b", 0.0}}, ""}};
  auto m = evaluate(run, qrels);
  CHECK(m.evaluated == 1);
  CHECK(m.skipped == 1);
  CHECK(m.map == 1.0);
}

TEST_CASE("evaluate input errors") {
  Qrels qrels;
  qrels.add("q", "a", 1);
  std::vector<RunRecord> missing_query{{"x", {{"a", 0.0}}, ""}};
  CHECK_THROWS_WITH_AS(evaluate(missing_query, qrels), doctest::Contains("x"), InputError);
  std::vector<RunRecord> unknown_pid{{"q", {{"a", 0.0}, {"zz", 1.0}}, ""}};
  CHECK_THROWS_WITH_AS(evaluate(unknown_pid, qrels), doctest::Contains("zz"), InputError);
  std::vector<RunRecord> duplicate{{"q", {{"a", 0.0}, {"a", 1.0}}, ""}};
  CHECK_THROWS_AS(evaluate(duplicate, qrels), InputError);
  CHECK_THROWS_AS(qrels.add("q", "b", 2), InputError);
  CHECK_THROWS_AS(qrels.add("q", "a", 0), InputError);
}

TEST_CASE("ties break by passage id descending") {
  std::vector<ScoredPassage> r{{"p1", 0.5}, {"p3", 0.5}, {"p2", 0.5}, {"p0", 0.9}};
  sort_ranking(r);
  CHECK(r[0].pid == "p0");
  CHECK(r[1].pid == "p3");
  CHECK(r[2].pid == "p2");
  CHECK(r[3].pid == "p1");
}

TEST_CASE("metrics match the brute-force oracle on 1000 random runs") {
  Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    auto queries = testing::random_queries(rng, 1 + rng.below(6));
    std::vector<RunRecord> run;
    Qrels qrels;
    testing::to_run(queries, run, qrels);
    const auto got = evaluate(run, qrels);
    const auto want = testing::oracle_metrics(queries);
    REQUIRE(got.evaluated == want.evaluated);
    worst = std::max({worst, std::abs(got.map - want.map), std::abs(got.mrr - want.mrr),
                      std::abs(got.p_at_1 - want.p_at_1)});
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("strictly increasing score transforms leave rankings and metrics unchanged") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    auto queries = testing::random_queries(rng, 4);
    std::vector<RunRecord> run;
    Qrels qrels;
    testing::to_run(queries, run, qrels);
    auto transformed = run;
    for (auto& record : transformed) {
      for (auto& item : record.ranking) item.score = std::exp(0.5 * item.score) * 3.0 - 1.0;
    }
    for (std::size_t k = 0; k < run.size(); ++k) {
      auto a = run[k].ranking;
      auto b = transformed[k].ranking;
      sort_ranking(a);
      sort_ranking(b);
      for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].pid == b[i].pid);
    }
    const auto m1 = evaluate(run, qrels);
    const auto m2 = evaluate(transformed, qrels);
    CHECK(m1.map == m2.map);
    CHECK(m1.mrr == m2.mrr);
    CHECK(m1.p_at_1 == m2.p_at_1);
  }
}

TEST_CASE("random rankings average H_n / n") {
  const std::size_t n = 8;
  double harmonic = 0.0;
  for (std::size_t k = 1; k <= n; ++k) harmonic += 1.0 / static_cast<double>(k);
  const double expected = harmonic / static_cast<double>(n);
  CHECK(expected == doctest::Approx(0.3397).epsilon(1e-4));

  Rng rng(11);
  const int trials = 20000;
  std::vector<RunRecord> run;
  Qrels qrels;
  for (int t = 0; t < trials; ++t) {
    RunRecord record{"q" + std::to_string(t), {}, ""};
    for (std::size_t i = 0; i < n; ++i) {
      const auto pid = "p" + std::to_string(i);
      record.ranking.push_back({pid, rng.uniform()});
      qrels.add(record.qid, pid, i == 0 ? 1 : 0);
    }
    run.push_back(std::move(record));
  }
  const auto m = evaluate(run, qrels);
  // AP of a single relevant item is 1/rank; its standard deviation is below 0.33.
  CHECK(std::abs(m.map - expected) < 4.0 * 0.33 / std::sqrt(static_cast<double>(trials)));
}

TEST_CASE("run and qrels files round trip") {
  std::vector<RunRecord> run{{"q2", {{"b", -1.25}, {"a", -1.25}, {"c", 0.5}}, "q_given_a"},
                             {"q1", {{"x", -3.0000004}}, "q_given_a"}};
  std::stringstream buffer;
  write_run(buffer, run);
  CHECK(buffer.str() ==
        "q2 Q0 c 1 0.500000 q_given_a\n"
        "q2 Q0 b 2 -1.250000 q_given_a\n"
        "q2 Q0 a 3 -1.250000 q_given_a\n"
        "q1 Q0 x 1 -3.000000 q_given_a\n");
  auto back = read_run(buffer);
  REQUIRE(back.size() == 2);
  CHECK(back[0].qid == "q2");
  CHECK(back[0].ranking[0].pid == "c");
  CHECK(back[1].ranking[0].score == -3.0);

  Qrels qrels;
  qrels.add("q2", "a", 1);
  qrels.add("q1", "x", 0);
  std::stringstream qbuf;
  write_qrels(qbuf, qrels);
  CHECK(qbuf.str() == "q1 0 x 0\nq2 0 a 1\n");
  CHECK(read_qrels(qbuf) == qrels);
}

TEST_CASE("malformed TREC lines name the line") {
  std::stringstream run("q Q0 a 1 0.5 t\nq Q0 b two 0.1 t\n");
  CHECK_THROWS_WITH_AS(read_run(run), doctest::Contains(":2:"), InputError);
  std::stringstream short_line("q Q0 a 1\n");
  CHECK_THROWS_AS(read_run(short_line), InputError);
  std::stringstream qrels("q 0 a 3\n");
  CHECK_THROWS_WITH_AS(read_qrels(qrels), doctest::Contains(":1:"), InputError);
}

TEST_CASE("qrels from a dataset by split") {
  corpus::QaDataset data;
  data.define_question("q1", "a ?", corpus::Split::train);
  data.define_question("q2", "b ?", corpus::Split::test);
  data.define_passage("p1", "a");
  data.define_passage("p2", "b");
  data.add_judgment("q1", "p1", 1);
  data.add_judgment("q2", "p2", 0);
  CHECK(qrels_from(data).size() == 2);
  const auto test = qrels_from(data, corpus::Split::test);
  CHECK(test.size() == 1);
  CHECK(test.label("q2", "p2") == 0);
  CHECK_FALSE(test.contains("q1"));
}

TEST_CASE("scorer parsing") {
  CHECK(parse_scorer("q_given_a") == Scorer::q_given_a);
  CHECK(parse_scorer("a_given_q") == Scorer::a_given_q_lennorm);
  CHECK_THROWS_AS(parse_scorer("bm25"), ConfigError);
}

TEST_CASE("uniform model scores every candidate -m ln|V| and ranks by descending pid") {
  UniformFixture f;
  const std::string question = "a b c ?";
  const double m = 5.0;  // four tokens plus <eoq>
  const double expected = -m * std::log(static_cast<double>(f.vocab.size()));
  std::vector<PassageRef> passages{{"p2", "a b ."}, {"p9", "c d e f ."}, {"p10", "f ."}};
  auto record = score_candidates(f.model, f.vocab, "q", question, passages, Scorer::q_given_a);
  REQUIRE(record.ranking.size() == 3);
  for (const auto& item : record.ranking) CHECK(item.score == doctest::Approx(expected).epsilon(1e-12));
  CHECK(record.ranking[0].pid == "p9");
  CHECK(record.ranking[1].pid == "p2");
  CHECK(record.ranking[2].pid == "p10");
  CHECK(record.tag == "q_given_a");

  // Length-normalised reverse direction is -ln|V| per passage token.
  for (const auto& p : passages) {
    CHECK(score_pair(f.model, f.vocab, question, p.text, Scorer::a_given_q_lennorm) ==
          doctest::Approx(-std::log(static_cast<double>(f.vocab.size()))).epsilon(1e-12));
  }
}

TEST_CASE("single candidate ranks first and empty candidate lists are rejected") {
  UniformFixture f;
  f.model = lm::CausalLm<double>::initialized(f.model.config(), 4);
  std::vector<PassageRef> one{{"only", "a b c"}};
  auto record = score_candidates(f.model, f.vocab, "q", "a ?", one, Scorer::q_given_a);
  CHECK(record.ranking.size() == 1);
  CHECK(record.ranking[0].pid == "only");
  CHECK_THROWS_AS(score_candidates(f.model, f.vocab, "q", "a ?", std::span<const PassageRef>{}, Scorer::q_given_a),
                  InputError);
}

TEST_CASE("scores are identical for any worker count and agree with probability ordering") {
  UniformFixture f;
  f.model = lm::CausalLm<double>::initialized(f.model.config(), 5);
  std::vector<PassageRef> passages;
  const char* texts[] = {"a b", "c d e", "f", "a a a .", "b c ?", "d", "e f a", "c"};
  for (int i = 0; i < 8; ++i) passages.push_back({"p" + std::to_string(i), texts[i]});
  auto serial = score_candidates(f.model, f.vocab, "q", "a c ?", passages, Scorer::q_given_a, 1);
  auto threaded = score_candidates(f.model, f.vocab, "q", "a c ?", passages, Scorer::q_given_a, 3);
  CHECK(serial == threaded);
  auto by_prob = serial.ranking;
  for (auto& item : by_prob) item.score = std::exp(item.score);
  sort_ranking(by_prob);
  for (std::size_t i = 0; i < by_prob.size(); ++i) CHECK(by_prob[i].pid == serial.ranking[i].pid);
}
