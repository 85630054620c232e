// Runs every acceptance criterion and prints one PASS/FAIL/SKIP line each.
// Optional arguments select criteria by number, e.g. `acceptance 2 3`.
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <thread>

#include <sys/wait.h>

#include "genrank/corpus/synthetic.hpp"
#include "genrank/corpus/vocab.hpp"
#include "genrank/model/checkpoint.hpp"
#include "genrank/objectives/gradient_audit.hpp"
#include "genrank/objectives/losses.hpp"
#include "genrank/rank/metrics.hpp"
#include "genrank/rank/scorer.hpp"
#include "genrank/rank/trec_io.hpp"
#include "genrank/train/trainer.hpp"
#include "unit/metric_oracle.hpp"

using namespace genrank;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

enum class Status { pass, fail, skip };

struct Verdict {
  Status status;
  std::string detail;
};

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::size_t workers() { return std::max(1u, std::thread::hardware_concurrency()); }

fs::path work_dir() {
  const auto dir = fs::temp_directory_path() / "genrank_acceptance";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict gradient_fidelity() {
  const auto start = Clock::now();
  const auto results = objectives::audit_objective_gradients();
  const double elapsed = seconds_since(start);
  bool ok = elapsed < 60.0;
  std::string detail;
  for (const auto& r : results) {
    ok = ok && r.result.ok() && r.result.compared > 0;
    detail += format("%s %zu/%zu max_rel=%.1e; ", r.objective.c_str(), r.result.compared - r.result.failed,
                     r.result.compared, r.result.max_relative_error);
  }
  ok = ok && results.size() == 3;
  return {ok ? Status::pass : Status::fail, detail + format("%.1fs (limit 60s)", elapsed)};
}

Verdict loss_identities() {
  auto config = objectives::GradientAuditConfig::default_model();
  Rng rng(3);
  double worst = 0.0;
  bool rll_zero = true;
  for (int trial = 0; trial < 20; ++trial) {
    const auto model = lm::CausalLm<double>::initialized(config, rng.derive());
    auto random_ids = [&](std::size_t n) {
      std::vector<TokenId> ids(n);
      for (auto& id : ids) id = static_cast<TokenId>(text::kReservedCount + rng.below(config.vocab_size - text::kReservedCount));
      return ids;
    };
    std::vector<lm::EncodedPair> positives;
    std::vector<objectives::LabeledPair> labeled;
    for (std::size_t i = 0, n = 1 + rng.below(4); i < n; ++i) {
      const auto p = text::encode_pair(random_ids(1 + rng.below(5)), random_ids(1 + rng.below(5)), config.pair_budget());
      positives.push_back(p);
      labeled.push_back({p, 1});
    }
    const double mle = objectives::mle_loss(model, std::span<const lm::EncodedPair>(positives));
    const double lul = objectives::lul_loss(model, std::span<const objectives::LabeledPair>(labeled));
    worst = std::max(worst, std::abs(mle - lul));

    // Margins chosen below each triple's current gap, so every hinge is inactive.
    std::vector<objectives::RankTriple> triples;
    for (std::size_t i = 0, n = 1 + rng.below(4); i < n; ++i) {
      const auto question = random_ids(1 + rng.below(5));
      auto a = text::encode_pair(random_ids(1 + rng.below(5)), question, config.pair_budget());
      auto b = text::encode_pair(random_ids(1 + rng.below(5)), question, config.pair_budget());
      const double gap = lm::cond_log_likelihood(model, a) - lm::cond_log_likelihood(model, b);
      if (gap < 0) std::swap(a, b);
      triples.push_back({a, b, std::abs(gap) * rng.uniform()});
    }
    rll_zero = rll_zero && objectives::rll_loss(model, std::span<const objectives::RankTriple>(triples)) == 0.0;
  }
  const bool ok = worst <= 1e-12 && rll_zero;
  return {ok ? Status::pass : Status::fail,
          format("max |lul-mle| = %.1e (tol 1e-12), rll with satisfied margins %s", worst,
                 rll_zero ? "exactly 0" : "nonzero")};
}

Verdict metric_oracle() {
  Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    auto queries = testing::random_queries(rng, 1 + rng.below(6));
    std::vector<rank::RunRecord> run;
    rank::Qrels qrels;
    testing::to_run(queries, run, qrels);
    const auto got = rank::evaluate(run, qrels);
    const auto want = testing::oracle_metrics(queries);
    if (got.evaluated != want.evaluated) return {Status::fail, format("trial %d: evaluated count differs", trial)};
    worst = std::max({worst, std::abs(got.map - want.map), std::abs(got.mrr - want.mrr),
                      std::abs(got.p_at_1 - want.p_at_1)});
  }
  const std::vector<int> hand{1, 0, 1};
  const double ap = *rank::average_precision(hand);
  rank::Qrels qrels;
  qrels.add("q", "a", 0);
  qrels.add("q", "b", 1);
  const std::vector<rank::RunRecord> second{{"q", {{"a", 2.0}, {"b", 1.0}}, ""}};
  const double mrr = rank::evaluate(second, qrels).mrr;
  const bool ok = worst <= 1e-12 && std::abs(ap - 0.8333) < 5e-5 && std::abs(mrr - 0.5) <= 1e-12;
  return {ok ? Status::pass : Status::fail,
          format("1000 runs max diff %.1e (tol 1e-12); AP([1,0,1])=%.4f; MRR(first relevant at 2)=%.4f", worst, ap,
                 mrr)};
}

// The default synthetic task with models trained once and shared by 4, 5 and 7.
struct Experiment {
  corpus::QaDataset data = corpus::generate_synthetic(corpus::SynthSpec{});
  std::array<corpus::Split, 2> fit{corpus::Split::train, corpus::Split::validation};
  text::Vocabulary vocab = corpus::build_vocabulary(data, fit, 30000);
  corpus::SplitView train{data, corpus::Split::train};
  corpus::SplitView validation{data, corpus::Split::validation};
  corpus::SplitView test{data, corpus::Split::test};
  rank::Qrels qrels = rank::qrels_from(test);

  lm::CausalLm<float> fresh() const {
    lm::ModelConfig c;
    c.vocab_size = vocab.size();
    return lm::CausalLm<float>::initialized(c, 0);
  }

  struct Trained {
    train::TrainReport report;
    std::vector<rank::RunRecord> run;
    double map = 0.0;
    double seconds = 0.0;
  };

  Trained fit_and_rank(train::Objective objective, train::Direction direction, rank::Scorer scorer) const {
    const auto start = Clock::now();
    auto model = fresh();
    train::TrainConfig tc;
    tc.objective = objective;
    tc.direction = direction;
    tc.workers = workers();
    Trained t;
    t.report = train::train(model, vocab, train, validation, tc, std::nullopt, {}, [&](const train::EpochStats& e) {
      std::cerr << format("  %s/%s epoch %zu loss %.4f val_map %.4f (%.0fs)\n", std::string(train::to_string(objective)).c_str(),
                          std::string(train::to_string(direction)).c_str(), e.epoch, e.train_loss, e.val_map,
                          seconds_since(start));
    });
    t.run = rank::rank_split(model, vocab, test, scorer, workers());
    t.map = rank::evaluate(t.run, qrels).map;
    t.seconds = seconds_since(start);
    return t;
  }
};

struct Shared {
  std::optional<Experiment> experiment;
  std::optional<std::vector<rank::RunRecord>> untrained_run;
  std::optional<Experiment::Trained> mle;

  Experiment& exp() {
    if (!experiment) experiment.emplace();
    return *experiment;
  }
  const Experiment::Trained& mle_model() {
    if (!mle) mle = exp().fit_and_rank(train::Objective::mle, train::Direction::q_given_a, rank::Scorer::q_given_a);
    return *mle;
  }
};

Verdict end_to_end(Shared& shared) {
  const auto start = Clock::now();
  auto& e = shared.exp();
  bool shape = e.test.questions().size() == 100;
  for (const auto* q : e.test.questions()) shape = shape && q->candidates.size() == 8 && q->positives() == 1;
  shared.untrained_run = rank::rank_split(e.fresh(), e.vocab, e.test, rank::Scorer::q_given_a, workers());
  const double untrained = rank::evaluate(*shared.untrained_run, e.qrels).map;
  double harmonic = 0.0;
  for (int k = 1; k <= 8; ++k) harmonic += 1.0 / k;
  const double baseline = harmonic / 8.0;
  const auto& mle = shared.mle_model();
  const double elapsed = seconds_since(start);
  const bool ok = shape && std::abs(untrained - baseline) <= 0.05 && mle.map >= 0.90 &&
                  mle.report.train_loss.size() <= 10 && elapsed <= 600.0;
  return {ok ? Status::pass : Status::fail,
          format("untrained MAP %.4f (H8/8 %.4f +/- 0.05); MLE test MAP %.4f (>= 0.90) after %zu epochs; %.0fs "
                 "(limit 600s)",
                 untrained, baseline, mle.map, mle.report.train_loss.size(), elapsed)};
}

Verdict objective_trend(Shared& shared) {
  auto& e = shared.exp();
  const double mle = shared.mle_model().map;
  const auto lul = e.fit_and_rank(train::Objective::lul, train::Direction::q_given_a, rank::Scorer::q_given_a);
  const auto rll = e.fit_and_rank(train::Objective::rll, train::Direction::q_given_a, rank::Scorer::q_given_a);
  const auto reverse =
      e.fit_and_rank(train::Objective::mle, train::Direction::a_given_q, rank::Scorer::a_given_q_lennorm);
  const bool ok = lul.map >= mle - 0.02 && rll.map >= mle - 0.02;
  return {ok ? Status::pass : Status::fail,
          format("MLE %.4f, LUL %.4f, RLL %.4f (each >= MLE - 0.02); report only: q_given_a %.4f vs "
                 "a_given_q_lennorm %.4f",
                 mle, lul.map, rll.map, mle, reverse.map)};
}

Verdict determinism() {
  corpus::SynthSpec spec;
  spec.n_entities = 20;
  spec.n_attributes = 5;
  spec.n_values = 12;
  spec.train_questions = 24;
  spec.validation_questions = 8;
  spec.test_questions = 8;
  spec.candidates = 4;
  spec.facts_per_passage = 2;
  spec.seed = 5;
  const auto data = corpus::generate_synthetic(spec);
  const std::array<corpus::Split, 2> fit{corpus::Split::train, corpus::Split::validation};
  const auto vocab = corpus::build_vocabulary(data, fit, 30000);
  const corpus::SplitView train(data, corpus::Split::train), validation(data, corpus::Split::validation),
      test(data, corpus::Split::test);

  std::string detail;
  bool ok = true;
  for (auto objective : {train::Objective::mle, train::Objective::lul, train::Objective::rll}) {
    std::array<std::string, 2> reports, runs, checkpoints;
    for (int repeat = 0; repeat < 2; ++repeat) {
      lm::ModelConfig c;
      c.vocab_size = vocab.size();
      c.d_model = 16;
      c.n_layers = 1;
      c.n_heads = 2;
      c.d_ff = 32;
      c.max_seq_len = 48;
      auto model = lm::CausalLm<double>::initialized(c, 9);
      train::TrainConfig tc;
      tc.objective = objective;
      tc.max_epochs = 3;
      tc.batch_size = 8;
      tc.rll_batch_questions = 4;
      tc.negatives_per_positive = 2;
      tc.rll_sample_size = 3;
      tc.learning_rate = 3e-3;
      tc.seed = 17;
      tc.workers = workers();
      const auto ckpt = work_dir() / "determinism.ckpt";
      fs::remove(ckpt);
      reports[repeat] = train::train(model, vocab, train, validation, tc, ckpt).to_json();
      std::ostringstream run;
      rank::write_run(run, rank::rank_split(model, vocab, test, rank::Scorer::q_given_a, workers()));
      runs[repeat] = run.str();
      checkpoints[repeat] = slurp(ckpt);
    }
    std::string differs;
    if (reports[0] != reports[1]) differs += " report";
    if (runs[0] != runs[1]) differs += " run";
    if (checkpoints[0] != checkpoints[1]) differs += " checkpoint";
    ok = ok && differs.empty();
    detail += format("%s %s; ", std::string(train::to_string(objective)).c_str(),
                     differs.empty() ? "identical" : ("DIFFERS:" + differs).c_str());
  }
  return {ok ? Status::pass : Status::fail, detail + "double precision, report + run + checkpoint bytes"};
}

Verdict format_fidelity(Shared& shared) {
  auto& e = shared.exp();
  if (!shared.untrained_run) {
    shared.untrained_run = rank::rank_split(e.fresh(), e.vocab, e.test, rank::Scorer::q_given_a, workers());
  }
  struct Case {
    std::string name;
    const std::vector<rank::RunRecord>* run;
  };
  std::vector<Case> cases{{"untrained", &*shared.untrained_run}};
  if (shared.mle) cases.push_back({"mle", &shared.mle->run});

  std::string detail;
  bool ok = true;
  for (const auto& c : cases) {
    const auto run_path = work_dir() / (c.name + ".run");
    const auto qrels_path = work_dir() / (c.name + ".qrels");
    rank::write_run(run_path, *c.run);
    rank::write_qrels(qrels_path, e.qrels);
    const auto ours = rank::evaluate(rank::read_run(run_path), rank::read_qrels(qrels_path));

    const auto out_path = work_dir() / (c.name + ".trec_eval.json");
    const std::string command = "python3 \"" GENRANK_ACCEPTANCE_DIR "/trec_eval_check.py\" \"" + qrels_path.string() +
                                "\" \"" + run_path.string() + "\" > \"" + out_path.string() + "\"";
    const int status = std::system(command.c_str());
    if (WIFEXITED(status) && WEXITSTATUS(status) == 77) {
      return {Status::skip, "trec_eval and pytrec_eval unavailable"};
    }
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
      return {Status::fail, c.name + ": trec_eval rejected the files"};
    }
    const auto theirs = nlohmann::json::parse(slurp(out_path));
    const double map = theirs["map"], mrr = theirs["recip_rank"], p1 = theirs["P_1"];
    const bool same = std::abs(map - ours.map) < 5e-5 && std::abs(mrr - ours.mrr) < 5e-5 &&
                      std::abs(p1 - ours.p_at_1) < 5e-5;
    ok = ok && same;
    detail += format("%s: ours %.4f/%.4f/%.4f, %s %.4f/%.4f/%.4f; ", c.name.c_str(), ours.map, ours.mrr, ours.p_at_1,
                     theirs["tool"].get<std::string>().c_str(), map, mrr, p1);
  }
  return {ok ? Status::pass : Status::fail, detail + "MAP/MRR/P@1 to 4 decimals"};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  Shared shared;
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"gradient fidelity", gradient_fidelity},
      {"loss identities", loss_identities},
      {"metric oracle", metric_oracle},
      {"end-to-end learning", [&] { return end_to_end(shared); }},
      {"objective trend", [&] { return objective_trend(shared); }},
      {"determinism", determinism},
      {"format fidelity", [&] { return format_fidelity(shared); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i + 1);
    if (!selected.empty() && !selected.count(number)) continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& ex) {
      v = {Status::fail, std::string("error: ") + ex.what()};
    }
    const char* tag = v.status == Status::pass ? "PASS" : v.status == Status::fail ? "FAIL" : "SKIP";
    if (v.status == Status::fail) ++failures;
    std::cout << "criterion " << number << " " << criteria[i].first << ": " << tag << " - " << v.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
