#include "genrank/cli/app.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>

#include "genrank/cli/settings.hpp"
#include "genrank/corpus/io.hpp"
#include "genrank/corpus/vocab.hpp"
#include "genrank/errors.hpp"
#include "genrank/generation/sampler.hpp"
#include "genrank/model/checkpoint.hpp"
#include "genrank/rank/metrics.hpp"
#include "genrank/rank/scorer.hpp"
#include "genrank/rank/trec_io.hpp"
#include "genrank/train/trainer.hpp"
#include "genrank/util/log.hpp"

namespace genrank::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct Options {
  std::string config;
  std::string data;
  std::string checkpoint;
  std::string out;
  std::string run;
  std::string qrels;
  std::string objective;
  std::string scorer;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::vector<std::string> overrides;
};

Settings resolve(const Options& o) {
  Settings s;
  if (!o.config.empty()) s.load(o.config);
  for (const auto& kv : o.overrides) s.apply(kv);
  if (o.seed) s.set("seed", std::to_string(*o.seed));
  if (o.workers) s.set("workers", std::to_string(*o.workers));
  if (!o.objective.empty()) s.set("objective", o.objective);
  if (!o.scorer.empty()) s.set("scorer", o.scorer);
  return s;
}

std::string with_suffix(const std::string& path, const char* suffix) { return path + suffix; }

void write_text(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << body;
  if (!out) throw InputError("failed writing " + path.string());
}

// Everything needed to rerun the command: settings, their hash, inputs and versions.
void write_manifest(const std::string& command, const Settings& s, const json& inputs, const json& outputs,
                    const fs::path& path) {
  json j;
  j["command"] = command;
  j["version"] = GENRANK_VERSION;
  j["seed"] = s.count("seed");
  j["config_hash"] = s.hash();
  j["config"] = json::object();
  for (const auto& [k, v] : s.values()) j["config"][k] = v;
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  j["versions"] = {{"genrank", GENRANK_VERSION},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"compiler", __VERSION__}};
  write_text(path, j.dump(2) + "\n");
}

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

struct LoadedModel {
  lm::Checkpoint checkpoint;
  text::Vocabulary vocab;
};

LoadedModel load_checkpoint(const std::string& path) {
  auto ck = lm::read_checkpoint(path);
  if (ck.vocabulary_file.empty()) throw InputError(path + ": checkpoint names no vocabulary file");
  auto vocab = text::Vocabulary::load(fs::path(path).parent_path() / ck.vocabulary_file);
  if (vocab.size() != ck.config.vocab_size) {
    throw InputError(path + ": vocabulary has " + std::to_string(vocab.size()) + " tokens, model expects " +
                     std::to_string(ck.config.vocab_size));
  }
  return {std::move(ck), std::move(vocab)};
}

int synth(const Options& o, std::ostream& out) {
  const auto s = resolve(o);
  const auto data = corpus::generate_synthetic(s.synth_spec());
  corpus::save_dataset(data, o.out);
  write_manifest("synth", s, json::object(), json::array({o.out}), with_suffix(o.out, ".manifest.json"));
  out << "wrote " << data.questions().size() << " questions, " << data.passage_count() << " passages to " << o.out
      << "\n";
  return 0;
}

template <typename S>
int train_with(const Options& o, const Settings& s, std::ostream& out) {
  const auto data = corpus::load_dataset(o.data);
  const corpus::Split fit[] = {corpus::Split::train, corpus::Split::validation};
  const auto vocab = corpus::build_vocabulary(data, fit, s.count("vocab_max_size"), s.count("vocab_min_freq"));
  const auto vocab_path = with_suffix(o.checkpoint, ".vocab");
  vocab.save(vocab_path);
  auto model = lm::CausalLm<S>::initialized(s.model_config(vocab.size()), s.count("seed"));
  const auto tc = s.train_config();
  log().info("training {} on {} ({} parameters, vocabulary {})", train::to_string(tc.objective), o.data,
             model.params().parameter_count(), vocab.size());
  const auto report = train::train(
      model, vocab, corpus::SplitView(data, corpus::Split::train), corpus::SplitView(data, corpus::Split::validation),
      tc, fs::path(o.checkpoint), fs::path(vocab_path).filename().string(), [&](const train::EpochStats& e) {
        out << "epoch=" << e.epoch << " loss=" << fixed(e.train_loss, 6) << " val_map=" << fixed(e.val_map, 6)
            << "\n"
            << std::flush;
      });
  const auto report_path = with_suffix(o.checkpoint, ".report.json");
  write_text(report_path, report.to_json());
  write_manifest("train", s, {{"data", o.data}}, json::array({o.checkpoint, vocab_path, report_path}),
                 with_suffix(o.checkpoint, ".manifest.json"));
  out << "best_epoch=" << report.best_epoch << " val_map=" << fixed(report.best_val_map, 6) << "\n";
  return 0;
}

template <typename S>
int rank_with(const Options& o, const Settings& s, std::ostream& out) {
  auto loaded = load_checkpoint(o.checkpoint);
  const lm::CausalLm<S> model(loaded.checkpoint.config, loaded.checkpoint.params.template cast<S>());
  const auto data = corpus::load_dataset(o.data);
  const corpus::SplitView split(data, corpus::parse_split(s.get("split")));
  const auto run = rank::rank_split(model, loaded.vocab, split, rank::parse_scorer(s.get("scorer")), s.count("workers"));
  rank::write_run(fs::path(o.out), run);
  const auto qrels_path = with_suffix(o.out, ".qrels");
  rank::write_qrels(fs::path(qrels_path), rank::qrels_from(split));
  write_manifest("rank", s, {{"data", o.data}, {"checkpoint", o.checkpoint}}, json::array({o.out, qrels_path}),
                 with_suffix(o.out, ".manifest.json"));
  out << "ranked " << run.size() << " queries into " << o.out << "\n";
  return 0;
}

int evaluate(const Options& o, std::ostream& out) {
  const auto s = resolve(o);
  if (o.qrels.empty() == o.data.empty()) throw ConfigError("eval: give exactly one of --qrels or --data");
  const auto run = rank::read_run(fs::path(o.run));
  const auto qrels = !o.qrels.empty() ? rank::read_qrels(fs::path(o.qrels))
                                      : rank::qrels_from(corpus::load_dataset(o.data), corpus::parse_split(s.get("split")));
  const auto m = rank::evaluate(run, qrels);
  out << "MAP=" << fixed(m.map, 4) << " MRR=" << fixed(m.mrr, 4) << " P@1=" << fixed(m.p_at_1, 4) << "\n";
  out << "evaluated=" << m.evaluated << " skipped=" << m.skipped << "\n";
  if (!o.out.empty()) {
    json j{{"map", m.map},       {"mrr", m.mrr},   {"p_at_1", m.p_at_1},
           {"evaluated", m.evaluated}, {"skipped", m.skipped}, {"run", o.run}};
    j["qrels"] = o.qrels.empty() ? o.data : o.qrels;
    write_text(o.out, j.dump(2) + "\n");
    write_manifest("eval", s, {{"run", o.run}, {"qrels", o.qrels}, {"data", o.data}}, json::array({o.out}),
                   with_suffix(o.out, ".manifest.json"));
  }
  return 0;
}

template <typename S>
int generate_with(const Options& o, const Settings& s, std::ostream& out) {
  auto loaded = load_checkpoint(o.checkpoint);
  const lm::CausalLm<S> model(loaded.checkpoint.config, loaded.checkpoint.params.template cast<S>());
  struct Source {
    std::string id;
    std::string text;
  };
  std::vector<Source> sources;
  if (!s.get("prompt").empty()) {
    sources.push_back({"prompt", s.get("prompt")});
  } else {
    if (o.data.empty()) throw ConfigError("generate: give --data or prompt=<passage>");
    const auto data = corpus::load_dataset(o.data);
    const corpus::SplitView split(data, corpus::parse_split(s.get("split")));
    for (const auto* q : split.questions()) {
      if (sources.size() == s.count("limit")) break;
      // First relevant passage, or the first candidate when none is judged relevant.
      const auto* pick = &q->candidates.front();
      for (const auto& cand : q->candidates) {
        if (cand.label == 1) {
          pick = &cand;
          break;
        }
      }
      sources.push_back({pick->pid, split.passage(pick->pid)});
    }
  }
  auto sampler = s.sampler_config();
  Rng seeds(sampler.seed);
  std::ostringstream lines;
  for (const auto& src : sources) {
    for (std::size_t i = 0; i < s.count("n_samples"); ++i) {
      sampler.seed = seeds.derive();
      lines << src.id << '\t' << gen::sample_question(model, loaded.vocab, src.text, sampler) << '\n';
    }
  }
  if (o.out.empty()) {
    out << lines.str();
  } else {
    write_text(o.out, lines.str());
    write_manifest("generate", s, {{"checkpoint", o.checkpoint}, {"data", o.data}}, json::array({o.out}),
                   with_suffix(o.out, ".manifest.json"));
  }
  return 0;
}

int gradcheck(const Options& o, std::ostream& out) {
  const auto s = resolve(o);
  const auto results = objectives::audit_objective_gradients(s.audit_config());
  bool ok = true;
  json j = json::array();
  for (const auto& r : results) {
    ok = ok && r.result.ok();
    out << r.objective << " compared=" << r.result.compared << " failed=" << r.result.failed
        << " max_rel_err=" << r.result.max_relative_error << (r.result.ok() ? " ok" : " FAIL") << "\n";
    if (!r.result.ok()) out << "  worst " << r.result.worst << "\n";
    j.push_back({{"objective", r.objective},
                 {"compared", r.result.compared},
                 {"failed", r.result.failed},
                 {"max_relative_error", r.result.max_relative_error}});
  }
  if (!o.out.empty()) {
    write_text(o.out, j.dump(2) + "\n");
    write_manifest("gradcheck", s, json::object(), json::array({o.out}), with_suffix(o.out, ".manifest.json"));
  }
  return ok ? 0 : 1;
}

template <template <typename> class Fn>
int by_precision(const Options& o, std::ostream& out) {
  const auto s = resolve(o);
  return s.get("precision") == "double" ? Fn<double>{}(o, s, out) : Fn<float>{}(o, s, out);
}

template <typename S>
struct TrainCommand {
  int operator()(const Options& o, const Settings& s, std::ostream& out) const { return train_with<S>(o, s, out); }
};
template <typename S>
struct RankCommand {
  int operator()(const Options& o, const Settings& s, std::ostream& out) const { return rank_with<S>(o, s, out); }
};
template <typename S>
struct GenerateCommand {
  int operator()(const Options& o, const Settings& s, std::ostream& out) const { return generate_with<S>(o, s, out); }
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rank passages by the likelihood of generating the question.", "genrank"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* cmd) {
    cmd->add_option("--config", o.config, "key=value settings file")->check(CLI::ExistingFile);
    cmd->add_option("overrides", o.overrides, "key=value setting overrides");
  };
  auto seed = [&](CLI::App* cmd) { cmd->add_option("--seed", o.seed, "random seed"); };
  auto workers = [&](CLI::App* cmd) { cmd->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber); };

  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic dataset");
  synth_cmd->add_option("--out", o.out, "dataset path (.jsonl or .tsv)")->required();
  seed(synth_cmd);
  common(synth_cmd);

  auto* train_cmd = app.add_subcommand("train", "fine-tune a model and write a checkpoint");
  train_cmd->add_option("--data", o.data, "dataset path")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--checkpoint", o.checkpoint, "checkpoint to write")->required();
  train_cmd->add_option("--objective", o.objective, "mle | lul | rll");
  seed(train_cmd);
  workers(train_cmd);
  common(train_cmd);

  auto* rank_cmd = app.add_subcommand("rank", "score candidates and write a TREC run file");
  rank_cmd->add_option("--data", o.data, "dataset path")->required()->check(CLI::ExistingFile);
  rank_cmd->add_option("--checkpoint", o.checkpoint, "model checkpoint")->required()->check(CLI::ExistingFile);
  rank_cmd->add_option("--out", o.out, "run file to write")->required();
  rank_cmd->add_option("--scorer", o.scorer, "q_given_a | a_given_q");
  workers(rank_cmd);
  common(rank_cmd);

  auto* eval_cmd = app.add_subcommand("eval", "compute MAP, MRR and P@1 of a run file");
  eval_cmd->add_option("--run", o.run, "TREC run file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--qrels", o.qrels, "TREC qrels file")->check(CLI::ExistingFile);
  eval_cmd->add_option("--data", o.data, "dataset whose split provides the qrels")->check(CLI::ExistingFile);
  eval_cmd->add_option("--out", o.out, "metrics report to write");
  common(eval_cmd);

  auto* generate_cmd = app.add_subcommand("generate", "sample questions for passages");
  generate_cmd->add_option("--checkpoint", o.checkpoint, "model checkpoint")->required()->check(CLI::ExistingFile);
  generate_cmd->add_option("--data", o.data, "dataset supplying passages")->check(CLI::ExistingFile);
  generate_cmd->add_option("--out", o.out, "output file (default stdout)");
  seed(generate_cmd);
  common(generate_cmd);

  auto* gradcheck_cmd = app.add_subcommand("gradcheck", "finite-difference check of all objectives");
  gradcheck_cmd->add_option("--out", o.out, "report to write");
  seed(gradcheck_cmd);
  common(gradcheck_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return 2;
  }

  try {
    if (synth_cmd->parsed()) return synth(o, out);
    if (train_cmd->parsed()) return by_precision<TrainCommand>(o, out);
    if (rank_cmd->parsed()) return by_precision<RankCommand>(o, out);
    if (eval_cmd->parsed()) return evaluate(o, out);
    if (generate_cmd->parsed()) return by_precision<GenerateCommand>(o, out);
    if (gradcheck_cmd->parsed()) return gradcheck(o, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"genrank"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace genrank::cli
