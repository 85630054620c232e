#include "genrank/rank/trec_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "genrank/errors.hpp"

namespace genrank::rank {
namespace {

std::vector<std::string> fields(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string f; in >> f;) out.push_back(std::move(f));
  return out;
}

InputError parse_error(const std::string& source, std::size_t line_no, const std::string& what) {
  return InputError(source + ":" + std::to_string(line_no) + ": " + what);
}

template <typename T>
bool parse_number(const std::string& text, T& out) {
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  return in;
}

}  // namespace

void write_run(std::ostream& out, std::span<const RunRecord> run) {
  char score[64];
  for (const auto& record : run) {
    auto ranking = record.ranking;
    sort_ranking(ranking);
    const std::string tag = record.tag.empty() ? "genrank" : record.tag;
    for (std::size_t i = 0; i < ranking.size(); ++i) {
      std::snprintf(score, sizeof score, "%.6f", ranking[i].score);
      out << record.qid << " Q0 " << ranking[i].pid << ' ' << (i + 1) << ' ' << score << ' ' << tag << '\n';
    }
  }
}

void write_run(const std::filesystem::path& path, std::span<const RunRecord> run) {
  auto out = open_out(path);
  write_run(out, run);
  if (!out) throw InputError("failed writing " + path.string());
}

std::vector<RunRecord> read_run(std::istream& in, const std::string& source) {
  std::vector<RunRecord> run;
  std::map<std::string, std::size_t, std::less<>> index;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    const auto f = fields(line);
    if (f.empty()) continue;
    if (f.size() != 6) throw parse_error(source, line_no, "expected 6 fields, got " + std::to_string(f.size()));
    long rank = 0;
    if (!parse_number(f[3], rank)) throw parse_error(source, line_no, "bad rank '" + f[3] + "'");
    double score = 0.0;
    if (!parse_number(f[4], score)) throw parse_error(source, line_no, "bad score '" + f[4] + "'");
    auto [it, inserted] = index.emplace(f[0], run.size());
    if (inserted) run.push_back(RunRecord{f[0], {}, f[5]});
    run[it->second].ranking.push_back({f[2], score});
  }
  for (auto& record : run) sort_ranking(record.ranking);
  return run;
}

std::vector<RunRecord> read_run(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_run(in, path.string());
}

void write_qrels(std::ostream& out, const Qrels& qrels) {
  for (const auto& [qid, row] : qrels.judgments()) {
    for (const auto& [pid, rel] : row) out << qid << " 0 " << pid << ' ' << rel << '\n';
  }
}

void write_qrels(const std::filesystem::path& path, const Qrels& qrels) {
  auto out = open_out(path);
  write_qrels(out, qrels);
  if (!out) throw InputError("failed writing " + path.string());
}

Qrels read_qrels(std::istream& in, const std::string& source) {
  Qrels qrels;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    const auto f = fields(line);
    if (f.empty()) continue;
    if (f.size() != 4) throw parse_error(source, line_no, "expected 4 fields, got " + std::to_string(f.size()));
    int rel = 0;
    if (!parse_number(f[3], rel)) throw parse_error(source, line_no, "bad relevance '" + f[3] + "'");
    try {
      qrels.add(f[0], f[2], rel);
    } catch (const InputError& e) {
      throw parse_error(source, line_no, e.what());
    }
  }
  return qrels;
}

Qrels read_qrels(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_qrels(in, path.string());
}

Qrels qrels_from(const corpus::QaDataset& data, std::optional<corpus::Split> split) {
  Qrels qrels;
  for (const auto& q : data.questions()) {
    if (split && q.split != *split) continue;
    for (const auto& c : q.candidates) qrels.add(q.id, c.pid, c.label);
  }
  return qrels;
}

Qrels qrels_from(const corpus::SplitView& split) {
  Qrels qrels;
  for (const auto* q : split.questions()) {
    for (const auto& c : q->candidates) qrels.add(q->id, c.pid, c.label);
  }
  return qrels;
}

}  // namespace genrank::rank
