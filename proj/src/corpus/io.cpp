#include "genrank/corpus/io.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "genrank/errors.hpp"
#include "genrank/util/log.hpp"

namespace genrank::corpus {
namespace {

using nlohmann::json;

constexpr std::string_view kTsvHeader = "qid\tquestion\tpid\tpassage\tlabel\tsplit";

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

std::string id_field(const json& record, const char* key) {
  const auto& v = record.at(key);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw InputError(std::string("field '") + key + "' must be a string or integer");
}

int label_field(const json& v) {
  if (v.is_boolean()) return v.get<bool>() ? 1 : 0;
  if (v.is_number_integer()) return v.get<int>();
  throw InputError("field 'label' must be 0/1 or a boolean");
}

void apply_record(QaDataset& data, const std::string& qid, const std::string* question, const std::string& pid,
                  const std::string* passage, int label, const std::string* split) {
  if (question != nullptr && !question->empty()) {
    if (split == nullptr || split->empty()) throw InputError("record defines question " + qid + " without a split");
    data.define_question(qid, *question, parse_split(*split));
  }
  if (passage != nullptr && !passage->empty()) data.define_passage(pid, *passage);
  data.add_judgment(qid, pid, label);
}

QaDataset read_jsonl(const std::filesystem::path& path, std::istream& in) {
  QaDataset data;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json record = json::parse(line);
      if (!record.is_object()) throw InputError("record is not a JSON object");
      const std::string qid = id_field(record, "qid");
      const std::string pid = id_field(record, "pid");
      const int label = label_field(record.at("label"));
      const auto text = [&](const char* key) -> std::optional<std::string> {
        if (!record.contains(key) || record.at(key).is_null()) return std::nullopt;
        return record.at(key).get<std::string>();
      };
      const auto question = text("question");
      const auto passage = text("passage");
      const auto split = text("split");
      apply_record(data, qid, question ? &*question : nullptr, pid, passage ? &*passage : nullptr, label,
                   split ? &*split : nullptr);
    } catch (const json::exception& e) {
      throw InputError(where(path, number) + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(where(path, number) + e.what());
    } catch (const InputError& e) {
      throw InputError(where(path, number) + e.what());
    }
  }
  return data;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

QaDataset read_tsv(const std::filesystem::path& path, std::istream& in) {
  QaDataset data;
  std::string line;
  std::size_t number = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kTsvHeader) throw InputError(where(path, number) + "expected header '" + std::string(kTsvHeader) + "'");
      header_seen = true;
      continue;
    }
    try {
      const auto f = split_tabs(line);
      if (f.size() != 6) throw InputError("expected 6 tab-separated fields, got " + std::to_string(f.size()));
      int label = 0;
      if (f[4] == "0" || f[4] == "1") {
        label = f[4][0] - '0';
      } else {
        throw InputError("label must be 0 or 1, got '" + f[4] + "'");
      }
      apply_record(data, f[0], &f[1], f[2], &f[3], label, &f[5]);
    } catch (const ValidationError& e) {
      throw ValidationError(where(path, number) + e.what());
    } catch (const InputError& e) {
      throw InputError(where(path, number) + e.what());
    }
  }
  if (!header_seen) throw InputError(path.string() + ": empty file");
  return data;
}

void log_stats(const std::filesystem::path& path, const QaDataset& data) {
  for (Split s : {Split::train, Split::validation, Split::test}) {
    const auto st = data.stats(s);
    if (st.questions == 0) continue;
    log().info("{}: {} {} questions, {:.1f} passages/question, {} positives", path.filename().string(),
               to_string(s), st.questions, st.passages_per_question(), st.positives);
  }
}

}  // namespace

Format format_for(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".jsonl" || ext == ".json") return Format::jsonl;
  if (ext == ".tsv") return Format::tsv;
  throw InputError("cannot infer dataset format from '" + path.string() + "' (use .jsonl or .tsv)");
}

QaDataset load_dataset(const std::filesystem::path& path, Format format) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open dataset " + path.string());
  QaDataset data = format == Format::jsonl ? read_jsonl(path, in) : read_tsv(path, in);
  data.validate();
  log_stats(path, data);
  return data;
}

QaDataset load_dataset(const std::filesystem::path& path) { return load_dataset(path, format_for(path)); }

void save_dataset(const QaDataset& data, const std::filesystem::path& path, Format format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write dataset " + path.string());
  if (format == Format::tsv) out << kTsvHeader << '\n';
  for (const auto& q : data.questions()) {
    for (const auto& c : q.candidates) {
      const auto& passage = data.passage(c.pid);
      if (format == Format::jsonl) {
        const json record{{"qid", q.id},   {"question", q.text}, {"pid", c.pid},
                          {"passage", passage}, {"label", c.label},  {"split", to_string(q.split)}};
        out << record.dump() << '\n';
      } else {
        for (const auto* field : {&q.id, &q.text, &c.pid, &passage}) {
          if (field->find_first_of("\t\n\r") != std::string::npos) {
            throw InputError("tsv: field of (" + q.id + ", " + c.pid + ") contains a tab or newline");
          }
        }
        out << q.id << '\t' << q.text << '\t' << c.pid << '\t' << passage << '\t' << c.label << '\t'
            << to_string(q.split) << '\n';
      }
    }
  }
  if (!out) throw InputError("write failed for " + path.string());
}

void save_dataset(const QaDataset& data, const std::filesystem::path& path) {
  save_dataset(data, path, format_for(path));
}

}  // namespace genrank::corpus
