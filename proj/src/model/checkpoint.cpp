#include "genrank/model/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

namespace genrank::lm {
namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr std::array<char, 4> kMagic{'G', 'R', 'N', 'K'};

json config_to_json(const ModelConfig& c) {
  return json{{"vocab_size", c.vocab_size}, {"d_model", c.d_model},         {"n_layers", c.n_layers},
              {"n_heads", c.n_heads},       {"d_ff", c.d_ff},               {"max_seq_len", c.max_seq_len},
              {"dropout", c.dropout},       {"tie_embeddings", c.tie_embeddings}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.d_model = j.at("d_model").get<std::size_t>();
  c.n_layers = j.at("n_layers").get<std::size_t>();
  c.n_heads = j.at("n_heads").get<std::size_t>();
  c.d_ff = j.at("d_ff").get<std::size_t>();
  c.max_seq_len = j.at("max_seq_len").get<std::size_t>();
  c.dropout = j.at("dropout").get<double>();
  c.tie_embeddings = j.at("tie_embeddings").get<bool>();
  return c;
}

template <typename T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::string& what) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw InputError("checkpoint: truncated " + what);
  return v;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  checkpoint.config.validate();
  json directory = json::array();
  std::uint64_t offset = 0;
  for (std::size_t i = 0; i < checkpoint.params.size(); ++i) {
    const auto& t = checkpoint.params.tensors[i];
    const auto bytes = static_cast<std::uint64_t>(t.size()) * sizeof(float);
    directory.push_back({{"name", checkpoint.params.names[i]},
                         {"shape", {t.rows(), t.cols()}},
                         {"offset", offset},
                         {"length", bytes}});
    offset += bytes;
  }
  const json header{{"format", "genrank-checkpoint"},
                    {"config", config_to_json(checkpoint.config)},
                    {"tensors", directory},
                    {"vocabulary", checkpoint.vocabulary_file},
                    {"data_bytes", offset}};
  const std::string text = header.dump(2);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("checkpoint: cannot write " + path.string());
  out.write(kMagic.data(), kMagic.size());
  write_pod<std::uint32_t>(out, kCheckpointVersion);
  write_pod<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& t : checkpoint.params.tensors) {
    out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(float)));
  }
  if (!out) throw InputError("checkpoint: write failed for " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("checkpoint: cannot open " + path.string());
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw InputError("checkpoint: " + path.string() + " is not a GRNK file");
  }
  const auto version = read_pod<std::uint32_t>(in, "version");
  if (version != kCheckpointVersion) {
    throw InputError("checkpoint: unsupported format version " + std::to_string(version));
  }
  const auto header_bytes = read_pod<std::uint64_t>(in, "header length");
  if (header_bytes > (1u << 26)) throw InputError("checkpoint: implausible header length");
  std::string text(header_bytes, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(header_bytes))) {
    throw InputError("checkpoint: truncated header");
  }

  Checkpoint ck;
  std::vector<std::tuple<std::string, Index, Index, std::uint64_t, std::uint64_t>> entries;
  std::uint64_t data_bytes = 0;
  try {
    const json header = json::parse(text);
    ck.config = config_from_json(header.at("config"));
    ck.vocabulary_file = header.value("vocabulary", "");
    data_bytes = header.at("data_bytes").get<std::uint64_t>();
    for (const auto& e : header.at("tensors")) {
      entries.emplace_back(e.at("name").get<std::string>(), e.at("shape").at(0).get<Index>(),
                           e.at("shape").at(1).get<Index>(), e.at("offset").get<std::uint64_t>(),
                           e.at("length").get<std::uint64_t>());
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("checkpoint: malformed header: ") + e.what());
  }

  std::vector<char> data(data_bytes);
  if (!in.read(data.data(), static_cast<std::streamsize>(data_bytes))) {
    throw InputError("checkpoint: truncated tensor data");
  }
  for (const auto& [name, rows, cols, offset, length] : entries) {
    if (rows < 0 || cols < 0 || length != static_cast<std::uint64_t>(rows * cols) * sizeof(float) ||
        offset + length > data_bytes) {
      throw InputError("checkpoint: bad directory entry for " + name);
    }
    Tensor<float> t(rows, cols);
    std::memcpy(t.data(), data.data() + offset, length);
    ck.params.names.push_back(name);
    ck.params.tensors.push_back(std::move(t));
  }
  // Shape/name agreement with the config is checked by the model constructor.
  CausalLm<float> probe(ck.config, ck.params);
  (void)probe;
  return ck;
}

}  // namespace genrank::lm
