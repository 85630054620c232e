#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "genrank/model/config.hpp"
#include "genrank/model/transformer.hpp"

namespace genrank::lm {

// Binary layout, all integers little-endian:
//   "GRNK" | u32 version | u64 header bytes | JSON header | float32 tensor data
// The header carries the model config, a tensor directory (name, shape, byte
// offset into the data section, byte length) and an optional vocabulary path
// relative to the checkpoint.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig config;
  ModelParams<float> params;
  std::string vocabulary_file;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
// Rejects bad magic, unknown versions, and directories that disagree with the config.
Checkpoint read_checkpoint(const std::filesystem::path& path);

template <typename Scalar>
void save_model(const std::filesystem::path& path, const CausalLm<Scalar>& model,
                const std::string& vocabulary_file = {}) {
  write_checkpoint(path, Checkpoint{model.config(), model.params().template cast<float>(), vocabulary_file});
}

template <typename Scalar>
CausalLm<Scalar> load_model(const std::filesystem::path& path) {
  auto ck = read_checkpoint(path);
  return CausalLm<Scalar>(ck.config, ck.params.template cast<Scalar>());
}

}  // namespace genrank::lm
