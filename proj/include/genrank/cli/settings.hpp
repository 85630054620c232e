#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "genrank/corpus/synthetic.hpp"
#include "genrank/generation/sampler.hpp"
#include "genrank/model/config.hpp"
#include "genrank/objectives/gradient_audit.hpp"
#include "genrank/train/trainer.hpp"

namespace genrank::cli {

// Flat key=value run settings over a fixed key table. Values are checked
// against the key's type when set; unknown keys are ConfigErrors.
class Settings {
 public:
  Settings();

  void set(std::string_view key, std::string_view value);
  // Parses `key=value`.
  void apply(std::string_view assignment);
  // One `key = value` per line; blank lines and `#` comments are ignored.
  void load(const std::filesystem::path& path);

  const std::string& get(std::string_view key) const;
  std::size_t count(std::string_view key) const;
  double real(std::string_view key) const;
  bool flag(std::string_view key) const;

  // Sorted key -> value.
  const std::map<std::string, std::string, std::less<>>& values() const { return values_; }
  // FNV-1a over the sorted `key=value` lines, as 16 hex digits.
  std::string hash() const;

  lm::ModelConfig model_config(std::size_t vocab_size) const;
  train::TrainConfig train_config() const;
  corpus::SynthSpec synth_spec() const;
  gen::SamplerConfig sampler_config() const;
  objectives::GradientAuditConfig audit_config() const;

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

}  // namespace genrank::cli
