#include "genrank/model/config.hpp"

namespace genrank::lm {

void ModelConfig::validate() const {
  const auto fail = [](const std::string& what) { throw ConfigError("model config: " + what); };
  if (vocab_size < 6) fail("vocab_size must cover the reserved tokens plus at least one word");
  if (d_model == 0 || n_layers == 0 || n_heads == 0 || d_ff == 0 || max_seq_len < 4) {
    fail("all sizes must be positive and max_seq_len >= 4");
  }
  if (d_model % n_heads != 0) {
    fail("d_model " + std::to_string(d_model) + " not divisible by n_heads " + std::to_string(n_heads));
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must be in [0, 1)");
}

std::vector<TensorSpec> parameter_layout(const ModelConfig& config) {
  const auto v = static_cast<Index>(config.vocab_size);
  const auto d = static_cast<Index>(config.d_model);
  const auto ff = static_cast<Index>(config.d_ff);
  std::vector<TensorSpec> layout{
      {"tok_emb.weight", v, d},
      {"pos_emb.weight", static_cast<Index>(config.max_seq_len), d},
  };
  for (std::size_t l = 0; l < config.n_layers; ++l) {
    const std::string p = "block" + std::to_string(l) + ".";
    layout.push_back({p + "ln1.gain", 1, d});
    layout.push_back({p + "ln1.bias", 1, d});
    layout.push_back({p + "attn.qkv.weight", d, 3 * d});
    layout.push_back({p + "attn.qkv.bias", 1, 3 * d});
    layout.push_back({p + "attn.out.weight", d, d});
    layout.push_back({p + "attn.out.bias", 1, d});
    layout.push_back({p + "ln2.gain", 1, d});
    layout.push_back({p + "ln2.bias", 1, d});
    layout.push_back({p + "ffn.in.weight", d, ff});
    layout.push_back({p + "ffn.in.bias", 1, ff});
    layout.push_back({p + "ffn.out.weight", ff, d});
    layout.push_back({p + "ffn.out.bias", 1, d});
  }
  layout.push_back({"ln_f.gain", 1, d});
  layout.push_back({"ln_f.bias", 1, d});
  if (!config.tie_embeddings) layout.push_back({"lm_head.weight", v, d});
  return layout;
}

}  // namespace genrank::lm
