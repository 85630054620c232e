#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "genrank/model/config.hpp"
#include "genrank/numeric/gradcheck.hpp"

namespace genrank::objectives {

struct GradientAuditConfig {
  lm::ModelConfig model = default_model();
  std::uint64_t seed = 0;
  // Every weight, gain and bias is drawn from N(0, weight_scale^2).
  double weight_scale = 0.3;
  GradCheckOptions options;

  static lm::ModelConfig default_model() {
    lm::ModelConfig c;
    c.vocab_size = 64;
    c.d_model = 32;
    c.n_layers = 2;
    c.n_heads = 2;
    c.d_ff = 64;
    c.max_seq_len = 16;
    return c;
  }
};

struct ObjectiveGradCheck {
  std::string objective;
  GradCheckResult result;
};

// Finite-difference check of every model weight under the MLE, LUL and RLL
// losses for a random double-precision model and random token batches.
// Training init is avoided on purpose: its tiny embeddings put layer norm
// near its singular point, where central differences lose accuracy.
std::vector<ObjectiveGradCheck> audit_objective_gradients(const GradientAuditConfig& config = {});

}  // namespace genrank::objectives
