#include "genrank/objectives/gradient_audit.hpp"

#include "genrank/objectives/losses.hpp"
#include "genrank/text/encoding.hpp"
#include "genrank/util/random.hpp"

namespace genrank::objectives {
namespace {

std::vector<TokenId> random_tokens(Rng& rng, std::size_t n, std::size_t vocab) {
  std::vector<TokenId> ids(n);
  for (auto& id : ids) id = static_cast<TokenId>(text::kReservedCount + rng.below(vocab - text::kReservedCount));
  return ids;
}

template <typename Batch, typename Loss>
ObjectiveGradCheck audit(const char* name, lm::CausalLm<double> model, const Batch& batch, Loss loss,
                         const GradCheckOptions& options) {
  std::vector<Tensor<double>> analytic;
  {
    Graph<double> graph;
    auto b = model.bind(graph, true);
    graph.backward(loss(b, batch));
    for (const auto& p : b.params) analytic.push_back(graph.grad(p));
  }
  auto& params = model.mutable_params();
  auto value = [&]() {
    Graph<double> graph;
    return loss(model.bind(graph, false), batch).item();
  };
  return {name, check_gradients(params.tensors, analytic, params.names, value, options)};
}

}  // namespace

std::vector<ObjectiveGradCheck> audit_objective_gradients(const GradientAuditConfig& config) {
  config.model.validate();
  Rng rng(config.seed);
  auto model = lm::CausalLm<double>::initialized(config.model, rng.derive());
  for (auto& t : model.mutable_params().tensors) {
    for (Index i = 0; i < t.size(); ++i) t.data()[i] = config.weight_scale * rng.normal();
  }
  const std::size_t vocab = config.model.vocab_size;
  const std::size_t budget = config.model.pair_budget();
  auto pair = [&](const std::vector<TokenId>& question) {
    return text::encode_pair(random_tokens(rng, 2 + rng.below(3), vocab), question, budget);
  };

  std::vector<text::EncodedPair> mle;
  std::vector<LabeledPair> lul;
  std::vector<RankTriple> rll;
  for (int i = 0; i < 2; ++i) mle.push_back(pair(random_tokens(rng, 2 + rng.below(2), vocab)));
  const auto question = random_tokens(rng, 3, vocab);
  lul.push_back({pair(question), 1});
  lul.push_back({pair(question), 0});
  // A wide margin keeps the hinge active and away from its kink.
  rll.push_back({pair(question), pair(question), 20.0});

  std::vector<ObjectiveGradCheck> out;
  out.push_back(audit(
      "mle", model, mle, [](const auto& b, const auto& batch) { return mle_loss(b, std::span<const text::EncodedPair>(batch)); },
      config.options));
  out.push_back(audit(
      "lul", model, lul, [](const auto& b, const auto& batch) { return lul_loss(b, std::span<const LabeledPair>(batch)); },
      config.options));
  out.push_back(audit(
      "rll", model, rll, [](const auto& b, const auto& batch) { return rll_loss(b, std::span<const RankTriple>(batch)); },
      config.options));
  return out;
}

}  // namespace genrank::objectives
