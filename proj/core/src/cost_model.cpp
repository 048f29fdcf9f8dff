#include "adamra/cost_model.hpp"

#include <algorithm>

namespace adamra {

double CostEstimate::total_macs() const noexcept {
  double total = 0.0;
  for (const auto& item : items) total += item.macs;
  return total;
}

double CostEstimate::peak_floats() const noexcept {
  double total = 0.0;
  for (const auto& item : items) total += item.floats;
  return total;
}

bool CostEstimate::has_quadratic_term() const noexcept {
  return std::any_of(items.begin(), items.end(),
                     [](const CostItem& i) { return i.growth == Growth::quadratic; });
}

const CostItem* CostEstimate::find(const std::string& stage) const noexcept {
  auto it = std::find_if(items.begin(), items.end(),
                         [&](const CostItem& i) { return i.stage == stage; });
  return it == items.end() ? nullptr : &*it;
}

CostEstimate adamra_cost(const AdamraConfig& cfg, std::size_t n) {
  cfg.validate();
  const double nn = static_cast<double>(n);
  const double d = static_cast<double>(cfg.d);
  const double heads = static_cast<double>(cfg.heads);
  const double subheads = static_cast<double>(cfg.subheads);
  const double dk = static_cast<double>(cfg.head_dim());
  const double landmarks = static_cast<double>(cfg.total_landmarks(n));
  const double gated = cfg.gate_scaling ? 1.0 : 0.0;

  CostEstimate e;
  e.items.push_back({"input", 0.0, nn * d, Growth::linear});
  e.items.push_back({"projection", 3.0 * nn * d * d, 3.0 * nn * d, Growth::linear});
  e.items.push_back({"compression", 2.0 * heads * nn * d, 2.0 * landmarks * d, Growth::linear});
  e.items.push_back({"routing", nn * d * heads + 2.0 * nn * heads, 2.0 * nn * heads,
                     Growth::linear});
  // Per-head memory: subhead K/V projections of the landmarks plus the
  // φ(K̃)ᵀṼ summaries (Σ m_h d² work).
  e.items.push_back({"memory", 2.0 * landmarks * d * d + landmarks * d * dk,
                     2.0 * landmarks * d, Growth::linear});
  e.items.push_back({"memory_state", 0.0, heads * subheads * (dk * dk + dk),
                     Growth::constant});
  // Query side: every token is projected and attends in exactly one head.
  e.items.push_back({"query", nn * d * d + nn * d * dk + nn * d, 3.0 * nn * d,
                     Growth::linear});
  e.items.push_back({"output", nn * d * d + gated * nn * d, (2.0 + gated) * nn * d,
                     Growth::linear});
  return e;
}

CostEstimate softmax_baseline_cost(std::size_t d_in, std::size_t heads_in, std::size_t n) {
  const double nn = static_cast<double>(n);
  const double d = static_cast<double>(d_in);
  const double heads = static_cast<double>(heads_in);
  CostEstimate e;
  e.items.push_back({"input", 0.0, nn * d, Growth::linear});
  e.items.push_back({"projection", 3.0 * nn * d * d, 3.0 * nn * d, Growth::linear});
  e.items.push_back({"scores", nn * nn * d + heads * nn * nn, heads * nn * nn,
                     Growth::quadratic});
  e.items.push_back({"weighted_sum", nn * nn * d, nn * d, Growth::quadratic});
  e.items.push_back({"output", nn * d * d, 2.0 * nn * d, Growth::linear});
  return e;
}

CostEstimate kernel_baseline_cost(std::size_t d_in, std::size_t heads_in, std::size_t n) {
  const double nn = static_cast<double>(n);
  const double d = static_cast<double>(d_in);
  const double heads = static_cast<double>(heads_in);
  const double dk = d / heads;
  CostEstimate e;
  e.items.push_back({"input", 0.0, nn * d, Growth::linear});
  e.items.push_back({"projection", 3.0 * nn * d * d, 3.0 * nn * d, Growth::linear});
  e.items.push_back({"features", 2.0 * nn * d, 2.0 * nn * d, Growth::linear});
  e.items.push_back({"summary", nn * d * dk + nn * d, 0.0, Growth::linear});
  e.items.push_back({"summary_state", 0.0, heads * (dk * dk + dk), Growth::constant});
  e.items.push_back({"query", nn * d * dk + nn * d, nn * d, Growth::linear});
  e.items.push_back({"output", nn * d * d, 2.0 * nn * d, Growth::linear});
  return e;
}

CostComparison flop_and_memory_model(const AdamraConfig& cfg, std::size_t n) {
  CostComparison c;
  c.adamra = adamra_cost(cfg, n);
  c.softmax_baseline = softmax_baseline_cost(cfg.d, cfg.heads, n);
  c.total_landmarks = cfg.total_landmarks(n);
  return c;
}

}  // namespace adamra
