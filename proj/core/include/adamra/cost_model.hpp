#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "adamra/config.hpp"

namespace adamra {

// How an item scales with sequence length n.
enum class Growth { constant, linear, quadratic };

struct CostItem {
  std::string stage;
  double macs = 0.0;    // multiply-adds (additions and exps count as one)
  double floats = 0.0;  // doubles live at the forward pass peak
  Growth growth = Growth::linear;
};

struct CostEstimate {
  std::vector<CostItem> items;

  double total_macs() const noexcept;
  double peak_floats() const noexcept;
  bool has_quadratic_term() const noexcept;
  const CostItem* find(const std::string& stage) const noexcept;
};

struct CostComparison {
  CostEstimate adamra;
  CostEstimate softmax_baseline;
  std::size_t total_landmarks = 0;

  double memory_ratio() const noexcept {
    return softmax_baseline.peak_floats() / adamra.peak_floats();
  }
  double mac_ratio() const noexcept {
    return softmax_baseline.total_macs() / adamra.total_macs();
  }
};

// Storage and work of one adamra_forward call at length n, itemized per
// stage and mirroring what the forward pass retains in its trace.
CostEstimate adamra_cost(const AdamraConfig& cfg, std::size_t n);

// Vanilla multi-head baselines with H heads of width d/H.
CostEstimate softmax_baseline_cost(std::size_t d, std::size_t heads, std::size_t n);
CostEstimate kernel_baseline_cost(std::size_t d, std::size_t heads, std::size_t n);

CostComparison flop_and_memory_model(const AdamraConfig& cfg, std::size_t n);

}  // namespace adamra
