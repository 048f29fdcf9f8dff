#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "adamra/diffcheck.hpp"

namespace adamra::verify {

enum class Fault { none, drop_eps };

// "none" or "drop-eps"; throws std::invalid_argument otherwise.
Fault parse_fault(const std::string& text);

struct PropertyResult {
  std::string name;
  bool passed = true;
  std::size_t instances = 0;
  double worst = 0.0;  // largest observed error where the property is metric
  std::optional<std::uint64_t> counterexample_seed;
  std::string detail;
};

// One line: `PASS <name> ...` or `FAIL <name> seed=<s> ...`.
std::string format_result(const PropertyResult& r);

// Kernel attention against the explicit quadratic form, ReLU and ELU+1,
// n <= 32, relative error <= 1e-10.
PropertyResult check_linearization(std::size_t seeds, std::uint64_t base_seed,
                                   Fault fault = Fault::none);
// ReLU query rows with no positive entry must give a zero output row.
PropertyResult check_zero_feature_denominator(std::uint64_t base_seed, Fault fault = Fault::none);
// Single key/value and uniform-score cases of the softmax baseline.
PropertyResult check_softmax_degenerate(std::size_t seeds, std::uint64_t base_seed);
// adamra_forward against the explicit-loop oracle, n <= 16, d <= 8, H <= 3,
// S <= 2, relative error <= 1e-10.
PropertyResult check_adamra_oracle(std::size_t seeds, std::uint64_t base_seed);
// H = 1, S = 1, c = (1), identity weights: equals kernel_attention to 1e-12.
PropertyResult check_collapse(std::size_t seeds, std::uint64_t base_seed);
// Partition, argmax shift invariance, row-stochastic probs, first-index ties.
PropertyResult check_routing(std::size_t instances, std::uint64_t base_seed);
// c = 1 leaves memory unchanged; segments tile [0, n); landmark counts.
PropertyResult check_compression(std::size_t seeds, std::uint64_t base_seed);
// No n² term for AdaMRA, softmax/AdaMRA memory ratio strictly increasing.
PropertyResult check_cost_model();

struct SuiteOptions {
  std::size_t seeds = 100;
  std::uint64_t base_seed = 42;
  Fault fault = Fault::none;
};

std::vector<PropertyResult> run_property_suite(const SuiteOptions& opts);

// ---- gradient check --------------------------------------------------------

// Tolerance for step h: 1e-5 · max(1, (h / 1e-5)²), following the O(h²)
// truncation error of central differences.
double gradcheck_tolerance(double h);

struct GradcheckOptions {
  double h = 1e-5;
  std::size_t instances = 20;
  std::uint64_t base_seed = 42;
  bool gate_scaling = true;
  std::size_t n = 8;
  AdamraConfig cfg = small_config();

  // d = 4, H = 2, S = 2, c = (1, 1/2).
  static AdamraConfig small_config();
};

struct GradcheckResult {
  std::vector<diffcheck::BlockError> blocks;  // worst error per block name
  // Worst whole-gradient relative error over all checks; this is what
  // `passed` compares against the tolerance.
  double max_rel_error = 0.0;
  double worst_block_error = 0.0;
  double tolerance = 0.0;
  std::size_t instances = 0;
  std::size_t resamples = 0;
  bool passed = false;
};

// AdaMRA layer instances plus the kernel and softmax attention baselines.
GradcheckResult run_gradcheck(const GradcheckOptions& opts);

}  // namespace adamra::verify
