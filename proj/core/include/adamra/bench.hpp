#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "adamra/adamra.hpp"

namespace adamra::bench {

inline constexpr std::size_t kDefaultWarmup = 3;
inline constexpr std::size_t kMinTrials = 5;
inline constexpr std::size_t kMinLength = 64;

struct TimingStats {
  std::string model;
  std::size_t n = 0;
  std::size_t trials = 0;
  double median_s = 0.0;
  double min_s = 0.0;
  double analytic_floats = 0.0;
  std::int64_t measured_peak_bytes = 0;  // Matrix bytes above baseline, one pass
};

// The three benchmarked layers at d = 64, H = 4. "adamra" uses S = 4 and
// c = (1/4, 1/8, 1/16, 1/32).
const std::vector<std::string>& model_tags();
AdamraConfig bench_adamra_config();

// Median of `trials` single-threaded forward passes on seeded uniform input
// (batch 1), after `warmup` untimed passes. Throws std::invalid_argument on
// an unknown tag, n < 64 or trials < 5.
TimingStats time_forward(const std::string& model, std::size_t n, std::size_t trials,
                         std::uint64_t seed, std::size_t warmup = kDefaultWarmup);

struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<double> residuals;  // log(t) minus the fitted line, per point
};

// Least-squares fit of log(seconds) against log(n). Needs at least 4 points
// with positive values and max(n)/min(n) >= 8.
ScalingFit scaling_fit(const std::vector<std::pair<double, double>>& series);

// `model,n,trials,median_s,min_s,analytic_floats`.
void write_timing_csv(std::ostream& out, const std::vector<TimingStats>& rows);

}  // namespace adamra::bench
