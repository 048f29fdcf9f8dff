#include "adamra/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <ostream>
#include <random>
#include <stdexcept>

#include "adamra/attention.hpp"
#include "adamra/cost_model.hpp"
#include "adamra/memory_stats.hpp"

namespace adamra::bench {
namespace {

constexpr std::size_t kWidth = 64;
constexpr std::size_t kHeads = 4;

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

const std::vector<std::string>& model_tags() {
  static const std::vector<std::string> tags{"softmax", "kernel", "adamra"};
  return tags;
}

AdamraConfig bench_adamra_config() {
  AdamraConfig cfg;
  cfg.d = kWidth;
  cfg.heads = kHeads;
  cfg.subheads = 4;
  cfg.rates = parse_rates("1/4,1/8,1/16,1/32");
  return cfg;
}

TimingStats time_forward(const std::string& model, std::size_t n, std::size_t trials,
                         std::uint64_t seed, std::size_t warmup) {
  const auto& tags = model_tags();
  if (std::find(tags.begin(), tags.end(), model) == tags.end()) {
    throw std::invalid_argument("unknown model tag '" + model + "'");
  }
  if (n < kMinLength) throw std::invalid_argument("time_forward: n must be >= 64");
  if (trials < kMinTrials) throw std::invalid_argument("time_forward: trials must be >= 5");

  std::mt19937_64 rng(seed);
  const Matrix x = random_uniform(n, kWidth, -1.0, 1.0, rng);
  TimingStats st;
  st.model = model;
  st.n = n;
  st.trials = trials;

  std::function<Matrix()> pass;
  if (model == "adamra") {
    const AdamraConfig cfg = bench_adamra_config();
    auto params = std::make_shared<AdamraParams>(AdamraParams::init(cfg, rng));
    pass = [&x, cfg, params, seed] { return adamra_forward(x, *params, cfg, seed).output; };
    st.analytic_floats = adamra_cost(cfg, n).peak_floats();
  } else {
    auto params = std::make_shared<MultiHeadParams>(MultiHeadParams::init(kWidth, kHeads, rng));
    const AttentionMode mode = model == "softmax" ? AttentionMode::softmax : AttentionMode::kernel;
    pass = [&x, params, mode] { return multi_head_attention(x, *params, mode); };
    st.analytic_floats = mode == AttentionMode::softmax
                             ? softmax_baseline_cost(kWidth, kHeads, n).peak_floats()
                             : kernel_baseline_cost(kWidth, kHeads, n).peak_floats();
  }

  for (std::size_t w = 0; w < warmup; ++w) (void)pass();
  {
    memory::PeakScope scope;
    (void)pass();
    st.measured_peak_bytes = scope.peak_above_baseline();
  }
  std::vector<double> times;
  times.reserve(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    const auto t0 = std::chrono::steady_clock::now();
    const Matrix out = pass();
    const auto t1 = std::chrono::steady_clock::now();
    if (!out.all_finite()) throw std::runtime_error("time_forward: non-finite output");
    times.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  std::sort(times.begin(), times.end());
  st.min_s = times.front();
  st.median_s = trials % 2 ? times[trials / 2]
                           : 0.5 * (times[trials / 2 - 1] + times[trials / 2]);
  return st;
}

ScalingFit scaling_fit(const std::vector<std::pair<double, double>>& series) {
  if (series.size() < 4) throw std::invalid_argument("scaling_fit: need at least 4 points");
  double lo = series.front().first;
  double hi = lo;
  for (const auto& [n, t] : series) {
    if (!(n > 0.0) || !(t > 0.0)) {
      throw std::invalid_argument("scaling_fit: lengths and times must be positive");
    }
    lo = std::min(lo, n);
    hi = std::max(hi, n);
  }
  if (hi / lo < 8.0) throw std::invalid_argument("scaling_fit: n must span at least 8x");

  const double count = static_cast<double>(series.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [n, t] : series) {
    mx += std::log(n);
    my += std::log(t);
  }
  mx /= count;
  my /= count;
  double sxy = 0.0, sxx = 0.0;
  for (const auto& [n, t] : series) {
    const double dx = std::log(n) - mx;
    sxy += dx * (std::log(t) - my);
    sxx += dx * dx;
  }
  ScalingFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  for (const auto& [n, t] : series) {
    fit.residuals.push_back(std::log(t) - (fit.intercept + fit.slope * std::log(n)));
  }
  return fit;
}

void write_timing_csv(std::ostream& out, const std::vector<TimingStats>& rows) {
  out << "model,n,trials,median_s,min_s,analytic_floats\n";
  for (const auto& r : rows) {
    out << r.model << ',' << r.n << ',' << r.trials << ',' << fmt6(r.median_s) << ','
        << fmt6(r.min_s) << ',' << fmt6(r.analytic_floats) << '\n';
  }
}

}  // namespace adamra::bench
