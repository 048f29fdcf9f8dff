#include "adamra/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <stdexcept>

#include "adamra/attention.hpp"
#include "adamra/cost_model.hpp"
#include "adamra/oracles.hpp"

namespace adamra::verify {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t instance_seed(std::uint64_t base, std::size_t i) { return base + kGolden * (i + 1); }

std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// Records the first failing seed and the worst error.
struct Tracker {
  PropertyResult r;

  explicit Tracker(std::string name) { r.name = std::move(name); }

  void observe(double err, double tol, std::uint64_t seed, const std::string& what = "") {
    ++r.instances;
    if (std::isnan(err) || err > r.worst) r.worst = std::isnan(err) ? err : std::max(r.worst, err);
    if (!(err <= tol) && r.passed) fail(seed, what);
  }
  void require(bool ok, std::uint64_t seed, const std::string& what) {
    ++r.instances;
    if (!ok && r.passed) fail(seed, what);
  }
  void fail(std::uint64_t seed, const std::string& what) {
    r.passed = false;
    r.counterexample_seed = seed;
    r.detail = what;
  }
};

Matrix kernel_under_fault(const Matrix& q, const Matrix& k, const Matrix& v, FeatureMap phi,
                          Fault fault) {
  if (fault == Fault::drop_eps) return detail::kernel_attention_unchecked(q, k, v, phi, 0.0);
  return kernel_attention(q, k, v, phi);
}

const std::vector<Rational>& rate_pool() {
  static const std::vector<Rational> pool{Rational::make(1, 1), Rational::make(1, 2),
                                          Rational::make(1, 3), Rational::make(1, 4),
                                          Rational::make(2, 3), Rational::make(1, 8)};
  return pool;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

Fault parse_fault(const std::string& text) {
  if (text == "none" || text.empty()) return Fault::none;
  if (text == "drop-eps") return Fault::drop_eps;
  throw std::invalid_argument("unknown fault '" + text + "' (expected drop-eps)");
}

std::string format_result(const PropertyResult& r) {
  std::string line = (r.passed ? "PASS " : "FAIL ") + r.name +
                     " instances=" + std::to_string(r.instances);
  if (r.worst != 0.0) line += " worst=" + fmt(r.worst);
  if (r.counterexample_seed) line += " seed=" + std::to_string(*r.counterexample_seed);
  if (!r.detail.empty()) line += " (" + r.detail + ")";
  return line;
}

PropertyResult check_linearization(std::size_t seeds, std::uint64_t base_seed, Fault fault) {
  Tracker t("linearization");
  for (std::size_t i = 0; i < seeds; ++i) {
    const std::uint64_t seed = instance_seed(base_seed, i);
    std::mt19937_64 rng(seed);
    const std::size_t nq = pick(rng, 1, 32);
    const std::size_t nk = pick(rng, 1, 32);
    const std::size_t dk = pick(rng, 1, 8);
    const std::size_t dv = pick(rng, 1, 8);
    const Matrix q = random_uniform(nq, dk, -1.0, 1.0, rng);
    const Matrix k = random_uniform(nk, dk, -1.0, 1.0, rng);
    const Matrix v = random_uniform(nk, dv, -1.0, 1.0, rng);
    for (FeatureMap phi : {FeatureMap::relu, FeatureMap::elu_plus_one}) {
      const Matrix got = kernel_under_fault(q, k, v, phi, fault);
      const Matrix want = oracles::quadratic_kernel_attention(q, k, v, phi, kDefaultKernelEps);
      t.observe(relative_error(got, want), 1e-10, seed, "phi=" + std::string(to_string(phi)));
    }
  }
  return t.r;
}

PropertyResult check_zero_feature_denominator(std::uint64_t base_seed, Fault fault) {
  Tracker t("zero-feature-denominator");
  std::mt19937_64 rng(base_seed);
  const Matrix k = random_uniform(6, 4, -1.0, 1.0, rng);
  const Matrix v = random_uniform(6, 3, -1.0, 1.0, rng);
  Matrix q = random_uniform(3, 4, -1.0, 0.0, rng);  // φ(q) = 0 for every row
  q(1, 2) = 0.0;
  const Matrix out = kernel_under_fault(q, k, v, FeatureMap::relu, fault);
  bool ok = out.all_finite();
  for (double x : out.values()) ok = ok && x == 0.0;
  t.require(ok, base_seed, ok ? "" : "zero-feature query did not produce a finite zero row");
  return t.r;
}

PropertyResult check_softmax_degenerate(std::size_t seeds, std::uint64_t base_seed) {
  Tracker t("softmax-degenerate");
  for (std::size_t i = 0; i < seeds; ++i) {
    const std::uint64_t seed = instance_seed(base_seed, i);
    std::mt19937_64 rng(seed);
    const std::size_t n = pick(rng, 1, 16);
    const std::size_t dk = pick(rng, 1, 8);
    const std::size_t dv = pick(rng, 1, 8);
    const Matrix q = random_uniform(n, dk, -2.0, 2.0, rng);
    const Matrix k1 = random_uniform(1, dk, -2.0, 2.0, rng);
    const Matrix v1 = random_uniform(1, dv, -2.0, 2.0, rng);
    const Matrix single = softmax_attention(q, k1, v1);
    Matrix expect(n, dv);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < dv; ++c) expect(r, c) = v1(0, c);
    }
    t.observe(relative_error(single, expect), 1e-12, seed, "single key");

    // q = 0 makes every score equal: the output is the plain mean of v.
    const std::size_t m = pick(rng, 1, 16);
    const Matrix k = random_uniform(m, dk, -2.0, 2.0, rng);
    const Matrix v = random_uniform(m, dv, -2.0, 2.0, rng);
    const Matrix uniform = softmax_attention(Matrix(n, dk, 0.0), k, v);
    Matrix mean(n, dv, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < dv; ++c) {
        for (std::size_t j = 0; j < m; ++j) mean(r, c) += v(j, c);
        mean(r, c) /= static_cast<double>(m);
      }
    }
    t.observe(relative_error(uniform, mean), 1e-12, seed, "uniform scores");
  }
  return t.r;
}

PropertyResult check_adamra_oracle(std::size_t seeds, std::uint64_t base_seed) {
  Tracker t("adamra-oracle");
  const auto& pool = rate_pool();
  const FeatureMap maps[] = {FeatureMap::relu, FeatureMap::elu_plus_one, FeatureMap::softmax};
  for (std::size_t i = 0; i < seeds; ++i) {
    const std::uint64_t seed = instance_seed(base_seed, i);
    std::mt19937_64 rng(seed);
    AdamraConfig cfg;
    cfg.subheads = pick(rng, 1, 2);
    cfg.d = cfg.subheads * pick(rng, 1, 8 / cfg.subheads);
    cfg.heads = pick(rng, 1, 3);
    cfg.rates.clear();
    for (std::size_t h = 0; h < cfg.heads; ++h) cfg.rates.push_back(pool[pick(rng, 0, pool.size() - 1)]);
    cfg.phi = maps[i % 3];
    cfg.gate_scaling = (i / 3) % 2 == 0;
    const std::size_t n = pick(rng, 1, 16);
    const AdamraParams p = AdamraParams::init(cfg, rng);
    const Matrix x = random_uniform(n, cfg.d, -1.0, 1.0, rng);
    const Matrix got = adamra_forward(x, p, cfg).output;
    const Matrix want = oracles::adamra_oracle(x, p, cfg);
    t.observe(relative_error(got, want), 1e-10, seed,
              "n=" + std::to_string(n) + " d=" + std::to_string(cfg.d) + " H=" +
                  std::to_string(cfg.heads) + " S=" + std::to_string(cfg.subheads));
  }
  return t.r;
}

PropertyResult check_collapse(std::size_t seeds, std::uint64_t base_seed) {
  Tracker t("collapse-identity");
  for (std::size_t i = 0; i < seeds; ++i) {
    const std::uint64_t seed = instance_seed(base_seed, i);
    std::mt19937_64 rng(seed);
    AdamraConfig cfg;
    cfg.d = pick(rng, 1, 8);
    cfg.heads = 1;
    cfg.subheads = 1;
    cfg.rates = {Rational::make(1, 1)};
    cfg.phi = i % 2 ? FeatureMap::elu_plus_one : FeatureMap::relu;
    const std::size_t n = pick(rng, 1, 32);
    AdamraParams p = AdamraParams::init(cfg, rng);
    const Matrix id = Matrix::identity(cfg.d);
    p.qkv = {id, id, id};
    p.heads[0][0] = {id, id, id};
    p.w_o = id;
    const Matrix x = random_uniform(n, cfg.d, -1.0, 1.0, rng);
    const Matrix got = adamra_forward(x, p, cfg).output;
    const Matrix want = kernel_attention(x, x, x, cfg.phi, cfg.eps);
    t.observe(relative_error(got, want), 1e-12, seed);
  }
  return t.r;
}

PropertyResult check_routing(std::size_t instances, std::uint64_t base_seed) {
  Tracker t("routing-invariants");
  for (std::size_t i = 0; i < instances; ++i) {
    const std::uint64_t seed = instance_seed(base_seed, i);
    std::mt19937_64 rng(seed);
    const std::size_t n = pick(rng, 1, 32);
    const std::size_t d = pick(rng, 1, 8);
    const std::size_t H = pick(rng, 1, 4);
    const Matrix q = random_uniform(n, d, -2.0, 2.0, rng);
    Matrix w = random_uniform(d, H, -2.0, 2.0, rng);
    if (H >= 2 && i % 4 == 3) {
      // Duplicate a column so its twin ties; the lower index must win.
      const std::size_t lo = pick(rng, 0, H - 2);
      const std::size_t hi = pick(rng, lo + 1, H - 1);
      for (std::size_t r = 0; r < d; ++r) w(r, hi) = w(r, lo);
    }
    if (i % 50 == 7) w.fill(0.0);
    const RoutingAssignment a = route(q, w, Routing::learned);

    // Row-stochastic probabilities.
    bool stochastic = a.probs.rows() == n && a.probs.cols() == H;
    for (std::size_t r = 0; stochastic && r < n; ++r) {
      double total = 0.0;
      for (std::size_t h = 0; h < H; ++h) {
        const double pr = a.probs(r, h);
        stochastic = stochastic && pr >= 0.0 && pr <= 1.0;
        total += pr;
      }
      stochastic = stochastic && std::abs(total - 1.0) <= 1e-12;
    }
    t.require(stochastic, seed, "router probabilities not row-stochastic");

    // First maximum of the explicit logits wins.
    bool first_max = a.head_of.size() == n;
    for (std::size_t r = 0; first_max && r < n; ++r) {
      std::vector<double> logit(H, 0.0);
      for (std::size_t h = 0; h < H; ++h) {
        for (std::size_t c = 0; c < d; ++c) logit[h] += q(r, c) * w(c, h);
      }
      std::size_t best = 0;
      for (std::size_t h = 1; h < H; ++h) {
        if (logit[h] > logit[best]) best = h;
      }
      first_max = a.head_of[r] == best && a.gate[r] == a.probs(r, best);
    }
    t.require(first_max, seed, "head_of is not the first argmax");

    // Shifting each row's logits by a constant: append a column of offsets
    // to q and a row of ones to w.
    Matrix q2(n, d + 1);
    Matrix w2(d + 1, H, 1.0);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < d; ++c) q2(r, c) = q(r, c);
      q2(r, d) = std::uniform_real_distribution<double>(-5.0, 5.0)(rng);
    }
    for (std::size_t r = 0; r < d; ++r) {
      for (std::size_t h = 0; h < H; ++h) w2(r, h) = w(r, h);
    }
    const RoutingAssignment shifted = route(q2, w2, Routing::learned);
    t.require(shifted.head_of == a.head_of, seed, "argmax changed under a logit shift");
    t.observe(max_abs_diff(shifted.probs, a.probs), 1e-12, seed, "probs changed under a logit shift");

    // Partition: every token lands in exactly one head's list.
    AdamraConfig cfg;
    cfg.d = d;
    cfg.heads = H;
    cfg.subheads = 1;
    cfg.rates.assign(H, Rational::make(1, 2));
    cfg.routing = i % 5 == 0 ? Routing::random : Routing::learned;
    AdamraParams p = AdamraParams::init(cfg, rng);
    p.w_router = w;
    const Matrix x = random_uniform(n, d, -1.0, 1.0, rng);
    const ForwardResult fr = adamra_forward(x, p, cfg, seed);
    std::vector<int> hits(n, 0);
    for (const auto& head : fr.trace.heads) {
      for (std::size_t tok : head.tokens) ++hits[tok];
    }
    bool partition = true;
    for (std::size_t r = 0; r < n; ++r) {
      partition = partition && hits[r] == 1 && fr.trace.routing.head_of[r] < H;
    }
    t.require(partition, seed, "tokens are not partitioned across heads");
  }
  return t.r;
}

PropertyResult check_compression(std::size_t seeds, std::uint64_t base_seed) {
  Tracker t("compression");
  const auto& pool = rate_pool();
  for (std::size_t i = 0; i < seeds; ++i) {
    const std::uint64_t seed = instance_seed(base_seed, i);
    std::mt19937_64 rng(seed);
    const std::size_t n = pick(rng, 1, 40);
    const std::size_t d = pick(rng, 1, 6);
    AdamraConfig cfg;
    cfg.d = d;
    cfg.subheads = 1;
    cfg.heads = 2;
    cfg.rates = {Rational::make(1, 1), pool[pick(rng, 0, pool.size() - 1)]};
    const Matrix k = random_uniform(n, d, -1.0, 1.0, rng);
    const Matrix v = random_uniform(n, d, -1.0, 1.0, rng);
    const CompressedMemory mem = compress_memory(k, v, cfg);
    t.require(mem.heads[0].k_tilde == k && mem.heads[0].v_tilde == v, seed,
              "rate 1 changed the memory");
    const double rate = static_cast<double>(cfg.rates[1].num) / static_cast<double>(cfg.rates[1].den);
    const std::size_t m = mem.heads[1].landmarks;
    t.require(m == oracles::oracle_landmarks(rate, n) && mem.heads[1].k_tilde.rows() == m, seed,
              "landmark count");
    std::size_t covered = 0;
    bool tiled = true;
    for (std::size_t s = 0; s < m; ++s) {
      const RowRange r = segment_bounds(n, m, s);
      tiled = tiled && r.begin == covered && r.end > r.begin;
      covered = r.end;
    }
    t.require(tiled && covered == n, seed, "segments do not tile the sequence");
  }
  return t.r;
}

PropertyResult check_cost_model() {
  Tracker t("cost-model");
  AdamraConfig cfg;
  cfg.d = 64;
  cfg.heads = 4;
  cfg.subheads = 4;
  cfg.rates = parse_rates("1/4,1/8,1/16,1/32");
  double previous = 0.0;
  for (std::size_t n = 256; n <= 65536; n *= 2) {
    const CostComparison c = flop_and_memory_model(cfg, n);
    t.require(!c.adamra.has_quadratic_term(), n, "AdaMRA cost has an n^2 term");
    t.require(c.softmax_baseline.has_quadratic_term(), n, "softmax cost lacks an n^2 term");
    t.require(!kernel_baseline_cost(64, 4, n).has_quadratic_term(), n,
              "kernel baseline cost has an n^2 term");
    t.require(c.memory_ratio() > previous, n, "memory ratio not increasing");
    previous = c.memory_ratio();
  }
  return t.r;
}

std::vector<PropertyResult> run_property_suite(const SuiteOptions& opts) {
  const std::size_t s = opts.seeds;
  const std::uint64_t b = opts.base_seed;
  return {check_linearization(s, b, opts.fault),
          check_zero_feature_denominator(b, opts.fault),
          check_softmax_degenerate(s, b),
          check_adamra_oracle(s, b),
          check_collapse(s, b),
          check_routing(std::max<std::size_t>(1000, s), b),
          check_compression(s, b),
          check_cost_model()};
}

// ---- gradient check --------------------------------------------------------

double gradcheck_tolerance(double h) {
  const double r = h / 1e-5;
  return 1e-5 * std::max(1.0, r * r);
}

AdamraConfig GradcheckOptions::small_config() {
  AdamraConfig cfg;
  cfg.d = 4;
  cfg.heads = 2;
  cfg.subheads = 2;
  cfg.rates = {Rational::make(1, 1), Rational::make(1, 2)};
  return cfg;
}

GradcheckResult run_gradcheck(const GradcheckOptions& opts) {
  GradcheckResult res;
  res.tolerance = gradcheck_tolerance(opts.h);
  std::map<std::string, diffcheck::BlockError> worst;
  std::vector<std::string> order;
  auto absorb = [&](const std::string& prefix, const std::vector<diffcheck::BlockError>& blocks) {
    for (const auto& b : blocks) {
      const std::string key = prefix + b.name;
      auto it = worst.find(key);
      if (it == worst.end()) {
        order.push_back(key);
        worst[key] = b;
        worst[key].name = key;
      } else if (b.rel_error > it->second.rel_error) {
        it->second = b;
        it->second.name = key;
      }
    }
  };

  AdamraConfig cfg = opts.cfg;
  cfg.gate_scaling = opts.gate_scaling;
  diffcheck::LayerCheckOptions lopts;
  lopts.h = opts.h;
  // Keep every perturbation well clear of ReLU and argmax kinks.
  lopts.feature_margin = std::max(lopts.feature_margin, 3.0 * opts.h);
  lopts.router_margin = std::max(lopts.router_margin, 10.0 * opts.h);
  for (std::size_t i = 0; i < opts.instances; ++i) {
    const auto rep = diffcheck::check_layer_gradients(cfg, opts.n, instance_seed(opts.base_seed, i),
                                                      lopts);
    res.resamples += rep.resamples;
    res.max_rel_error = std::max(res.max_rel_error, rep.total_rel_error);
    absorb("adamra.", rep.blocks);
    ++res.instances;
  }
  for (std::size_t i = 0; i < std::max<std::size_t>(1, opts.instances / 4); ++i) {
    const std::uint64_t seed = instance_seed(opts.base_seed + 1, i);
    const auto take = [&](const std::string& prefix, const diffcheck::AttentionCheckReport& r) {
      res.max_rel_error = std::max(res.max_rel_error, r.total_rel_error);
      absorb(prefix, r.blocks);
    };
    take("kernel_attention.",
         diffcheck::check_kernel_attention_gradients(5, 7, 3, FeatureMap::relu, seed, opts.h));
    take("kernel_attention_elu.",
         diffcheck::check_kernel_attention_gradients(5, 7, 3, FeatureMap::elu_plus_one, seed,
                                                     opts.h));
    take("softmax_attention.", diffcheck::check_softmax_attention_gradients(5, 7, 3, seed, opts.h));
  }
  for (const auto& key : order) {
    res.blocks.push_back(worst[key]);
    res.worst_block_error = std::max(res.worst_block_error, worst[key].rel_error);
  }
  res.passed = res.max_rel_error <= res.tolerance;
  return res;
}

}  // namespace adamra::verify
