#include "adamra/adamra.hpp"

#include <algorithm>
#include <limits>

namespace adamra {
namespace {

void require_block(const std::string& name, const Matrix& m, std::size_t rows,
                   std::size_t cols) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ShapeError("AdamraParams: " + name + " is " + shape_string(m) + ", expected " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
}

Matrix attend(const SubheadTrace& t, const AdamraConfig& cfg) {
  if (cfg.phi == FeatureMap::softmax) return softmax_attention(t.q, t.k, t.v);
  return kernel_attention(t.q, t.k, t.v, cfg.phi, cfg.eps);
}

AttentionGrads attend_backward(const SubheadTrace& t, const AdamraConfig& cfg,
                               const Matrix& upstream) {
  if (cfg.phi == FeatureMap::softmax) {
    return softmax_attention_backward(t.q, t.k, t.v, default_softmax_scale(t.q.cols()),
                                      upstream);
  }
  return kernel_attention_backward(t.q, t.k, t.v, cfg.phi, cfg.eps, upstream);
}

}  // namespace

AdamraParams AdamraParams::zeros(const AdamraConfig& cfg) {
  cfg.validate();
  const std::size_t d = cfg.d;
  const std::size_t dk = cfg.head_dim();
  AdamraParams p;
  p.qkv = {Matrix(d, d), Matrix(d, d), Matrix(d, d)};
  p.w_router = Matrix(d, cfg.heads);
  p.heads.assign(cfg.heads, std::vector<SubheadParams>(cfg.subheads));
  for (auto& head : p.heads) {
    for (auto& sub : head) sub = {Matrix(d, dk), Matrix(d, dk), Matrix(d, dk)};
  }
  p.w_o = Matrix(cfg.subheads * dk, d);
  return p;
}

AdamraParams AdamraParams::init(const AdamraConfig& cfg, std::mt19937_64& rng) {
  AdamraParams p = zeros(cfg);
  p.for_each_block([&rng](const std::string&, Matrix& m) {
    m = init_weight(m.rows(), m.cols(), rng);
  });
  return p;
}

void AdamraParams::check(const AdamraConfig& cfg) const {
  const std::size_t d = cfg.d;
  const std::size_t dk = cfg.head_dim();
  require_block("qkv.w_q", qkv.w_q, d, d);
  require_block("qkv.w_k", qkv.w_k, d, d);
  require_block("qkv.w_v", qkv.w_v, d, d);
  require_block("w_router", w_router, d, cfg.heads);
  if (heads.size() != cfg.heads) {
    throw ShapeError("AdamraParams: " + std::to_string(heads.size()) +
                     " head blocks for H=" + std::to_string(cfg.heads));
  }
  for (const auto& head : heads) {
    if (head.size() != cfg.subheads) {
      throw ShapeError("AdamraParams: " + std::to_string(head.size()) +
                       " subhead blocks for S=" + std::to_string(cfg.subheads));
    }
    for (const auto& sub : head) {
      require_block("subhead w_q", sub.w_q, d, dk);
      require_block("subhead w_k", sub.w_k, d, dk);
      require_block("subhead w_v", sub.w_v, d, dk);
    }
  }
  require_block("w_o", w_o, cfg.subheads * dk, d);
}

std::size_t parameter_count(const AdamraConfig& cfg) {
  const std::size_t d = cfg.d;
  const std::size_t dk = d / cfg.subheads;
  return 3 * d * d + d * cfg.heads + cfg.heads * cfg.subheads * 3 * d * dk +
         cfg.subheads * dk * d;
}

CompressedMemory compress_memory(const Matrix& k, const Matrix& v, const AdamraConfig& cfg) {
  cfg.validate();
  if (k.rows() != v.rows() || k.rows() == 0) {
    throw ShapeError("compress_memory: keys " + shape_string(k) + " and values " +
                     shape_string(v) + " need the same nonzero row count");
  }
  CompressedMemory mem;
  mem.heads.reserve(cfg.heads);
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    const std::size_t m = std::min(cfg.landmarks(h, k.rows()), k.rows());
    mem.heads.push_back({segment_mean(k, m), segment_mean(v, m), m});
  }
  return mem;
}

RoutingAssignment route(const Matrix& q, const Matrix& w_router, Routing mode,
                        std::uint64_t seed) {
  if (q.cols() != w_router.rows()) {
    throw ShapeError("route: queries " + shape_string(q) + " vs router " +
                     shape_string(w_router));
  }
  const std::size_t n = q.rows();
  const std::size_t heads = w_router.cols();
  if (heads == 0) throw ShapeError("route: router has no heads");
  RoutingAssignment r;
  r.head_of.resize(n);
  r.gate.resize(n);

  if (mode == Routing::random) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, heads - 1);
    r.probs = Matrix(n, heads, 1.0 / static_cast<double>(heads));
    for (std::size_t i = 0; i < n; ++i) {
      r.head_of[i] = pick(rng);
      r.gate[i] = 1.0;
    }
    return r;
  }

  r.probs = softmax_rows(matmul(q, w_router));
  for (std::size_t i = 0; i < n; ++i) {
    auto row = r.probs.row(i);
    // max_element returns the first maximum, giving the lowest-index tie-break.
    const auto best = std::max_element(row.begin(), row.end());
    r.head_of[i] = static_cast<std::size_t>(best - row.begin());
    r.gate[i] = *best;
  }
  return r;
}

ForwardResult adamra_forward(const Matrix& x, const AdamraParams& p, const AdamraConfig& cfg,
                             std::uint64_t routing_seed) {
  cfg.validate();
  p.check(cfg);
  if (x.rows() < 1) throw ShapeError("adamra_forward: empty sequence");
  if (x.cols() != cfg.d) {
    throw ShapeError("adamra_forward: input " + shape_string(x) + " for d=" +
                     std::to_string(cfg.d));
  }
  require_finite(x, "adamra_forward");

  const std::size_t n = x.rows();
  const std::size_t dv = cfg.head_dim();
  ForwardResult result;
  ForwardTrace& t = result.trace;
  t.cfg = cfg;
  t.x = x;
  t.qkv = project_qkv(x, p.qkv);
  t.memory = compress_memory(t.qkv.k, t.qkv.v, cfg);
  t.routing = route(t.qkv.q, p.w_router, cfg.routing, routing_seed);

  t.heads.resize(cfg.heads);
  for (std::size_t i = 0; i < n; ++i) t.heads[t.routing.head_of[i]].tokens.push_back(i);

  t.mixed = Matrix(n, cfg.subheads * dv);
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    HeadTrace& head = t.heads[h];
    if (head.tokens.empty()) continue;
    const HeadMemory& mem = t.memory.heads[h];
    head.q_routed = gather_rows(t.qkv.q, head.tokens);
    head.subheads.resize(cfg.subheads);
    std::vector<Matrix> outs;
    outs.reserve(cfg.subheads);
    for (std::size_t s = 0; s < cfg.subheads; ++s) {
      const SubheadParams& w = p.heads[h][s];
      SubheadTrace& sub = head.subheads[s];
      sub.q = matmul(head.q_routed, w.w_q);
      sub.k = matmul(mem.k_tilde, w.w_k);
      sub.v = matmul(mem.v_tilde, w.w_v);
      sub.out = attend(sub, cfg);
      outs.push_back(sub.out);
    }
    scatter_add_rows(t.mixed, concat_cols(outs), head.tokens);
  }

  if (cfg.gate_scaling) {
    t.gated = t.mixed;
    for (std::size_t i = 0; i < n; ++i) {
      for (double& v : t.gated.row(i)) v *= t.routing.gate[i];
    }
  }
  result.output = matmul(cfg.gate_scaling ? t.gated : t.mixed, p.w_o);
  return result;
}

AdamraGradients adamra_backward(const ForwardTrace& t, const AdamraParams& p,
                                const Matrix& upstream) {
  const AdamraConfig& cfg = t.cfg;
  p.check(cfg);
  const std::size_t n = t.x.rows();
  if (upstream.rows() != n || upstream.cols() != cfg.d) {
    throw ShapeError("adamra_backward: upstream " + shape_string(upstream) +
                     " vs output " + std::to_string(n) + "x" + std::to_string(cfg.d));
  }
  const std::size_t dv = cfg.head_dim();

  AdamraGradients g{AdamraParams::zeros(cfg), Matrix()};
  const Matrix& mixed_out = cfg.gate_scaling ? t.gated : t.mixed;
  g.params.w_o = matmul_tn(mixed_out, upstream);
  Matrix d_mixed = matmul_nt(upstream, p.w_o);

  std::vector<double> d_gate(n, 0.0);
  if (cfg.gate_scaling) {
    for (std::size_t i = 0; i < n; ++i) {
      auto row = d_mixed.row(i);
      auto pre = t.mixed.row(i);
      double acc = 0.0;
      for (std::size_t j = 0; j < row.size(); ++j) {
        acc += row[j] * pre[j];
        row[j] *= t.routing.gate[i];
      }
      d_gate[i] = acc;
    }
  }

  Matrix dq(n, cfg.d);
  Matrix dk(n, cfg.d);
  Matrix dv_full(n, cfg.d);
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    const HeadTrace& head = t.heads[h];
    if (head.tokens.empty()) continue;
    const HeadMemory& mem = t.memory.heads[h];
    const Matrix d_concat = gather_rows(d_mixed, head.tokens);
    Matrix dq_head(head.tokens.size(), cfg.d);
    Matrix dk_tilde(mem.landmarks, cfg.d);
    Matrix dv_tilde(mem.landmarks, cfg.d);
    for (std::size_t s = 0; s < cfg.subheads; ++s) {
      const SubheadParams& w = p.heads[h][s];
      SubheadParams& gw = g.params.heads[h][s];
      const AttentionGrads ga =
          attend_backward(head.subheads[s], cfg, slice_cols(d_concat, s * dv, dv));
      gw.w_q = matmul_tn(head.q_routed, ga.dq);
      gw.w_k = matmul_tn(mem.k_tilde, ga.dk);
      gw.w_v = matmul_tn(mem.v_tilde, ga.dv);
      add_inplace(dq_head, matmul_nt(ga.dq, w.w_q));
      add_inplace(dk_tilde, matmul_nt(ga.dk, w.w_k));
      add_inplace(dv_tilde, matmul_nt(ga.dv, w.w_v));
    }
    scatter_add_rows(dq, dq_head, head.tokens);
    add_inplace(dk, segment_mean_backward(dk_tilde, n));
    add_inplace(dv_full, segment_mean_backward(dv_tilde, n));
  }

  if (cfg.gate_scaling && cfg.routing == Routing::learned) {
    // gate_i = probs(i, head_of[i]); softmax Jacobian maps it back to logits.
    const Matrix& probs = t.routing.probs;
    Matrix d_logits(n, cfg.heads);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t win = t.routing.head_of[i];
      const double pw = probs(i, win);
      for (std::size_t j = 0; j < cfg.heads; ++j) {
        const double indicator = j == win ? 1.0 : 0.0;
        d_logits(i, j) = d_gate[i] * pw * (indicator - probs(i, j));
      }
    }
    g.params.w_router = matmul_tn(t.qkv.q, d_logits);
    add_inplace(dq, matmul_nt(d_logits, p.w_router));
  }

  g.params.qkv.w_q = matmul_tn(t.x, dq);
  g.params.qkv.w_k = matmul_tn(t.x, dk);
  g.params.qkv.w_v = matmul_tn(t.x, dv_full);
  g.dx = matmul_nt(dq, p.qkv.w_q);
  add_inplace(g.dx, matmul_nt(dk, p.qkv.w_k));
  add_inplace(g.dx, matmul_nt(dv_full, p.qkv.w_v));
  return g;
}

double min_router_margin(const Matrix& q, const Matrix& w_router) {
  const Matrix logits = matmul(q, w_router);
  double margin = std::numeric_limits<double>::infinity();
  if (logits.cols() < 2) return margin;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    std::vector<double> row(logits.row(i).begin(), logits.row(i).end());
    std::partial_sort(row.begin(), row.begin() + 2, row.end(), std::greater<>{});
    margin = std::min(margin, row[0] - row[1]);
  }
  return margin;
}

}  // namespace adamra
