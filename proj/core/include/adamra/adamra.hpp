#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "adamra/attention.hpp"
#include "adamra/config.hpp"
#include "adamra/matrix.hpp"

namespace adamra {

struct SubheadParams {
  Matrix w_q;  // d × d_k
  Matrix w_k;  // d × d_k
  Matrix w_v;  // d × d_v
};

// Learnable weights of one AdaMRA layer, in canonical declaration order:
// full-width Q/K/V projections, router, per-head per-subhead projections,
// output projection.
struct AdamraParams {
  QkvParams qkv;
  Matrix w_router;                                 // d × H
  std::vector<std::vector<SubheadParams>> heads;   // [H][S]
  Matrix w_o;                                      // S·d_v × d

  static AdamraParams zeros(const AdamraConfig& cfg);
  // Every block uniform(±1/sqrt(fan_in)), router included.
  static AdamraParams init(const AdamraConfig& cfg, std::mt19937_64& rng);

  // Throws ShapeError unless every block conforms to cfg.
  void check(const AdamraConfig& cfg) const;

  // Visits (name, block) in declaration order.
  template <class F>
  void for_each_block(F&& f) {
    visit_blocks(*this, f);
  }
  template <class F>
  void for_each_block(F&& f) const {
    visit_blocks(*this, f);
  }

 private:
  template <class Self, class F>
  static void visit_blocks(Self& self, F& f) {
    f(std::string("qkv.w_q"), self.qkv.w_q);
    f(std::string("qkv.w_k"), self.qkv.w_k);
    f(std::string("qkv.w_v"), self.qkv.w_v);
    f(std::string("w_router"), self.w_router);
    for (std::size_t h = 0; h < self.heads.size(); ++h) {
      for (std::size_t s = 0; s < self.heads[h].size(); ++s) {
        const std::string prefix = "head" + std::to_string(h) + ".sub" + std::to_string(s) + ".";
        f(prefix + "w_q", self.heads[h][s].w_q);
        f(prefix + "w_k", self.heads[h][s].w_k);
        f(prefix + "w_v", self.heads[h][s].w_v);
      }
    }
    f(std::string("w_o"), self.w_o);
  }
};

// Number of scalars in AdamraParams; depends only on (d, H, S).
std::size_t parameter_count(const AdamraConfig& cfg);

struct HeadMemory {
  Matrix k_tilde;  // m_h × d
  Matrix v_tilde;  // m_h × d
  std::size_t landmarks = 0;
};

struct CompressedMemory {
  std::vector<HeadMemory> heads;
};

// Segment-mean compression of K and V at each head's rate.
CompressedMemory compress_memory(const Matrix& k, const Matrix& v, const AdamraConfig& cfg);

struct RoutingAssignment {
  Matrix probs;                      // n × H, rows sum to 1
  std::vector<std::size_t> head_of;  // argmax per token, lowest index on ties
  std::vector<double> gate;          // probs(i, head_of[i]); 1 under random routing
};

// Learned: probs = softmax_rows(q·w_router) with top-1 selection. Random:
// heads drawn uniformly from `seed`, probs uniform, gate 1.
RoutingAssignment route(const Matrix& q, const Matrix& w_router, Routing mode,
                        std::uint64_t seed = 0);

struct SubheadTrace {
  Matrix q;    // n_h × d_k
  Matrix k;    // m_h × d_k
  Matrix v;    // m_h × d_v
  Matrix out;  // n_h × d_v
};

struct HeadTrace {
  std::vector<std::size_t> tokens;  // ascending token positions routed here
  Matrix q_routed;                  // n_h × d
  std::vector<SubheadTrace> subheads;
};

// Intermediates retained by the forward pass for adamra_backward.
struct ForwardTrace {
  AdamraConfig cfg;
  Matrix x;
  QkvProjection qkv;
  CompressedMemory memory;
  RoutingAssignment routing;
  std::vector<HeadTrace> heads;
  Matrix mixed;        // n × S·d_v, disjoint scatter of head outputs
  Matrix gated;        // mixed with row i scaled by gate[i]; empty when gating is off
};

struct ForwardResult {
  Matrix output;  // n × d
  ForwardTrace trace;
};

ForwardResult adamra_forward(const Matrix& x, const AdamraParams& p, const AdamraConfig& cfg,
                             std::uint64_t routing_seed = 0);

struct AdamraGradients {
  AdamraParams params;
  Matrix dx;
};

// Exact reverse-mode adjoints of adamra_forward with the top-1 choice held
// fixed. The router only receives gradient through the gate.
AdamraGradients adamra_backward(const ForwardTrace& trace, const AdamraParams& p,
                                const Matrix& upstream);

// Smallest gap between the winning router logit and the runner-up over all
// tokens; +inf when H == 1.
double min_router_margin(const Matrix& q, const Matrix& w_router);

}  // namespace adamra
