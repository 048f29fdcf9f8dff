#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "adamra/adamra.hpp"
#include "adamra/tasks.hpp"

namespace adamra {

// Sequence classifier: token (+ learned positional) embeddings, `layers`
// pre-norm blocks of AdaMRA and a ReLU feed-forward sublayer with residual
// connections, a final layer norm, mean pooling and a one-hidden-layer head.
struct ModelConfig {
  std::size_t layers = 2;
  std::size_t d = 64;
  std::size_t ffn = 128;
  std::size_t classifier = 64;
  bool positional = true;
  AdamraConfig attention;
  std::size_t vocab_size = 0;
  std::size_t num_classes = 0;
  std::size_t max_len = 0;

  // Throws ConfigError; attention.d must equal d.
  void validate() const;
};

struct LayerNormParams {
  Matrix gamma;  // 1 × d
  Matrix beta;   // 1 × d
};

struct BlockParams {
  LayerNormParams ln1;
  AdamraParams attn;
  LayerNormParams ln2;
  Matrix w1, b1;  // d × ffn, 1 × ffn
  Matrix w2, b2;  // ffn × d, 1 × d
};

struct ModelParams {
  Matrix tok_emb;  // vocab × d
  Matrix pos_emb;  // max_len × d (0 × d when positional embeddings are off)
  std::vector<BlockParams> blocks;
  LayerNormParams ln_f;
  Matrix wc1, bc1;  // d × classifier, 1 × classifier
  Matrix wc2, bc2;  // classifier × classes, 1 × classes

  static ModelParams zeros(const ModelConfig& cfg);
  static ModelParams init(const ModelConfig& cfg, std::mt19937_64& rng);

  template <class F>
  void for_each_block(F&& f) {
    visit(*this, f);
  }
  template <class F>
  void for_each_block(F&& f) const {
    visit(*this, f);
  }

 private:
  template <class Self, class F>
  static void visit(Self& self, F& f) {
    f(std::string("tok_emb"), self.tok_emb);
    f(std::string("pos_emb"), self.pos_emb);
    for (std::size_t l = 0; l < self.blocks.size(); ++l) {
      auto& b = self.blocks[l];
      const std::string p = "layer" + std::to_string(l) + ".";
      f(p + "ln1.gamma", b.ln1.gamma);
      f(p + "ln1.beta", b.ln1.beta);
      b.attn.for_each_block([&](const std::string& name, auto& m) { f(p + "attn." + name, m); });
      f(p + "ln2.gamma", b.ln2.gamma);
      f(p + "ln2.beta", b.ln2.beta);
      f(p + "ffn.w1", b.w1);
      f(p + "ffn.b1", b.b1);
      f(p + "ffn.w2", b.w2);
      f(p + "ffn.b2", b.b2);
    }
    f(std::string("ln_f.gamma"), self.ln_f.gamma);
    f(std::string("ln_f.beta"), self.ln_f.beta);
    f(std::string("head.w1"), self.wc1);
    f(std::string("head.b1"), self.bc1);
    f(std::string("head.w2"), self.wc2);
    f(std::string("head.b2"), self.bc2);
  }
};

struct LayerNormCache {
  Matrix normalized;             // n × d
  std::vector<double> inv_std;   // per row
};

struct BlockCache {
  LayerNormCache ln1;
  ForwardTrace attn;
  LayerNormCache ln2;
  Matrix ffn_in;      // ln2 output
  Matrix hidden_pre;  // before ReLU
  Matrix hidden;
};

struct ModelForward {
  std::vector<BlockCache> blocks;
  std::vector<tasks::Token> tokens;
  LayerNormCache ln_f;
  Matrix pooled;       // 1 × d
  Matrix head_pre;     // 1 × classifier
  Matrix head_hidden;  // 1 × classifier
  Matrix logits;       // 1 × classes
};

ModelForward model_forward(const ModelParams& p, const ModelConfig& cfg,
                           std::span<const tasks::Token> tokens, std::uint64_t routing_seed = 0);

// Cross-entropy of the forward's logits against `label`.
double cross_entropy(const Matrix& logits, int label);

// Accumulates d(cross-entropy)/dθ · weight into `grads` and returns the loss.
double model_backward(const ModelForward& fwd, const ModelParams& p, const ModelConfig& cfg,
                      int label, ModelParams& grads, double weight = 1.0);

int predict(const Matrix& logits);

}  // namespace adamra
