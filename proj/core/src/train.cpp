#include "adamra/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>

namespace adamra {
namespace {

std::vector<Matrix*> blocks_of(ModelParams& p) {
  std::vector<Matrix*> out;
  p.for_each_block([&out](const std::string&, Matrix& m) { out.push_back(&m); });
  return out;
}

std::vector<const Matrix*> blocks_of(const ModelParams& p) {
  std::vector<const Matrix*> out;
  p.for_each_block([&out](const std::string&, const Matrix& m) { out.push_back(&m); });
  return out;
}

std::uint64_t example_seed(std::uint64_t seed, std::size_t step, std::size_t slot) {
  return (seed + 1) * 0xD1B54A32D192ED03ULL + step * 0x9E3779B97F4A7C15ULL + slot;
}

struct BatchResult {
  double loss = 0.0;
  std::size_t correct = 0;
};

// Accumulates the mean-loss gradient of `indices` into grads.
BatchResult run_examples(const ModelParams& p, const ModelConfig& cfg,
                         const tasks::Dataset& data, std::span<const std::size_t> indices,
                         std::size_t step, std::size_t first_slot, double weight,
                         ModelParams& grads) {
  BatchResult r;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const std::size_t idx = indices[k];
    const ModelForward fwd =
        model_forward(p, cfg, data.sequences[idx], example_seed(0, step, first_slot + k));
    if (predict(fwd.logits) == data.labels[idx]) ++r.correct;
    r.loss += model_backward(fwd, p, cfg, data.labels[idx], grads, weight);
  }
  return r;
}

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

AdamOptimizer::AdamOptimizer(const ModelParams& shape, double lr, double beta1, double beta2,
                             double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(shape), v_(shape) {
  for (Matrix* m : blocks_of(m_)) m->fill(0.0);
  for (Matrix* m : blocks_of(v_)) m->fill(0.0);
}

void AdamOptimizer::step(ModelParams& params, const ModelParams& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  auto p = blocks_of(params);
  auto g = blocks_of(grads);
  auto m = blocks_of(m_);
  auto v = blocks_of(v_);
  for (std::size_t b = 0; b < p.size(); ++b) {
    auto pv = p[b]->values();
    auto gv = g[b]->values();
    auto mv = m[b]->values();
    auto vv = v[b]->values();
    for (std::size_t i = 0; i < pv.size(); ++i) {
      mv[i] = beta1_ * mv[i] + (1.0 - beta1_) * gv[i];
      vv[i] = beta2_ * vv[i] + (1.0 - beta2_) * gv[i] * gv[i];
      const double mhat = mv[i] / c1;
      const double vhat = vv[i] / c2;
      pv[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

TrainingDiverged::TrainingDiverged(std::size_t step)
    : std::runtime_error("training diverged: non-finite loss at step " + std::to_string(step)),
      step_(step) {}

Evaluation evaluate(const ModelParams& p, const ModelConfig& cfg, const tasks::Dataset& data) {
  Evaluation ev;
  ev.utilization.assign(cfg.layers, std::vector<double>(cfg.attention.heads, 0.0));
  std::size_t correct = 0;
  double tokens = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const ModelForward fwd = model_forward(p, cfg, data.sequences[i], example_seed(1, 0, i));
    if (predict(fwd.logits) == data.labels[i]) ++correct;
    ev.mean_loss += cross_entropy(fwd.logits, data.labels[i]);
    for (std::size_t l = 0; l < cfg.layers; ++l) {
      for (std::size_t h : fwd.blocks[l].attn.routing.head_of) ev.utilization[l][h] += 1.0;
    }
    tokens += static_cast<double>(data.sequences[i].size());
  }
  if (data.size() > 0) {
    ev.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
    ev.mean_loss /= static_cast<double>(data.size());
    for (auto& layer : ev.utilization) {
      for (double& u : layer) u /= tokens;
    }
  }
  return ev;
}

TrainReport train(const ModelConfig& cfg_in, const tasks::Dataset& train_data,
                  const tasks::Dataset& test_data, const TrainHyper& hyper) {
  if (train_data.size() == 0) throw std::invalid_argument("train: empty training set");
  if (hyper.batch == 0) throw std::invalid_argument("train: batch must be >= 1");
  train_data.check();
  test_data.check();
  ModelConfig cfg = cfg_in;
  cfg.validate();

  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(hyper.seed);
  TrainReport report;
  report.params = ModelParams::init(cfg, rng);
  AdamOptimizer opt(report.params, hyper.lr);
  report.untrained_test_accuracy = evaluate(report.params, cfg, test_data).accuracy;

  const std::size_t threads = std::max<std::size_t>(1, hyper.threads);
  const std::size_t steps_per_epoch = (train_data.size() + hyper.batch - 1) / hyper.batch;
  std::vector<std::size_t> order(train_data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();

  EpochMetrics epoch;
  std::size_t epoch_seen = 0;
  std::size_t epoch_correct = 0;
  std::size_t epoch_steps = 0;
  auto close_epoch = [&](std::size_t step) {
    epoch.last_step = step;
    epoch.loss /= static_cast<double>(epoch_steps);
    epoch.train_accuracy = static_cast<double>(epoch_correct) / static_cast<double>(epoch_seen);
    epoch.test_accuracy = evaluate(report.params, cfg, test_data).accuracy;
    report.epochs.push_back(epoch);
    epoch = EpochMetrics{};
    epoch.epoch = report.epochs.size();
    epoch_seen = epoch_correct = epoch_steps = 0;
  };

  for (std::size_t step = 1; step <= hyper.steps; ++step) {
    std::vector<std::size_t> batch;
    while (batch.size() < hyper.batch) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      batch.push_back(order[cursor++]);
    }
    const double weight = 1.0 / static_cast<double>(batch.size());

    ModelParams grads = ModelParams::zeros(cfg);
    BatchResult total;
    if (threads == 1) {
      total = run_examples(report.params, cfg, train_data, batch, step, 0, weight, grads);
    } else {
      // Fixed contiguous shards summed in shard order keep runs reproducible.
      const std::size_t shards = std::min(threads, batch.size());
      std::vector<ModelParams> shard_grads(shards, grads);
      std::vector<BatchResult> shard_results(shards);
      std::vector<std::thread> workers;
      const std::size_t per = (batch.size() + shards - 1) / shards;
      for (std::size_t s = 0; s < shards; ++s) {
        const std::size_t lo = s * per;
        const std::size_t hi = std::min(batch.size(), lo + per);
        workers.emplace_back([&, s, lo, hi] {
          shard_results[s] = run_examples(report.params, cfg, train_data,
                                          std::span(batch).subspan(lo, hi - lo), step, lo,
                                          weight, shard_grads[s]);
        });
      }
      for (auto& w : workers) w.join();
      auto dst = blocks_of(grads);
      for (std::size_t s = 0; s < shards; ++s) {
        auto src = blocks_of(std::as_const(shard_grads[s]));
        for (std::size_t b = 0; b < dst.size(); ++b) add_inplace(*dst[b], *src[b]);
        total.loss += shard_results[s].loss;
        total.correct += shard_results[s].correct;
      }
    }

    const double loss = total.loss * weight;
    if (!std::isfinite(loss)) throw TrainingDiverged(step);
    opt.step(report.params, grads);

    report.step_losses.push_back(loss);
    epoch.loss += loss;
    epoch_correct += total.correct;
    epoch_seen += batch.size();
    ++epoch_steps;
    if (epoch_steps == steps_per_epoch || step == hyper.steps) close_epoch(step);
  }

  const Evaluation final_eval = evaluate(report.params, cfg, test_data);
  report.final_test_accuracy = final_eval.accuracy;
  report.utilization = final_eval.utilization;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

void write_report(std::ostream& out, const TrainReport& report) {
  out << "steps: " << report.step_losses.size() << '\n'
      << "epochs: " << report.epochs.size() << '\n'
      << "untrained_test_accuracy: " << fmt6(report.untrained_test_accuracy) << '\n'
      << "final_test_accuracy: " << fmt6(report.final_test_accuracy) << '\n'
      << "final_loss: " << fmt6(report.step_losses.empty() ? 0.0 : report.step_losses.back())
      << '\n';
  for (std::size_t l = 0; l < report.utilization.size(); ++l) {
    out << "utilization.layer" << l << ":";
    for (double u : report.utilization[l]) out << ' ' << fmt6(u);
    out << '\n';
  }
  out << "wall_seconds: " << fmt6(report.wall_seconds) << '\n';
}

void write_epoch_csv(std::ostream& out, const TrainReport& report) {
  out << "epoch,last_step,loss,train_acc,test_acc\n";
  for (const auto& e : report.epochs) {
    out << e.epoch << ',' << e.last_step << ',' << fmt6(e.loss) << ',' << fmt6(e.train_accuracy)
        << ',' << fmt6(e.test_accuracy) << '\n';
  }
}

double max_utilization(const TrainReport& report) {
  double best = 0.0;
  for (const auto& layer : report.utilization) {
    for (double u : layer) best = std::max(best, u);
  }
  return best;
}

}  // namespace adamra
