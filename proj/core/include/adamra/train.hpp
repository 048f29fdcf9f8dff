#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "adamra/model.hpp"
#include "adamra/tasks.hpp"

namespace adamra {

// Adam with bias correction over every block of a ModelParams.
class AdamOptimizer {
 public:
  AdamOptimizer(const ModelParams& shape, double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);

  void step(ModelParams& params, const ModelParams& grads);
  std::size_t steps_taken() const noexcept { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  ModelParams m_;
  ModelParams v_;
};

struct TrainHyper {
  double lr = 1e-3;
  std::size_t batch = 16;
  std::size_t steps = 2000;
  std::uint64_t seed = 42;
  std::size_t threads = 1;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  std::size_t last_step = 0;
  double loss = 0.0;            // mean training loss over the epoch's steps
  double train_accuracy = 0.0;  // on the batches seen during the epoch
  double test_accuracy = 0.0;
};

struct TrainReport {
  std::vector<EpochMetrics> epochs;
  std::vector<double> step_losses;
  double untrained_test_accuracy = 0.0;
  double final_test_accuracy = 0.0;
  // utilization[layer][head]: fraction of test tokens routed to each head.
  std::vector<std::vector<double>> utilization;
  double wall_seconds = 0.0;
  ModelParams params;
};

class TrainingDiverged : public std::runtime_error {
 public:
  explicit TrainingDiverged(std::size_t step);
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

struct Evaluation {
  double accuracy = 0.0;
  double mean_loss = 0.0;
  std::vector<std::vector<double>> utilization;
};

Evaluation evaluate(const ModelParams& p, const ModelConfig& cfg, const tasks::Dataset& data);

// Mini-batch Adam on mean cross-entropy. One epoch is ceil(train/batch)
// steps; the final partial epoch is reported too. Throws TrainingDiverged
// on a non-finite loss.
TrainReport train(const ModelConfig& cfg, const tasks::Dataset& train_data,
                  const tasks::Dataset& test_data, const TrainHyper& hyper);

// Structured `key: value` text summary (includes wall time).
void write_report(std::ostream& out, const TrainReport& report);
// `epoch,last_step,loss,train_acc,test_acc` with 6 significant digits.
void write_epoch_csv(std::ostream& out, const TrainReport& report);

// Largest per-head utilization over all layers.
double max_utilization(const TrainReport& report);

}  // namespace adamra
