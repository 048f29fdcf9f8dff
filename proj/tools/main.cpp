#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "adamra/config.hpp"
#include "adamra/train.hpp"
#include "commands.hpp"

using namespace adamra::cli;

namespace {

void add_common(CLI::App* sub, RunConfig& rc) {
  sub->add_option("--config", rc.config_path, "key = value config file")->check(CLI::ExistingFile);
  sub->add_option("--set", rc.overrides, "override a config key (key=value), repeatable");
  sub->add_option("--seed", rc.seed, "random seed")->capture_default_str();
  sub->add_option("--out", rc.out_dir, "output directory (default $ADAMRA_OUT_DIR or adamra-out)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AdaMRA reference implementation: verification, gradients, benchmarks, training"};
  app.require_subcommand(1);

  RunConfig rc;

  VerifyArgs verify_args;
  auto* verify = app.add_subcommand("verify", "run the oracle and invariant property suite");
  add_common(verify, rc);
  verify->add_option("--seeds", verify_args.seeds, "random instances per property")
      ->capture_default_str();
  verify->add_option("--fault", verify_args.fault, "inject a fault: drop-eps");

  GradcheckArgs grad_args;
  auto* grad = app.add_subcommand("gradcheck", "compare manual gradients with finite differences");
  grad->set_help_flag("--help", "print this help message and exit");
  add_common(grad, rc);
  grad->add_option("--h", grad_args.h, "central-difference step")->capture_default_str();
  grad->add_option("--instances", grad_args.instances, "seeded layer instances")
      ->capture_default_str();
  grad->add_option("--gate-scaling", grad_args.gate_scaling, "on|off");

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "time forward passes over a grid of lengths");
  add_common(bench, rc);
  bench->add_option("--n-grid", bench_args.n_grid, "comma-separated lengths")
      ->capture_default_str();
  bench->add_option("--models", bench_args.models, "subset of softmax,kernel,adamra")
      ->capture_default_str();
  bench->add_option("--trials", bench_args.trials, "timed passes per point (>= 5)")
      ->capture_default_str();

  SmatArgs smat_args;
  auto* smat = app.add_subcommand("smat", "score model,speed,mem_mb,acc rows");
  add_common(smat, rc);
  smat->add_option("input", smat_args.input, "input CSV")->required()->check(CLI::ExistingFile);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "train the classifier on a synthetic task");
  add_common(train, rc);
  train->add_option("--task", train_args.task, "copy|nested-ops");
  train->add_flag("--single-resolution", train_args.single_resolution,
                  "also train a control with every head at one rate and compare");
  train->add_option("--single-rate", train_args.single_rate,
                    "rate for the control (default: first configured rate)");
  train->add_flag("--dump-dataset", train_args.dump_dataset, "write train.tsv and test.tsv");
  train->add_option("--threads", train_args.threads, "worker threads per batch")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*verify) return cmd_verify(rc, verify_args);
    if (*grad) return cmd_gradcheck(rc, grad_args);
    if (*bench) return cmd_bench(rc, bench_args);
    if (*smat) return cmd_smat(rc, smat_args);
    return cmd_train(rc, train_args);
  } catch (const adamra::TrainingDiverged& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}
