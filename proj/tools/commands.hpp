#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "adamra/serialize.hpp"

namespace adamra::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Options shared by every subcommand.
struct RunConfig {
  std::string config_path;
  std::vector<std::string> overrides;  // "dotted.key=value"
  std::uint64_t seed = 42;
  std::string out_dir;                 // empty: $ADAMRA_OUT_DIR, then "adamra-out"
};

// Loads the config file, applies overrides and rejects unknown keys.
KeyValueConfig load_config(const RunConfig& rc);
std::filesystem::path output_dir(const RunConfig& rc);

struct VerifyArgs {
  std::size_t seeds = 100;
  std::string fault = "none";
};
int cmd_verify(const RunConfig& rc, const VerifyArgs& args);

struct GradcheckArgs {
  double h = 1e-5;
  std::size_t instances = 20;
  std::optional<std::string> gate_scaling;
};
int cmd_gradcheck(const RunConfig& rc, const GradcheckArgs& args);

struct BenchArgs {
  std::string n_grid = "512,1024,2048,4096,8192";
  std::string models = "softmax,kernel,adamra";
  std::size_t trials = 5;
};
int cmd_bench(const RunConfig& rc, const BenchArgs& args);

struct SmatArgs {
  std::string input;
};
int cmd_smat(const RunConfig& rc, const SmatArgs& args);

struct TrainArgs {
  std::string task;  // empty: task.name from config, default copy
  bool single_resolution = false;
  std::string single_rate;  // empty: first configured rate
  bool dump_dataset = false;
  std::size_t threads = 1;
};
int cmd_train(const RunConfig& rc, const TrainArgs& args);

}  // namespace adamra::cli
