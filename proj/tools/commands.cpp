#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "adamra/bench.hpp"
#include "adamra/cost_model.hpp"
#include "adamra/smat.hpp"
#include "adamra/train.hpp"
#include "adamra/verify.hpp"

namespace adamra::cli {
namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "adamra.d",      "adamra.heads",   "adamra.subheads",    "adamra.c",
      "adamra.phi",    "adamra.eps",     "adamra.routing",     "adamra.gate_scaling",
      "model.layers",  "model.ffn",      "model.classifier",   "model.positional",
      "train.lr",      "train.batch",    "train.steps",        "task.name",
      "task.n",        "task.vocab",     "task.examples",      "task.test",
      "task.depth",    "bench.trials"};
  return keys;
}

std::size_t get_count(const KeyValueConfig& kv, const std::string& key, std::size_t fallback) {
  if (!kv.contains(key)) return fallback;
  const std::string& text = kv.get(key);
  std::size_t used = 0;
  long long v = -1;
  try {
    v = std::stoll(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || v < 0) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + text + "'");
  }
  return static_cast<std::size_t>(v);
}

double get_real(const KeyValueConfig& kv, const std::string& key, double fallback) {
  if (!kv.contains(key)) return fallback;
  const std::string& text = kv.get(key);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  }
  return v;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << body;
}

// Rates joined by spaces so they fit in one CSV field.
std::string rates_field(const AdamraConfig& cfg) {
  std::string out = cfg.rates_string();
  std::replace(out.begin(), out.end(), ',', ' ');
  return out;
}

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct TrainSetup {
  ModelConfig model;
  TrainHyper hyper;
  std::string task;
  std::size_t n = 64;
  std::size_t vocab = 2;
  std::size_t examples = 10000;
  std::size_t test = 1000;
  std::size_t depth = 3;
};

TrainSetup train_setup(const KeyValueConfig& kv, const TrainArgs& args, std::uint64_t seed) {
  TrainSetup s;
  s.task = args.task.empty() ? kv.get_or("task.name", "copy") : args.task;
  if (s.task != "copy" && s.task != "nested-ops") {
    throw ConfigError("unknown task '" + s.task + "' (expected copy or nested-ops)");
  }
  s.n = get_count(kv, "task.n", 64);
  s.vocab = get_count(kv, "task.vocab", s.vocab);
  s.examples = get_count(kv, "task.examples", s.examples);
  s.test = get_count(kv, "task.test", s.test);
  s.depth = get_count(kv, "task.depth", s.depth);

  s.model.attention = adamra_config_from(kv);
  s.model.d = s.model.attention.d;
  s.model.layers = get_count(kv, "model.layers", s.model.layers);
  s.model.ffn = get_count(kv, "model.ffn", s.model.ffn);
  s.model.classifier = get_count(kv, "model.classifier", s.model.classifier);
  s.model.positional = parse_switch(kv.get_or("model.positional", "on"));
  s.model.max_len = s.n;

  s.hyper.lr = get_real(kv, "train.lr", s.hyper.lr);
  s.hyper.batch = get_count(kv, "train.batch", s.hyper.batch);
  s.hyper.steps = get_count(kv, "train.steps", s.hyper.steps);
  s.hyper.seed = seed;
  s.hyper.threads = args.threads;
  return s;
}

TrainReport run_and_write(const TrainSetup& s, const tasks::Dataset& train_set,
                          const tasks::Dataset& test_set, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "params");
  TrainReport report = train(s.model, train_set, test_set, s.hyper);
  std::ostringstream text;
  text << "task: " << s.task << '\n'
       << "rates: " << s.model.attention.rates_string() << '\n';
  write_report(text, report);
  write_file(dir / "report.txt", text.str());
  std::ostringstream csv;
  write_epoch_csv(csv, report);
  write_file(dir / "metrics.csv", csv.str());
  for (std::size_t l = 0; l < report.params.blocks.size(); ++l) {
    write_params(dir / "params" / ("layer" + std::to_string(l) + ".amra"), s.model.attention,
                 report.params.blocks[l].attn);
  }
  std::cout << "final_test_accuracy " << fmt6(report.final_test_accuracy) << " ("
            << dir.string() << ")\n";
  return report;
}

}  // namespace

KeyValueConfig load_config(const RunConfig& rc) {
  KeyValueConfig kv;
  if (!rc.config_path.empty()) kv = KeyValueConfig::load(rc.config_path);
  for (const auto& a : rc.overrides) kv.set_assignment(a);
  for (const auto& [key, value] : kv.entries()) {
    if (!known_keys().count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  return kv;
}

std::filesystem::path output_dir(const RunConfig& rc) {
  if (!rc.out_dir.empty()) return rc.out_dir;
  if (const char* env = std::getenv("ADAMRA_OUT_DIR"); env && *env) return env;
  return "adamra-out";
}

int cmd_verify(const RunConfig& rc, const VerifyArgs& args) {
  const KeyValueConfig kv = load_config(rc);
  adamra_config_from(kv).validate();
  verify::SuiteOptions opts;
  opts.seeds = args.seeds;
  opts.base_seed = rc.seed;
  opts.fault = verify::parse_fault(args.fault);
  if (opts.seeds == 0) throw ConfigError("--seeds must be >= 1");
  bool ok = true;
  for (const auto& r : verify::run_property_suite(opts)) {
    std::cout << verify::format_result(r) << '\n';
    ok = ok && r.passed;
  }
  std::cout << (ok ? "verify: all properties hold\n" : "verify: FAILED\n");
  return ok ? kExitOk : kExitFailure;
}

int cmd_gradcheck(const RunConfig& rc, const GradcheckArgs& args) {
  const KeyValueConfig kv = load_config(rc);
  verify::GradcheckOptions opts;
  opts.cfg = adamra_config_from(kv, verify::GradcheckOptions::small_config());
  opts.cfg.validate();
  opts.gate_scaling = args.gate_scaling ? parse_switch(*args.gate_scaling) : opts.cfg.gate_scaling;
  opts.h = args.h;
  opts.instances = args.instances;
  opts.base_seed = rc.seed;
  if (!(opts.h > 0.0)) throw ConfigError("--h must be positive");
  const verify::GradcheckResult res = verify::run_gradcheck(opts);

  std::printf("%-28s %12s %12s %12s\n", "block", "rel_error", "analytic", "numeric");
  for (const auto& b : res.blocks) {
    std::printf("%-28s %12.3e %12.3e %12.3e\n", b.name.c_str(), b.rel_error, b.analytic_norm,
                b.numeric_norm);
  }
  std::printf("instances %zu resamples %zu worst_block %.3e max_rel_error %.3e tolerance %.3e %s\n",
              res.instances, res.resamples, res.worst_block_error, res.max_rel_error,
              res.tolerance, res.passed ? "PASS" : "FAIL");
  return res.passed ? kExitOk : kExitFailure;
}

int cmd_bench(const RunConfig& rc, const BenchArgs& args) {
  const KeyValueConfig kv = load_config(rc);
  const std::size_t trials = get_count(kv, "bench.trials", args.trials);
  std::vector<std::size_t> grid;
  for (const auto& item : split_list(args.n_grid)) {
    std::size_t used = 0;
    const unsigned long v = std::stoul(item, &used);
    if (used != item.size()) throw ConfigError("--n-grid: bad length '" + item + "'");
    grid.push_back(v);
  }
  const auto models = split_list(args.models);
  if (grid.empty() || models.empty()) throw ConfigError("empty --n-grid or --models");
  for (const auto& m : models) {
    const auto& tags = bench::model_tags();
    if (std::find(tags.begin(), tags.end(), m) == tags.end()) {
      throw ConfigError("unknown model tag '" + m + "'");
    }
  }

  std::vector<bench::TimingStats> rows;
  std::ostringstream summary;
  for (const auto& m : models) {
    std::vector<std::pair<double, double>> series;
    for (std::size_t n : grid) {
      const auto st = bench::time_forward(m, n, trials, rc.seed);
      std::cerr << m << " n=" << n << " median=" << fmt6(st.median_s) << "s\n";
      series.emplace_back(static_cast<double>(n), st.median_s);
      rows.push_back(st);
    }
    if (series.size() >= 4) {
      const auto fit = bench::scaling_fit(series);
      summary << m << " slope " << fmt6(fit.slope) << " residuals";
      for (double r : fit.residuals) summary << ' ' << fmt6(r);
      summary << '\n';
    } else {
      summary << m << " slope n/a (need 4 lengths spanning 8x)\n";
    }
  }
  const AdamraConfig cfg = bench::bench_adamra_config();
  for (std::size_t n : grid) {
    summary << "memory_ratio n=" << n << ' '
            << fmt6(flop_and_memory_model(cfg, n).memory_ratio()) << '\n';
  }

  const auto dir = output_dir(rc);
  std::filesystem::create_directories(dir);
  std::ostringstream csv;
  bench::write_timing_csv(csv, rows);
  write_file(dir / "timings.csv", csv.str());
  write_file(dir / "scaling.txt", summary.str());
  std::cout << csv.str() << summary.str();
  return kExitOk;
}

int cmd_smat(const RunConfig& rc, const SmatArgs& args) {
  load_config(rc);
  if (args.input.empty()) throw ConfigError("smat: input CSV required");
  const auto scores = bench::smat(bench::read_smat_csv(std::filesystem::path(args.input)));
  std::ostringstream csv;
  bench::write_smat_csv(csv, scores);
  const auto dir = output_dir(rc);
  std::filesystem::create_directories(dir);
  write_file(dir / "smat.csv", csv.str());
  std::cout << csv.str();
  return kExitOk;
}

int cmd_train(const RunConfig& rc, const TrainArgs& args) {
  const KeyValueConfig kv = load_config(rc);
  TrainSetup s = train_setup(kv, args, rc.seed);

  tasks::Dataset all = s.task == "copy"
                           ? tasks::gen_copy_task(rc.seed, s.n, s.vocab, s.examples)
                           : tasks::gen_nested_ops(rc.seed, s.depth, s.n, s.examples);
  s.model.vocab_size = all.vocab_size;
  s.model.num_classes = all.num_classes;
  s.model.validate();
  auto [train_set, test_set] = tasks::split_dataset(std::move(all), s.test);

  const auto dir = output_dir(rc);
  std::filesystem::create_directories(dir);
  if (args.dump_dataset) {
    tasks::write_dataset(dir / "train.tsv", train_set);
    tasks::write_dataset(dir / "test.tsv", test_set);
  }
  write_file(dir / "config.txt", to_config_text(s.model.attention));

  const TrainReport multi = run_and_write(s, train_set, test_set, dir);
  if (!args.single_resolution) return kExitOk;

  TrainSetup control = s;
  const Rational rate = args.single_rate.empty() ? s.model.attention.rates.front()
                                                 : Rational::parse(args.single_rate);
  control.model.attention.rates.assign(s.model.attention.heads, rate);
  control.model.validate();
  const TrainReport single = run_and_write(control, train_set, test_set, dir / "single");

  std::ostringstream cmp;
  cmp << "model,rates,final_test_accuracy\n"
      << "multi_resolution," << rates_field(s.model.attention) << ','
      << fmt6(multi.final_test_accuracy) << '\n'
      << "single_resolution," << rates_field(control.model.attention) << ','
      << fmt6(single.final_test_accuracy) << '\n';
  write_file(dir / "comparison.csv", cmp.str());
  std::cout << cmp.str();
  return kExitOk;
}

}  // namespace adamra::cli
