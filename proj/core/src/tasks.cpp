#include "adamra/tasks.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace adamra::tasks {
namespace {

using namespace nested;

struct Cursor {
  std::span<const Token> tokens;
  std::size_t pos = 0;

  Token next() {
    if (pos >= tokens.size()) throw std::invalid_argument("nested expression ends early");
    return tokens[pos++];
  }
};

int eval_at(Cursor& c) {
  const Token t = c.next();
  if (t >= 0 && t <= 9) return t;
  if (t != kMax && t != kMin && t != kMed) {
    throw std::invalid_argument("unexpected token " + std::to_string(t) + " in nested expression");
  }
  std::vector<int> args;
  while (c.pos < c.tokens.size() && c.tokens[c.pos] != kClose) args.push_back(eval_at(c));
  if (c.next() != kClose || args.empty()) {
    throw std::invalid_argument("malformed nested expression");
  }
  if (t == kMax) return *std::max_element(args.begin(), args.end());
  if (t == kMin) return *std::min_element(args.begin(), args.end());
  std::sort(args.begin(), args.end());
  return args[(args.size() - 1) / 2];
}

void emit_expression(std::mt19937_64& rng, std::size_t depth, Sequence& out) {
  std::uniform_int_distribution<int> op(0, 2);
  std::uniform_int_distribution<int> arity(2, 4);
  std::uniform_int_distribution<int> digit(0, 9);
  std::bernoulli_distribution nest(0.35);
  out.push_back(kMax + op(rng));
  const int args = arity(rng);
  for (int a = 0; a < args; ++a) {
    if (depth > 1 && nest(rng)) {
      emit_expression(rng, depth - 1, out);
    } else {
      out.push_back(digit(rng));
    }
  }
  out.push_back(kClose);
}

}  // namespace

void Dataset::check() const {
  if (sequences.size() != labels.size()) {
    throw std::invalid_argument("dataset: sequence and label counts differ");
  }
  const std::size_t len = seq_len();
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    if (sequences[i].size() != len) throw std::invalid_argument("dataset: ragged sequence lengths");
    for (Token t : sequences[i]) {
      if (t < 0 || static_cast<std::size_t>(t) >= vocab_size) {
        throw std::invalid_argument("dataset: token " + std::to_string(t) + " outside vocabulary");
      }
    }
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= num_classes) {
      throw std::invalid_argument("dataset: label " + std::to_string(labels[i]) + " out of range");
    }
  }
}

Dataset gen_copy_task(std::uint64_t seed, std::size_t n, std::size_t vocab, std::size_t examples) {
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("gen_copy_task: n must be even and >= 2");
  if (vocab < 2) throw std::invalid_argument("gen_copy_task: vocab must be >= 2");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Token> token(0, static_cast<Token>(vocab) - 1);
  std::uniform_int_distribution<Token> shift(1, static_cast<Token>(vocab) - 1);
  std::uniform_int_distribution<std::size_t> where(n / 2, n - 1);

  std::vector<int> labels(examples);
  for (std::size_t i = 0; i < examples; ++i) labels[i] = static_cast<int>(i % 2);
  std::shuffle(labels.begin(), labels.end(), rng);

  Dataset ds;
  ds.vocab_size = vocab;
  ds.num_classes = 2;
  ds.labels = labels;
  ds.sequences.reserve(examples);
  for (std::size_t i = 0; i < examples; ++i) {
    Sequence s(n);
    for (std::size_t j = 0; j < n / 2; ++j) s[j] = token(rng);
    for (std::size_t j = 0; j < n / 2; ++j) s[n - 1 - j] = s[j];
    if (labels[i] == 0) {
      const std::size_t p = where(rng);
      s[p] = (s[p] + shift(rng)) % static_cast<Token>(vocab);
    }
    ds.sequences.push_back(std::move(s));
  }
  return ds;
}

Dataset gen_nested_ops(std::uint64_t seed, std::size_t depth, std::size_t length,
                       std::size_t examples) {
  if (depth < 1) throw std::invalid_argument("gen_nested_ops: depth must be >= 1");
  std::mt19937_64 rng(seed);
  Dataset ds;
  ds.vocab_size = kVocab;
  ds.num_classes = kClasses;
  ds.sequences.reserve(examples);
  for (std::size_t i = 0; i < examples; ++i) {
    Sequence s;
    std::size_t tries = 0;
    for (;;) {
      s.clear();
      emit_expression(rng, depth, s);
      if (s.size() <= length) break;
      if (++tries >= kMaxRetries) {
        throw std::runtime_error("gen_nested_ops: no expression of depth " +
                                 std::to_string(depth) + " fits length " +
                                 std::to_string(length));
      }
    }
    s.resize(length, kPad);
    ds.labels.push_back(evaluate_nested(s));
    ds.sequences.push_back(std::move(s));
  }
  return ds;
}

int evaluate_nested(std::span<const Token> tokens) {
  Cursor c{tokens, 0};
  const int value = eval_at(c);
  for (std::size_t i = c.pos; i < tokens.size(); ++i) {
    if (tokens[i] != kPad) throw std::invalid_argument("trailing tokens after nested expression");
  }
  return value;
}

std::string render_nested(std::span<const Token> tokens) {
  std::string out;
  for (Token t : tokens) {
    if (t == kPad) break;
    if (!out.empty()) out += ' ';
    if (t <= 9) out += std::to_string(t);
    else if (t == kMax) out += "[MAX";
    else if (t == kMin) out += "[MIN";
    else if (t == kMed) out += "[MED";
    else out += ']';
  }
  return out;
}

std::pair<Dataset, Dataset> split_dataset(Dataset all, std::size_t test_count) {
  if (test_count >= all.size()) throw std::invalid_argument("split_dataset: test split too large");
  Dataset test;
  test.vocab_size = all.vocab_size;
  test.num_classes = all.num_classes;
  test.split = "test";
  const auto cut = static_cast<std::ptrdiff_t>(all.size() - test_count);
  test.sequences.assign(std::make_move_iterator(all.sequences.begin() + cut),
                        std::make_move_iterator(all.sequences.end()));
  test.labels.assign(all.labels.begin() + cut, all.labels.end());
  all.sequences.resize(static_cast<std::size_t>(cut));
  all.labels.resize(static_cast<std::size_t>(cut));
  all.split = "train";
  return {std::move(all), std::move(test)};
}

void write_dataset(std::ostream& out, const Dataset& ds) {
  out << "# vocab=" << ds.vocab_size << " classes=" << ds.num_classes << " split=" << ds.split
      << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << ds.labels[i] << '\t';
    for (std::size_t j = 0; j < ds.sequences[i].size(); ++j) {
      if (j) out << ' ';
      out << ds.sequences[i][j];
    }
    out << '\n';
  }
}

void write_dataset(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_dataset(out, ds);
}

Dataset read_dataset(std::istream& in) {
  Dataset ds;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) {
    throw std::invalid_argument("dataset: missing header line");
  }
  std::istringstream header(line.substr(2));
  std::string field;
  while (header >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("dataset: bad header field " + field);
    const std::string key = field.substr(0, eq);
    const std::string value = field.substr(eq + 1);
    if (key == "vocab") ds.vocab_size = std::stoul(value);
    else if (key == "classes") ds.num_classes = std::stoul(value);
    else if (key == "split") ds.split = value;
    else throw std::invalid_argument("dataset: unknown header field " + key);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw std::invalid_argument("dataset: record without label");
    ds.labels.push_back(std::stoi(line.substr(0, tab)));
    std::istringstream toks(line.substr(tab + 1));
    Sequence s;
    Token t;
    while (toks >> t) s.push_back(t);
    ds.sequences.push_back(std::move(s));
  }
  ds.check();
  return ds;
}

}  // namespace adamra::tasks
