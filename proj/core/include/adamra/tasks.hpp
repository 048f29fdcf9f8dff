#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace adamra::tasks {

using Token = int;
using Sequence = std::vector<Token>;

struct Dataset {
  std::vector<Sequence> sequences;
  std::vector<int> labels;
  std::size_t vocab_size = 0;
  std::size_t num_classes = 0;
  std::string split = "train";

  std::size_t size() const noexcept { return sequences.size(); }
  std::size_t seq_len() const noexcept { return sequences.empty() ? 0 : sequences.front().size(); }
  // Throws std::invalid_argument on out-of-range tokens/labels or ragged lengths.
  void check() const;
};

// Binary task over sequences of length n: the second half mirrors the first
// (label 1, intact) or is the mirror with one position replaced by a
// different token (label 0, broken). Classes are exactly balanced.
Dataset gen_copy_task(std::uint64_t seed, std::size_t n, std::size_t vocab, std::size_t examples);

// Miniature ListOps: prefix expressions over MAX/MIN/MED on digits, nested
// at most `depth` levels, right-padded to `length`. Label is the value.
namespace nested {
inline constexpr Token kMax = 10;
inline constexpr Token kMin = 11;
inline constexpr Token kMed = 12;
inline constexpr Token kClose = 13;
inline constexpr Token kPad = 14;
inline constexpr std::size_t kVocab = 15;
inline constexpr std::size_t kClasses = 10;
inline constexpr std::size_t kMaxRetries = 1000;
}  // namespace nested

Dataset gen_nested_ops(std::uint64_t seed, std::size_t depth, std::size_t length,
                       std::size_t examples);

// Recursive evaluator for one padded nested-ops sequence. MED of an even
// count takes the lower median.
int evaluate_nested(std::span<const Token> tokens);

std::string render_nested(std::span<const Token> tokens);

// Splits off the last `test_count` examples as the test split.
std::pair<Dataset, Dataset> split_dataset(Dataset all, std::size_t test_count);

// Line-delimited records: a `# vocab=V classes=C split=S` header, then one
// `label<TAB>tok tok ...` line per example.
void write_dataset(std::ostream& out, const Dataset& ds);
void write_dataset(const std::filesystem::path& path, const Dataset& ds);
Dataset read_dataset(std::istream& in);

}  // namespace adamra::tasks
