#include "adamra/tasks.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stack>

#include <gtest/gtest.h>

namespace adamra::tasks {
namespace {

TEST(CopyTask, Deterministic) {
  const Dataset a = gen_copy_task(9, 16, 5, 200);
  const Dataset b = gen_copy_task(9, 16, 5, 200);
  const Dataset c = gen_copy_task(10, 16, 5, 200);
  EXPECT_EQ(a.sequences, b.sequences);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_NE(a.sequences, c.sequences);
}

TEST(CopyTask, BalancedWithinOnePercent) {
  const Dataset ds = gen_copy_task(42, 64, 8, 10000);
  const auto ones = std::count(ds.labels.begin(), ds.labels.end(), 1);
  EXPECT_NEAR(static_cast<double>(ones) / 10000.0, 0.5, 0.01);
}

TEST(CopyTask, LabelsMatchMirrorStructure) {
  const Dataset ds = gen_copy_task(3, 20, 4, 500);
  ds.check();
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Sequence& s = ds.sequences[i];
    std::size_t mismatches = 0;
    for (std::size_t j = 0; j < 10; ++j) mismatches += s[j] != s[19 - j];
    EXPECT_EQ(mismatches, ds.labels[i] == 1 ? 0u : 1u);
  }
}

TEST(CopyTask, TinyCaseEnumerable) {
  // n=2, vocab=2: intact patterns are exactly {0 0} and {1 1}.
  const Dataset ds = gen_copy_task(1, 2, 2, 400);
  std::set<Sequence> intact;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.labels[i] == 1) intact.insert(ds.sequences[i]);
    else EXPECT_NE(ds.sequences[i][0], ds.sequences[i][1]);
  }
  EXPECT_EQ(intact, (std::set<Sequence>{{0, 0}, {1, 1}}));
}

TEST(CopyTask, RejectsInvalidSizes) {
  EXPECT_THROW((void)gen_copy_task(1, 7, 4, 10), std::invalid_argument);
  EXPECT_THROW((void)gen_copy_task(1, 0, 4, 10), std::invalid_argument);
  EXPECT_THROW((void)gen_copy_task(1, 8, 1, 10), std::invalid_argument);
}

// Independent evaluator: scan right to left with a value stack.
int stack_machine(const Sequence& s) {
  std::stack<std::vector<int>> frames;
  std::vector<int> values;
  std::vector<Token> toks;
  for (Token t : s) {
    if (t != nested::kPad) toks.push_back(t);
  }
  for (auto it = toks.rbegin(); it != toks.rend(); ++it) {
    const Token t = *it;
    if (t == nested::kClose) {
      values.push_back(-1);  // frame marker
    } else if (t <= 9) {
      values.push_back(t);
    } else {
      std::vector<int> args;
      while (values.back() != -1) {
        args.push_back(values.back());
        values.pop_back();
      }
      values.pop_back();
      std::sort(args.begin(), args.end());
      int v = 0;
      if (t == nested::kMax) v = args.back();
      else if (t == nested::kMin) v = args.front();
      else v = args[(args.size() - 1) / 2];
      values.push_back(v);
    }
  }
  EXPECT_EQ(values.size(), 1u);
  return values.back();
}

TEST(NestedOps, AgreesWithStackMachine) {
  const Dataset ds = gen_nested_ops(42, 3, 64, 1000);
  ds.check();
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(ds.labels[i], stack_machine(ds.sequences[i])) << render_nested(ds.sequences[i]);
  }
}

TEST(NestedOps, DepthOneIsSingleOperator) {
  const Dataset ds = gen_nested_ops(5, 1, 32, 200);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Sequence& s = ds.sequences[i];
    ASSERT_GE(s[0], nested::kMax);
    std::vector<int> digits;
    std::size_t j = 1;
    for (; s[j] <= 9; ++j) digits.push_back(s[j]);
    ASSERT_EQ(s[j], nested::kClose);
    std::sort(digits.begin(), digits.end());
    int expect = digits[(digits.size() - 1) / 2];
    if (s[0] == nested::kMax) expect = digits.back();
    if (s[0] == nested::kMin) expect = digits.front();
    EXPECT_EQ(ds.labels[i], expect);
  }
}

TEST(NestedOps, HandWrittenExpression) {
  using namespace nested;
  const Sequence s = {kMax, 3, kMin, 7, 2, kClose, kMed, 1, 9, 4, 5, kClose, kClose, kPad, kPad};
  EXPECT_EQ(evaluate_nested(s), 4);
  EXPECT_EQ(render_nested(s), "[MAX 3 [MIN 7 2 ] [MED 1 9 4 5 ] ]");
}

TEST(NestedOps, Reproducible) {
  EXPECT_EQ(gen_nested_ops(8, 2, 40, 50).sequences, gen_nested_ops(8, 2, 40, 50).sequences);
}

TEST(NestedOps, RejectsImpossibleRequests) {
  EXPECT_THROW((void)gen_nested_ops(1, 0, 32, 1), std::invalid_argument);
  EXPECT_THROW((void)gen_nested_ops(1, 3, 2, 1), std::runtime_error);
}

TEST(Dataset, SplitAndRoundTrip) {
  auto [train, test] = split_dataset(gen_copy_task(2, 8, 3, 50), 10);
  EXPECT_EQ(train.size(), 40u);
  EXPECT_EQ(test.size(), 10u);
  EXPECT_EQ(test.split, "test");
  std::stringstream buf;
  write_dataset(buf, test);
  const Dataset back = read_dataset(buf);
  EXPECT_EQ(back.sequences, test.sequences);
  EXPECT_EQ(back.labels, test.labels);
  EXPECT_EQ(back.vocab_size, 3u);
  EXPECT_EQ(back.split, "test");
  EXPECT_THROW((void)split_dataset(gen_copy_task(2, 8, 3, 5), 5), std::invalid_argument);
}

TEST(Dataset, CheckRejectsBadRecords) {
  std::stringstream missing("0\t1 2\n");
  EXPECT_THROW((void)read_dataset(missing), std::invalid_argument);
  std::stringstream range("# vocab=2 classes=2 split=train\n0\t1 5\n");
  EXPECT_THROW((void)read_dataset(range), std::invalid_argument);
  std::stringstream ragged("# vocab=4 classes=2 split=train\n0\t1 2\n1\t1 2 3\n");
  EXPECT_THROW((void)read_dataset(ragged), std::invalid_argument);
}

}  // namespace
}  // namespace adamra::tasks
