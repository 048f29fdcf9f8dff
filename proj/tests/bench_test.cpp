#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "adamra/bench.hpp"
#include "adamra/smat.hpp"

namespace adamra::bench {
namespace {

std::vector<std::pair<double, double>> power_series(double c, double k) {
  std::vector<std::pair<double, double>> out;
  for (double n : {512.0, 1024.0, 2048.0, 4096.0, 8192.0}) out.emplace_back(n, c * std::pow(n, k));
  return out;
}

TEST(ScalingFit, RecoversExponents) {
  EXPECT_NEAR(scaling_fit(power_series(3e-6, 1.0)).slope, 1.0, 1e-9);
  EXPECT_NEAR(scaling_fit(power_series(2e-9, 2.0)).slope, 2.0, 1e-9);
  const ScalingFit f = scaling_fit(power_series(5.0, 1.5));
  EXPECT_NEAR(f.intercept, std::log(5.0), 1e-9);
  for (double r : f.residuals) EXPECT_NEAR(r, 0.0, 1e-9);
}

TEST(ScalingFit, RejectsThinData) {
  EXPECT_THROW((void)scaling_fit({{1, 1}, {2, 2}, {4, 4}}), std::invalid_argument);
  EXPECT_THROW((void)scaling_fit({{100, 1}, {200, 2}, {300, 3}, {400, 4}}), std::invalid_argument);
  EXPECT_THROW((void)scaling_fit({{64, 1}, {128, 0}, {256, 3}, {512, 4}}), std::invalid_argument);
}

TEST(MinMax, KnownValues) {
  const auto a = minmax_norm({14.5, 200.0, 107.25});
  EXPECT_DOUBLE_EQ(a[0], 0.0);
  EXPECT_DOUBLE_EQ(a[1], 1.0);
  EXPECT_NEAR(a[2], 0.5, 1e-15);
  const auto b = minmax_norm({0.0, 5.0, 10.0});
  EXPECT_EQ(b, (std::vector<double>{0.0, 0.5, 1.0}));
}

TEST(MinMax, Idempotent) {
  const auto once = minmax_norm({3.0, -1.0, 7.5, 2.0});
  EXPECT_EQ(minmax_norm(once), once);
}

TEST(MinMax, Rejects) {
  EXPECT_THROW((void)minmax_norm({1.0}), std::invalid_argument);
  EXPECT_THROW((void)minmax_norm({2.0, 2.0, 2.0}), std::invalid_argument);
}

TEST(Smat, ReferenceFixture) {
  const auto scores = smat(read_smat_csv(ADAMRA_TABLE3_CSV));
  // Expected scores computed by hand from the fixture columns.
  const std::vector<std::pair<std::string, double>> expect = {
      {"Transformer", 0.543},  {"BigBird", 1.436},       {"Reformer", 1.376},
      {"Linformer", 1.605},    {"Linear Transformer", 2.483}, {"Performer-32", 1.676},
      {"Nystromformer-32", 1.540}, {"Ours", 2.761}};
  ASSERT_EQ(scores.size(), expect.size());
  for (std::size_t i = 0; i < expect.size(); ++i) {
    EXPECT_EQ(scores[i].record.model, expect[i].first);
    EXPECT_NEAR(scores[i].smat, expect[i].second, 0.02) << expect[i].first;
  }
}

TEST(Smat, ExtremalRecordScoresThree) {
  const auto s = smat({{"a", 10, 100, 50}, {"b", 20, 50, 60}, {"c", 15, 80, 55}});
  EXPECT_DOUBLE_EQ(s[1].smat, 3.0);
  EXPECT_DOUBLE_EQ(s[0].smat, 0.0);
}

TEST(Smat, TwoRecords) {
  const auto s = smat({{"fast", 2, 2, 1}, {"accurate", 1, 1, 2}});
  EXPECT_DOUBLE_EQ(s[0].smat, 1.0);
  EXPECT_DOUBLE_EQ(s[1].smat, 2.0);
}

TEST(Smat, ShuffleInvariant) {
  auto records = read_smat_csv(ADAMRA_TABLE3_CSV);
  const auto base = smat(records);
  std::mt19937_64 rng(4);
  std::shuffle(records.begin(), records.end(), rng);
  for (const SmatScore& s : smat(records)) {
    const auto it = std::find_if(base.begin(), base.end(), [&](const SmatScore& b) {
      return b.record.model == s.record.model;
    });
    ASSERT_NE(it, base.end());
    EXPECT_DOUBLE_EQ(it->smat, s.smat);
  }
}

TEST(Smat, AffineInvariantPerColumn) {
  auto records = read_smat_csv(ADAMRA_TABLE3_CSV);
  const auto base = smat(records);
  for (SmatRecord& r : records) {
    r.speed = 3.0 * r.speed + 7.0;
    r.mem_mb = 0.001 * r.mem_mb + 2.0;
    r.acc = 0.5 * r.acc;
  }
  const auto moved = smat(records);
  for (std::size_t i = 0; i < base.size(); ++i) EXPECT_NEAR(moved[i].smat, base[i].smat, 1e-12);
}

TEST(Smat, ConstantColumnNamed) {
  try {
    (void)smat({{"a", 1, 5, 50}, {"b", 2, 5, 60}});
    FAIL() << "expected throw";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("mem_mb"), std::string::npos) << e.what();
  }
}

TEST(SmatCsv, ParsesAliasAndReportsBadCells) {
  std::istringstream ok("model,speed,mem,acc\nx,1,2,3\ny,4,5,6\n");
  const auto r = read_smat_csv(ok);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[1].mem_mb, 5.0);
  std::istringstream bad("model,speed,mem_mb,acc\nx,1,abc,3\n");
  try {
    (void)read_smat_csv(bad);
    FAIL() << "expected throw";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("mem_mb"), std::string::npos) << e.what();
  }
  std::istringstream missing("model,speed,acc\nx,1,3\n");
  EXPECT_THROW((void)read_smat_csv(missing), std::invalid_argument);
}

TEST(SmatCsv, WriteHeader) {
  std::ostringstream out;
  write_smat_csv(out, smat({{"a", 1, 1, 1}, {"b", 2, 2, 2}}));
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')),
            "model,speed,mem_mb,acc,s_norm,m_norm,acc_norm,smat");
}

TEST(TimeForward, ValidatesArguments) {
  EXPECT_THROW((void)time_forward("quantum", 128, 5, 1), std::invalid_argument);
  EXPECT_THROW((void)time_forward("adamra", 32, 5, 1), std::invalid_argument);
  EXPECT_THROW((void)time_forward("adamra", 128, 4, 1), std::invalid_argument);
}

TEST(TimeForward, ReportsOrderedStats) {
  for (const std::string& tag : model_tags()) {
    const TimingStats t = time_forward(tag, 128, 5, 3, 1);
    EXPECT_EQ(t.model, tag);
    EXPECT_GT(t.min_s, 0.0);
    EXPECT_LE(t.min_s, t.median_s);
    EXPECT_GT(t.analytic_floats, 0.0);
    EXPECT_GT(t.measured_peak_bytes, 0);
  }
}

}  // namespace
}  // namespace adamra::bench
