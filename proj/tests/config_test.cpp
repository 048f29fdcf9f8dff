#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "adamra/config.hpp"
#include "adamra/diffcheck.hpp"
#include "adamra/rational.hpp"
#include "adamra/serialize.hpp"

namespace adamra {
namespace {

TEST(Rational, ParsesFractionsAndDecimals) {
  EXPECT_EQ(Rational::parse("1/4"), (Rational{1, 4}));
  EXPECT_EQ(Rational::parse("2/8"), (Rational{1, 4}));
  EXPECT_EQ(Rational::parse("0.125"), (Rational{1, 8}));
  EXPECT_EQ(Rational::parse(" 1 "), (Rational{1, 1}));
  EXPECT_EQ(Rational::parse("1/3").str(), "1/3");
  EXPECT_THROW((void)Rational::parse("1/0"), std::invalid_argument);
  EXPECT_THROW((void)Rational::parse("abc"), std::invalid_argument);
  EXPECT_THROW((void)Rational::parse(""), std::invalid_argument);
}

TEST(Rational, RoundTimesRoundsHalvesUp) {
  EXPECT_EQ((Rational{1, 4}).round_times(4096), 1024);
  EXPECT_EQ((Rational{1, 3}).round_times(6), 2);
  EXPECT_EQ((Rational{1, 2}).round_times(5), 3);
  EXPECT_EQ((Rational{1, 3}).round_times(4), 1);
  EXPECT_EQ((Rational{2, 3}).round_times(4), 3);
}

TEST(Rational, Ordering) {
  EXPECT_LT((Rational{1, 8}), (Rational{1, 4}));
  EXPECT_GT((Rational{2, 3}), (Rational{1, 2}));
}

TEST(AdamraConfig, DefaultsValidate) {
  AdamraConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.head_dim(), 32u);
  EXPECT_FALSE(cfg.single_resolution());
  EXPECT_TRUE(cfg.gate_scaling);
  EXPECT_EQ(cfg.eps, 1e-6);
}

TEST(AdamraConfig, RejectsViolations) {
  AdamraConfig cfg;
  cfg.d = 63;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = AdamraConfig{};
  cfg.rates.pop_back();
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = AdamraConfig{};
  cfg.rates[0] = Rational{5, 4};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = AdamraConfig{};
  cfg.rates[0] = Rational{0, 1};
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = AdamraConfig{};
  cfg.eps = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = AdamraConfig{};
  cfg.heads = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(AdamraConfig, ParseRates) {
  const auto rates = parse_rates("1/4, 1/8,0.5");
  ASSERT_EQ(rates.size(), 3u);
  EXPECT_EQ(rates[2], (Rational{1, 2}));
  EXPECT_THROW((void)parse_rates(""), ConfigError);
}

TEST(AdamraConfig, SingleResolution) {
  AdamraConfig cfg;
  cfg.rates.assign(4, Rational{1, 8});
  EXPECT_TRUE(cfg.single_resolution());
}

TEST(KeyValueConfig, ParsesCommentsAndOverrides) {
  KeyValueConfig kv = KeyValueConfig::parse(
      "# header\nadamra.d = 16\n\nadamra.heads = 2 # trailing\nadamra.c = 1/2,1/4\n"
      "adamra.d = 32\n");
  EXPECT_EQ(kv.get("adamra.d"), "32");
  kv.set_assignment("adamra.subheads=4");
  const AdamraConfig cfg = adamra_config_from(kv);
  EXPECT_EQ(cfg.d, 32u);
  EXPECT_EQ(cfg.heads, 2u);
  EXPECT_EQ(cfg.subheads, 4u);
  EXPECT_EQ(cfg.rates_string(), "1/2,1/4");
}

TEST(KeyValueConfig, RejectsMalformed) {
  EXPECT_THROW((void)KeyValueConfig::parse("no equals sign\n"), ConfigError);
  KeyValueConfig kv;
  EXPECT_THROW(kv.set_assignment("novalue"), ConfigError);
  EXPECT_THROW((void)kv.get("missing"), ConfigError);
  kv.set("adamra.bogus", "1");
  EXPECT_THROW((void)adamra_config_from(kv), ConfigError);
  KeyValueConfig bad;
  bad.set("adamra.d", "sixty");
  EXPECT_THROW((void)adamra_config_from(bad), ConfigError);
}

TEST(KeyValueConfig, HeadsWithoutRatesRejected) {
  KeyValueConfig kv;
  kv.set("adamra.heads", "2");
  EXPECT_THROW((void)adamra_config_from(kv), ConfigError);
}

TEST(KeyValueConfig, Switches) {
  EXPECT_TRUE(parse_switch("on"));
  EXPECT_TRUE(parse_switch("true"));
  EXPECT_FALSE(parse_switch("0"));
  EXPECT_THROW((void)parse_switch("maybe"), ConfigError);
}

TEST(KeyValueConfig, ConfigTextRoundTrip) {
  AdamraConfig cfg;
  cfg.d = 12;
  cfg.heads = 3;
  cfg.subheads = 3;
  cfg.rates = parse_rates("1,1/3,1/7");
  cfg.phi = FeatureMap::elu_plus_one;
  cfg.routing = Routing::random;
  cfg.gate_scaling = false;
  cfg.eps = 1e-4;
  const AdamraConfig back = adamra_config_from(KeyValueConfig::parse(to_config_text(cfg)));
  EXPECT_EQ(back.d, cfg.d);
  EXPECT_EQ(back.heads, cfg.heads);
  EXPECT_EQ(back.subheads, cfg.subheads);
  EXPECT_EQ(back.rates, cfg.rates);
  EXPECT_EQ(back.phi, cfg.phi);
  EXPECT_EQ(back.routing, cfg.routing);
  EXPECT_EQ(back.gate_scaling, cfg.gate_scaling);
  EXPECT_EQ(back.eps, cfg.eps);
}

TEST(ParamFile, BinaryRoundTripIsExact) {
  AdamraConfig cfg;
  cfg.d = 8;
  cfg.heads = 2;
  cfg.subheads = 2;
  cfg.rates = parse_rates("1/2,1/5");
  std::mt19937_64 rng(3);
  const AdamraParams p = AdamraParams::init(cfg, rng);
  std::stringstream buf;
  write_params(buf, cfg, p);
  const LoadedParams back = read_params(buf);
  EXPECT_EQ(back.cfg.rates, cfg.rates);
  EXPECT_EQ(diffcheck::flatten(back.params).values, diffcheck::flatten(p).values);
}

TEST(ParamFile, RejectsGarbageAndTruncation) {
  std::stringstream junk("not a parameter file at all");
  EXPECT_THROW((void)read_params(junk), std::runtime_error);

  AdamraConfig cfg;
  cfg.d = 4;
  cfg.heads = 1;
  cfg.subheads = 1;
  cfg.rates = parse_rates("1");
  std::mt19937_64 rng(4);
  std::stringstream buf;
  write_params(buf, cfg, AdamraParams::init(cfg, rng));
  const std::string bytes = buf.str();
  std::stringstream cut(bytes.substr(0, bytes.size() - 5));
  EXPECT_THROW((void)read_params(cut), std::runtime_error);
  std::stringstream extra(bytes + "x");
  EXPECT_THROW((void)read_params(extra), std::runtime_error);
}

TEST(Routing, Names) {
  EXPECT_EQ(parse_routing("random"), Routing::random);
  EXPECT_EQ(to_string(Routing::learned), "learned");
  EXPECT_THROW((void)parse_routing("psychic"), ConfigError);
}

}  // namespace
}  // namespace adamra
