#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "tinval/bloom.hpp"
#include "tinval/error.hpp"

using namespace tinval;

namespace {

// Independent restatement of the false-positive model.
double reference_fp(double m, double k, double n) { return std::pow(1.0 - std::exp(-k * n / m), k); }

}  // namespace

TEST(Bloom, InsertedKeyIsContained) {
  BloomFilter f(BloomConfig::small_profile());
  f.insert(42);
  EXPECT_TRUE(f.contains(42));
  EXPECT_EQ(f.count(), 1u);
}

TEST(Bloom, EmptyFilterContainsNothing) {
  BloomFilter f(BloomConfig::small_profile());
  for (std::uint64_t k = 0; k < 1000; ++k) ASSERT_FALSE(f.contains(k));
}

TEST(Bloom, ObservedFalsePositivesAtFiveKeysPer128Bits) {
  const auto cfg = BloomConfig::with_optimal_k(128, 5);
  std::mt19937_64 rng(3);
  BloomFilter f(cfg);
  std::set<std::uint64_t> keys;
  while (keys.size() < 5) keys.insert(rng());
  for (auto k : keys) f.insert(k);
  std::size_t fp = 0;
  constexpr std::size_t kProbes = 1'000'000;
  for (std::size_t i = 0; i < kProbes; ++i) {
    const auto k = rng();
    if (!keys.contains(k) && f.contains(k)) ++fp;
  }
  EXPECT_LT(static_cast<double>(fp) / kProbes, 1e-4);
}

TEST(Bloom, EmptyNeedleIsContainedEverywhere) {
  const auto cfg = BloomConfig::small_profile();
  BloomFilter hay(cfg), needle(cfg);
  hay.insert(1);
  EXPECT_TRUE(hay.contains(needle));
  EXPECT_TRUE(BloomFilter(cfg).contains(needle));
}

TEST(Bloom, SubsetNeedleIsContained) {
  const auto cfg = BloomConfig::small_profile();
  BloomFilter hay(cfg);
  hay.insert(10);
  hay.insert(20);
  EXPECT_TRUE(hay.contains(BloomFilter::of_key(cfg, 10)));
}

TEST(Bloom, ContainmentAcrossConfigsThrows) {
  BloomFilter a(BloomConfig::small_profile());
  BloomFilter b(BloomConfig::large_profile());
  try {
    (void)a.contains(b);
    FAIL() << "expected ConfigMismatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::config_mismatch);
  }
}

TEST(Bloom, DisjointContainmentRateTracksModel) {
  const auto cfg = BloomConfig::with_optimal_k(128, 5);
  std::mt19937_64 rng(17);
  constexpr int kTrials = 100'000;
  int hits = 0;
  for (int t = 0; t < kTrials; ++t) {
    BloomFilter hay(cfg);
    for (int i = 0; i < 5; ++i) hay.insert(rng());
    BloomFilter needle(cfg);
    needle.insert(rng());
    if (hay.contains(needle)) ++hits;
  }
  const double observed = static_cast<double>(hits) / kTrials;
  const double model = reference_fp(128, cfg.k_hashes, 5);
  // The model is tiny here, so the check is an upper bound with slack for sampling.
  EXPECT_LE(observed, std::max(2.0 * model, 5.0 / kTrials));

  // A denser regime where the rate is large enough to compare both ways.
  const auto dense = BloomConfig::with_optimal_k(128, 25);
  hits = 0;
  for (int t = 0; t < kTrials; ++t) {
    BloomFilter hay(dense);
    for (int i = 0; i < 25; ++i) hay.insert(rng());
    if (hay.contains(BloomFilter::of_key(dense, rng()))) ++hits;
  }
  const double dense_obs = static_cast<double>(hits) / kTrials;
  const double dense_model = reference_fp(128, dense.k_hashes, 25);
  EXPECT_GT(dense_obs, dense_model / 2);
  EXPECT_LT(dense_obs, dense_model * 2);
}

TEST(Bloom, FpRateMatchesClosedForm) {
  for (std::uint32_t m : {64u, 128u, 4096u}) {
    for (std::uint32_t k = 1; k <= 20; ++k) {
      for (std::uint64_t n : {1u, 5u, 25u, 200u}) {
        EXPECT_DOUBLE_EQ(fp_rate(m, k, n), reference_fp(m, k, n));
      }
    }
  }
}

TEST(Bloom, FpRateBelowOnePerHundredThousandAtFiveKeys) {
  EXPECT_LT(fp_rate(128, optimal_k(128, 5), 5), 1e-5);
}

TEST(Bloom, FpRateAboveEightPercentAtTwentyFiveKeys) {
  for (std::uint32_t k = 1; k <= 20; ++k) EXPECT_GT(fp_rate(128, k, 25), 0.08) << "k=" << k;
}

TEST(Bloom, FpRateIsMonotoneInKeys) {
  for (std::uint32_t k = 1; k <= 12; ++k) {
    for (std::uint64_t n = 1; n < 300; ++n) ASSERT_LE(fp_rate(128, k, n), fp_rate(128, k, n + 1));
  }
}

TEST(Bloom, OptimalKRoundsAndClamps) {
  EXPECT_EQ(optimal_k(128, 5), 18u);   // 0.693 * 25.6 = 17.7
  EXPECT_EQ(optimal_k(128, 10), 9u);   // 8.87
  EXPECT_EQ(optimal_k(4096, 200), 14u);  // 14.2
  EXPECT_EQ(optimal_k(64, 1000), 1u);
}

TEST(Bloom, SegmentedBuildPacksInArrivalOrder) {
  auto cfg = BloomConfig::with_optimal_k(128, 5);
  std::vector<std::uint64_t> keys(25);
  for (std::size_t i = 0; i < keys.size(); ++i) keys[i] = i * 7 + 1;
  auto filters = segmented_build(keys, cfg);
  ASSERT_EQ(filters.size(), 5u);
  for (std::size_t f = 0; f < 5; ++f) {
    EXPECT_EQ(filters[f].count(), 5u);
    for (std::size_t j = 0; j < 5; ++j) EXPECT_TRUE(filters[f].contains(keys[f * 5 + j]));
  }
  EXPECT_LT(5 * fp_rate(128, cfg.k_hashes, 5), 1e-4);
}

TEST(Bloom, SegmentedBuildOfNothingIsEmpty) {
  EXPECT_TRUE(segmented_build({}, BloomConfig::small_profile()).empty());
}

TEST(Bloom, SegmentedBuildOverflowsIntoLastFilter) {
  auto cfg = BloomConfig::with_optimal_k(128, 5);
  cfg.max_filters_per_query = 2;
  std::vector<std::uint64_t> keys(12);
  for (std::size_t i = 0; i < keys.size(); ++i) keys[i] = i;
  auto filters = segmented_build(keys, cfg);
  ASSERT_EQ(filters.size(), 2u);
  EXPECT_EQ(filters[0].count(), 5u);
  EXPECT_EQ(filters[1].count(), 7u);
}

TEST(Bloom, IdenticalInputsGiveIdenticalBits) {
  const auto cfg = BloomConfig::small_profile();
  std::mt19937_64 rng(9);
  for (int t = 0; t < 100; ++t) {
    BloomFilter a(cfg), b(cfg);
    for (int i = 0; i < 10; ++i) {
      const auto k = rng();
      a.insert(k);
      b.insert(k);
    }
    ASSERT_EQ(a, b);
  }
}

TEST(Bloom, PopcountBoundedByKTimesCount) {
  const auto cfg = BloomConfig::small_profile();
  std::mt19937_64 rng(4);
  BloomFilter f(cfg);
  for (int i = 0; i < 30; ++i) {
    f.insert(rng());
    ASSERT_LE(f.popcount(), cfg.k_hashes * f.count());
  }
}

TEST(Bloom, NoFalseNegativesForSubsetNeedles) {
  const auto cfg = BloomConfig::small_profile();
  std::mt19937_64 rng(21);
  for (int t = 0; t < 2000; ++t) {
    std::vector<std::uint64_t> keys(1 + rng() % 12);
    for (auto& k : keys) k = rng();
    BloomFilter hay(cfg), needle(cfg);
    for (auto k : keys) hay.insert(k);
    for (std::size_t i = 0; i < keys.size(); i += 2) needle.insert(keys[i]);
    for (auto k : keys) ASSERT_TRUE(hay.contains(k));
    ASSERT_TRUE(hay.contains(needle));
  }
}

TEST(Bloom, SerializationRoundTrip) {
  const auto cfg = BloomConfig::large_profile();
  BloomFilter f(cfg);
  for (std::uint64_t k = 0; k < 50; ++k) f.insert(k * 13);
  const std::string bytes = f.serialize();
  EXPECT_EQ(bytes.size(), 16 + cfg.words() * 8);
  std::string_view in = bytes;
  EXPECT_EQ(BloomFilter::deserialize(in, cfg), f);
  EXPECT_TRUE(in.empty());
}

TEST(Bloom, DeserializeRejectsForeignConfig) {
  BloomFilter f(BloomConfig::small_profile());
  const std::string bytes = f.serialize();
  std::string_view in = bytes;
  auto other = BloomConfig::small_profile();
  other.seed ^= 1;
  EXPECT_THROW((void)BloomFilter::deserialize(in, other), Error);
}

TEST(Bloom, ConfigValidation) {
  BloomConfig cfg;
  cfg.m_bits = 100;
  EXPECT_THROW(cfg.validate(), Error);
  cfg.m_bits = 128;
  cfg.k_hashes = 0;
  EXPECT_THROW(cfg.validate(), Error);
}
