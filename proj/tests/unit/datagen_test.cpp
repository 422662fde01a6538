#include <gtest/gtest.h>

#include <random>

#include "eraid/czdev/compressor.hpp"
#include "eraid/datagen/datagen.hpp"
#include "eraid/error.hpp"

using namespace eraid;

namespace {

double deflate_ratio(const Block& b) {
  return static_cast<double>(kBlockSize) / static_cast<double>(deflate_len(b));
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return Errc::invalid_argument;
}

}  // namespace

TEST(Synth, HitsTargetsWithinTenPercent) {
  for (double target : {1.1, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0}) {
    for (std::uint64_t seed : {1, 2, 99}) {
      const SynthResult r = synth_block_ex({target, seed});
      const double measured = deflate_ratio(r.block);
      EXPECT_NEAR(measured, r.achieved_ratio, 1e-9);
      EXPECT_NEAR(measured / target, 1.0, 0.10) << target << " seed " << seed;
    }
  }
}

TEST(Synth, Deterministic) {
  EXPECT_EQ(synth_block({3.0, 42}), synth_block({3.0, 42}));
  EXPECT_NE(synth_block({3.0, 42}), synth_block({3.0, 43}));
}

TEST(Synth, UnreachableTargets) {
  EXPECT_EQ(code_of([] { (void)synth_block({0.5, 1}); }), Errc::unreachable_ratio);
  EXPECT_EQ(code_of([] { (void)synth_block({1e6, 1}); }), Errc::unreachable_ratio);
}

TEST(Synth, CorpusBlocksAreIndependent) {
  const auto c = synthetic_corpus(4, 2.5, 7);
  ASSERT_EQ(c.size(), 4 * kBlockSize);
  EXPECT_FALSE(std::equal(c.begin(), c.begin() + kBlockSize, c.begin() + kBlockSize));
  EXPECT_EQ(c, synthetic_corpus(4, 2.5, 7));
}

TEST(Welch, MatchesReferenceValues) {
  // Reference values from an independent statistics package.
  const std::vector<double> a1{3.1, 2.9, 3.4, 3.0, 3.3, 2.8};
  const std::vector<double> b1{1.2, 1.5, 1.1, 1.4, 1.3};
  const WelchResult r1 = welch_test(a1, b1);
  EXPECT_NEAR(r1.t, 15.101911438081784, 1e-9);
  EXPECT_NEAR(r1.df, 8.73897242412473, 1e-9);
  EXPECT_NEAR(r1.p_greater, 7.298361691726542e-08, 1e-12);

  const std::vector<double> a2{1.0, 1.4, 0.9, 1.3};
  const std::vector<double> b2{1.05, 1.0, 1.15, 0.95, 1.1};
  const WelchResult r2 = welch_test(a2, b2);
  EXPECT_NEAR(r2.t, 0.8053872662568282, 1e-9);
  EXPECT_NEAR(r2.df, 3.532143625026876, 1e-9);
  EXPECT_NEAR(r2.p_greater, 0.235647694514979, 1e-9);
}

TEST(Welch, ZeroVariance) {
  const std::vector<double> hi{2, 2, 2};
  const std::vector<double> lo{1, 1, 1};
  EXPECT_DOUBLE_EQ(welch_test(hi, lo).p_greater, 0.0);
  EXPECT_DOUBLE_EQ(welch_test(lo, hi).p_greater, 1.0);
}

TEST(ParityExperiment, CompressibleDataGivesWorseParity) {
  const auto corpus = synthetic_corpus(3 * 400, 3.0, 11);
  const RatioHistogram h = parity_ratio_experiment(corpus, 3);
  EXPECT_EQ(h.stripes, 400u);
  EXPECT_EQ(h.user_ratios.size(), 1200u);
  EXPECT_EQ(h.parity_ratios.size(), 400u);
  EXPECT_GT(h.user_mean, h.parity_mean);
  EXPECT_LT(h.p_value, 0.01);
  std::uint64_t users = 0;
  for (auto c : h.user_counts) users += c;
  EXPECT_EQ(users, 1200u);
  EXPECT_EQ(h.edges.size(), 21u);
  EXPECT_DOUBLE_EQ(h.edges.front(), 1.0);
}

TEST(ParityExperiment, IdenticalBlocksGiveZeroParity) {
  // XOR of an odd count of equal blocks is the block itself; with n = 2 it is zero.
  const Block b = synth_block({2.0, 5});
  std::vector<std::uint8_t> corpus;
  for (int i = 0; i < 20; ++i) corpus.insert(corpus.end(), b.begin(), b.end());
  const RatioHistogram h = parity_ratio_experiment(corpus, 2);
  EXPECT_GT(h.parity_mean, h.user_mean);
  const RatioHistogram h3 = parity_ratio_experiment(
      std::span<const std::uint8_t>(corpus.data(), 18 * kBlockSize), 3);
  EXPECT_NEAR(h3.parity_mean, h3.user_mean, 1e-9);
}

TEST(ParityExperiment, RandomDataHasNoSignal) {
  std::mt19937_64 rng(2);
  std::vector<std::uint8_t> corpus(300 * kBlockSize);
  for (auto& x : corpus) x = static_cast<std::uint8_t>(rng());
  const RatioHistogram h = parity_ratio_experiment(corpus, 3);
  EXPECT_NEAR(h.user_mean, h.parity_mean, 0.01);
  EXPECT_GT(h.p_value, 0.01);
}

TEST(ParityExperiment, Errors) {
  std::vector<std::uint8_t> tiny(2 * kBlockSize, 0);
  EXPECT_EQ(code_of([&] { (void)parity_ratio_experiment(tiny, 3); }), Errc::corpus_too_small);
  EXPECT_EQ(code_of([&] { (void)parity_ratio_experiment(tiny, 0); }), Errc::invalid_argument);
  EXPECT_EQ(code_of([&] { (void)parity_ratio_experiment(tiny, 1, 0); }), Errc::invalid_argument);
}

TEST(ParityExperiment, CsvHeader) {
  const auto corpus = synthetic_corpus(6, 2.0, 1);
  const std::string csv = histogram_csv(parity_ratio_experiment(corpus, 3, 4));
  EXPECT_EQ(csv.rfind("bin_lo,bin_hi,user_count,parity_count\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}
