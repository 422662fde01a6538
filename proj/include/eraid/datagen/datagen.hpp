#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "eraid/common.hpp"

namespace eraid {

struct BlockSpec {
  double target_ratio = 1.0;
  std::uint64_t seed = 0;
};

struct SynthResult {
  Block block{};
  double fill_fraction = 0.0;   // share of 16-byte chunks holding the block's motif
  double achieved_ratio = 1.0;  // measured with the deflate compressor
};

// Deterministic 4 KiB block whose deflate ratio is within 10 % of the target
// for targets in [1.1, 8]. Chunks are picked as motif or noise by a hash of
// (seed, chunk index), so blocks with different seeds differ in where their
// redundancy sits. Throws UnreachableRatio above what the generator can reach.
SynthResult synth_block_ex(const BlockSpec& spec);
Block synth_block(const BlockSpec& spec);

// Independently seeded blocks of the given target ratio, concatenated.
std::vector<std::uint8_t> synthetic_corpus(std::size_t blocks, double target_ratio,
                                           std::uint64_t seed);

struct RatioHistogram {
  std::vector<double> edges;               // bins + 1 edges
  std::vector<std::uint64_t> user_counts;  // bins
  std::vector<std::uint64_t> parity_counts;
  std::vector<double> user_ratios;
  std::vector<double> parity_ratios;
  std::uint64_t stripes = 0;
  double user_mean = 0.0;
  double parity_mean = 0.0;
  double welch_t = 0.0;
  double welch_df = 0.0;
  // One-sided p-value for "user mean > parity mean".
  double p_value = 1.0;
};

// Splits the corpus into 4 KiB strips, groups n strips per stripe, builds the
// XOR parity and compresses every block. Throws CorpusTooSmall below n blocks.
RatioHistogram parity_ratio_experiment(std::span<const std::uint8_t> corpus, int n,
                                       std::size_t bins = 20);

std::string histogram_csv(const RatioHistogram& h);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p_greater = 1.0;   // P(T >= t) under equal means
};
WelchResult welch_test(std::span<const double> a, std::span<const double> b);

}  // namespace eraid
