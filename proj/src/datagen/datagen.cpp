#include "eraid/datagen/datagen.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>
#include <string>

#include "eraid/czdev/compressor.hpp"
#include "eraid/error.hpp"
#include "eraid/simd/xor_kernels.hpp"

namespace eraid {

namespace {

constexpr std::size_t kChunk = 16;
constexpr std::size_t kChunks = kBlockSize / kChunk;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Chunk i of the block is motif when its rank falls below fill * kChunks.
void render(std::uint64_t seed, double fill, Block& out) {
  std::uint8_t motif[kChunk];
  const std::uint64_t m0 = splitmix(seed ^ 0x6d6f74696full);
  const std::uint64_t m1 = splitmix(m0);
  std::memcpy(motif, &m0, 8);
  std::memcpy(motif + 8, &m1, 8);
  for (std::size_t i = 0; i < kChunks; ++i) {
    const std::uint64_t h = splitmix(seed * 0x100000001b3ull + i);
    const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    std::uint8_t* dst = out.data() + i * kChunk;
    if (u < fill) {
      std::memcpy(dst, motif, kChunk);
    } else {
      const std::uint64_t r0 = splitmix(h ^ 0x72616e64ull);
      const std::uint64_t r1 = splitmix(r0);
      std::memcpy(dst, &r0, 8);
      std::memcpy(dst + 8, &r1, 8);
    }
  }
}

double ratio_of(const Block& b) { return block_ratio(deflate_len(b)); }

}  // namespace

SynthResult synth_block_ex(const BlockSpec& spec) {
  if (!(spec.target_ratio >= 1.0)) {
    raise(Errc::unreachable_ratio, "target ratio below 1");
  }
  SynthResult r;
  if (spec.target_ratio == 1.0) {
    render(spec.seed, 0.0, r.block);
    r.achieved_ratio = ratio_of(r.block);
    return r;
  }
  render(spec.seed, 1.0, r.block);
  const double ceiling = ratio_of(r.block);
  if (ceiling < spec.target_ratio) {
    raise(Errc::unreachable_ratio, "target " + std::to_string(spec.target_ratio) +
                                       " above the generator ceiling " + std::to_string(ceiling));
  }
  // Ratio grows with the fill fraction; bisect on it.
  double lo = 0.0;
  double hi = 1.0;
  double best_f = 1.0;
  double best_err = std::abs(ceiling - spec.target_ratio);
  Block tmp;
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    render(spec.seed, mid, tmp);
    const double got = ratio_of(tmp);
    const double err = std::abs(got - spec.target_ratio);
    if (err < best_err) {
      best_err = err;
      best_f = mid;
    }
    if (got < spec.target_ratio) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < 1.0 / (4.0 * kChunks)) break;
  }
  render(spec.seed, best_f, r.block);
  r.fill_fraction = best_f;
  r.achieved_ratio = ratio_of(r.block);
  if (std::abs(r.achieved_ratio - spec.target_ratio) > 0.1 * spec.target_ratio) {
    raise(Errc::unreachable_ratio, "could not get within 10% of " +
                                       std::to_string(spec.target_ratio));
  }
  return r;
}

Block synth_block(const BlockSpec& spec) { return synth_block_ex(spec).block; }

std::vector<std::uint8_t> synthetic_corpus(std::size_t blocks, double target_ratio,
                                           std::uint64_t seed) {
  std::vector<std::uint8_t> out(blocks * kBlockSize);
  for (std::size_t i = 0; i < blocks; ++i) {
    const Block b = synth_block(BlockSpec{target_ratio, splitmix(seed + i)});
    std::memcpy(out.data() + i * kBlockSize, b.data(), kBlockSize);
  }
  return out;
}

WelchResult welch_test(std::span<const double> a, std::span<const double> b) {
  WelchResult w;
  if (a.size() < 2 || b.size() < 2) return w;
  auto mean_var = [](std::span<const double> x) {
    double m = 0.0;
    for (double v : x) m += v;
    m /= static_cast<double>(x.size());
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return std::pair{m, s / static_cast<double>(x.size() - 1)};
  };
  const auto [ma, va] = mean_var(a);
  const auto [mb, vb] = mean_var(b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double se2 = va / na + vb / nb;
  if (se2 == 0.0) {
    w.p_greater = ma > mb ? 0.0 : 1.0;
    return w;
  }
  w.t = (ma - mb) / std::sqrt(se2);
  w.df = se2 * se2 / ((va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0));
  const boost::math::students_t dist(w.df);
  w.p_greater = boost::math::cdf(boost::math::complement(dist, w.t));
  return w;
}

RatioHistogram parity_ratio_experiment(std::span<const std::uint8_t> corpus, int n,
                                       std::size_t bins) {
  if (n < 1) raise(Errc::invalid_argument, "n must be positive");
  if (bins == 0) raise(Errc::invalid_argument, "need at least one bin");
  const std::size_t blocks = corpus.size() / kBlockSize;
  if (blocks < static_cast<std::size_t>(n)) {
    raise(Errc::corpus_too_small, "corpus holds " + std::to_string(corpus.size()) +
                                      " bytes, need at least " + std::to_string(n * kBlockSize));
  }
  RatioHistogram h;
  h.stripes = blocks / static_cast<std::size_t>(n);
  Block parity;
  for (std::size_t s = 0; s < h.stripes; ++s) {
    parity.fill(0);
    for (int i = 0; i < n; ++i) {
      const std::uint8_t* p = corpus.data() + (s * n + i) * kBlockSize;
      const std::span<const std::uint8_t> blk(p, kBlockSize);
      h.user_ratios.push_back(block_ratio(deflate_len(blk)));
      simd::xor_into(parity, blk);
    }
    h.parity_ratios.push_back(block_ratio(deflate_len(parity)));
  }
  double hi = 1.0;
  for (double r : h.user_ratios) hi = std::max(hi, r);
  for (double r : h.parity_ratios) hi = std::max(hi, r);
  hi = std::ceil(hi);
  if (hi <= 1.0) hi = 2.0;
  for (std::size_t b = 0; b <= bins; ++b) {
    h.edges.push_back(1.0 + (hi - 1.0) * static_cast<double>(b) / static_cast<double>(bins));
  }
  auto bin_of = [&](double r) {
    const double f = (r - 1.0) / (hi - 1.0) * static_cast<double>(bins);
    return std::min<std::size_t>(static_cast<std::size_t>(std::max(f, 0.0)), bins - 1);
  };
  h.user_counts.assign(bins, 0);
  h.parity_counts.assign(bins, 0);
  for (double r : h.user_ratios) {
    ++h.user_counts[bin_of(r)];
    h.user_mean += r;
  }
  for (double r : h.parity_ratios) {
    ++h.parity_counts[bin_of(r)];
    h.parity_mean += r;
  }
  h.user_mean /= static_cast<double>(h.user_ratios.size());
  h.parity_mean /= static_cast<double>(h.parity_ratios.size());
  const WelchResult w = welch_test(h.user_ratios, h.parity_ratios);
  h.welch_t = w.t;
  h.welch_df = w.df;
  h.p_value = w.p_greater;
  return h;
}

std::string histogram_csv(const RatioHistogram& h) {
  std::ostringstream os;
  os << "bin_lo,bin_hi,user_count,parity_count\n";
  for (std::size_t b = 0; b + 1 < h.edges.size(); ++b) {
    os << h.edges[b] << ',' << h.edges[b + 1] << ',' << h.user_counts[b] << ','
       << h.parity_counts[b] << '\n';
  }
  return os.str();
}

}  // namespace eraid
