#include <gtest/gtest.h>

#include <sstream>

#include "eraid/error.hpp"
#include "eraid/model/model.hpp"

using namespace eraid;

namespace {

// Packs stripes one at a time: every written stripe starts as R5 (n/au + 1/ap
// strips), then stripes are mirrored (2n/au strips) while the flash of n+1
// devices still has room. Capacities are in strips.
double greedy_fraction(int n, double alpha_exp, double beta, double au, double ap,
                       std::uint64_t flash_strips) {
  const double budget = (n + 1.0) * static_cast<double>(flash_strips);
  const auto segments = static_cast<std::uint64_t>(alpha_exp * static_cast<double>(flash_strips));
  const auto written = static_cast<std::uint64_t>(beta * static_cast<double>(segments) + 0.5);
  const double r5 = n / au + 1.0 / ap;
  const double r10 = 2.0 * n / au;
  double used = static_cast<double>(written) * r5;
  if (used > budget) return -1.0;
  std::uint64_t mirrored = 0;
  while (mirrored < written && used - r5 + r10 <= budget) {
    used += r10 - r5;
    ++mirrored;
  }
  return static_cast<double>(mirrored) / static_cast<double>(written);
}

}  // namespace

TEST(Model, PaperAnchors) {
  const double b[] = {1.0, 0.9, 0.8};
  const double want[] = {0.0, 0.24, 0.68};
  for (int i = 0; i < 3; ++i) {
    const auto r = raid10_fraction(ModelParams{3, 1.8, b[i], 2.0, 1.25});
    EXPECT_NEAR(r.raid10_fraction, want[i], 0.02) << b[i];
    // At full utilization even all-R5 does not fit: c5 = 2.3 > 4 / 1.8.
    EXPECT_EQ(r.feasible, b[i] < 1.0);
  }
}

TEST(Model, LinkageGivesQuarterOfDataSavings) {
  const ModelParams p = ModelParams::linked(3, 1.8, 0.9, 2.0);
  EXPECT_DOUBLE_EQ(p.alpha_pty, 1.25);
}

TEST(Model, AlphaFull) {
  EXPECT_DOUBLE_EQ(alpha_full(3, 1.0, 1.8), 2.7);
  // Coverage reaches 1 exactly at alpha_full for any parity ratio.
  for (double ap : {1.0, 1.25, 2.0}) {
    EXPECT_NEAR(raid10_fraction(ModelParams{3, 1.8, 1.0, 2.7, ap}).raid10_fraction, 1.0, 1e-9);
    EXPECT_LT(raid10_fraction(ModelParams{3, 1.8, 1.0, 2.69, ap}).raid10_fraction, 1.0);
  }
}

TEST(Model, MatchesBruteForceAllocator) {
  const std::uint64_t flash_strips = 20000;
  for (int n : {3, 5}) {
    for (double ae : {1.0, 1.4, 1.8}) {
      for (double beta : {0.8, 0.9, 1.0}) {
        for (double au : {1.2, 1.7, 2.0, 2.5, 3.0}) {
          const ModelParams p = ModelParams::linked(n, ae, beta, au);
          const auto r = raid10_fraction(p);
          const double g = greedy_fraction(n, ae, beta, au, p.alpha_pty, flash_strips);
          if (g < 0) {
            EXPECT_FALSE(r.feasible) << n << " " << ae << " " << beta << " " << au;
            continue;
          }
          EXPECT_TRUE(r.feasible);
          EXPECT_NEAR(r.raid10_fraction, g, 1e-3) << n << " " << ae << " " << beta << " " << au;
        }
      }
    }
  }
}

TEST(Model, MonotoneInCompressibilityAndUtilization) {
  double last = -1.0;
  for (double au : linspace(1.0, 3.0, 41)) {
    const double f = raid10_fraction(ModelParams::linked(3, 1.4, 1.0, au)).raid10_fraction;
    EXPECT_GE(f, last);
    last = f;
  }
  last = 2.0;
  for (double beta : {0.5, 0.7, 0.9, 1.0}) {
    const double f = raid10_fraction(ModelParams::linked(3, 1.8, beta, 2.2)).raid10_fraction;
    EXPECT_LE(f, last);
    last = f;
  }
}

// More devices: the curve rises more slowly and reaches 100 % later. The
// wider array starts converting slightly earlier, so the two curves cross.
TEST(Model, WiderArrayRisesMoreSlowly) {
  for (double ae : {1.0, 1.2, 1.4, 1.6, 1.8}) {
    EXPECT_GT(alpha_full(5, 1.0, ae), alpha_full(3, 1.0, ae));
    const double h = 1e-4;
    for (double au : linspace(1.0, 3.0, 81)) {
      auto f = [&](int n, double x) {
        return raid10_fraction(ModelParams::linked(n, ae, 1.0, x)).raid10_fraction;
      };
      const double f3 = f(3, au), f5 = f(5, au);
      if (f3 <= 0.0 || f3 >= 1.0 || f5 <= 0.0 || f5 >= 1.0) continue;
      const double s3 = (f(3, au + h) - f(3, au - h)) / (2 * h);
      const double s5 = (f(5, au + h) - f(5, au - h)) / (2 * h);
      EXPECT_LT(s5, s3) << ae << " " << au;
    }
  }
}

TEST(Model, IncompressibleAtExpansionOneIsFullyMirrorable) {
  // alpha_exp = 1 leaves room for the whole segment space as R10 only when
  // data compresses 2n/(n+1); raw data fits R5 exactly and no more.
  const auto r = raid10_fraction(ModelParams{3, 1.0, 1.0, 1.0, 1.0});
  EXPECT_TRUE(r.feasible);
  EXPECT_DOUBLE_EQ(r.raid10_fraction, 0.0);
  const auto over = raid10_fraction(ModelParams{3, 1.8, 1.0, 1.0, 1.0});
  EXPECT_FALSE(over.feasible);
}

TEST(Model, EffectiveCapacity) {
  const double flash = 1e9;
  // Raw data: capacity is n * flash.
  EXPECT_NEAR(effective_capacity(ModelParams{3, 1.8, 1.0, 1.0, 1.0}, flash), 3e9, 1.0);
  // Strong compression: capped at the formatted size.
  EXPECT_NEAR(effective_capacity(ModelParams::linked(3, 1.4, 1.0, 3.0), flash), 1.4 * 3e9, 1.0);
  // In between it grows with the blended ratio.
  const double a = effective_capacity(ModelParams::linked(3, 1.8, 1.0, 1.3), flash);
  const double b = effective_capacity(ModelParams::linked(3, 1.8, 1.0, 1.5), flash);
  EXPECT_LT(3e9, a);
  EXPECT_LT(a, b);
  EXPECT_LT(b, 1.8 * 3e9);
}

TEST(Model, RejectsBadParameters) {
  EXPECT_THROW(raid10_fraction(ModelParams{1, 1.0, 1.0, 1.0, 1.0}), Error);
  EXPECT_THROW(raid10_fraction(ModelParams{3, 0.9, 1.0, 1.0, 1.0}), Error);
  EXPECT_THROW(raid10_fraction(ModelParams{3, 1.0, 0.0, 1.0, 1.0}), Error);
  EXPECT_THROW(raid10_fraction(ModelParams{3, 1.0, 1.1, 1.0, 1.0}), Error);
  EXPECT_THROW(raid10_fraction(ModelParams{3, 1.0, 1.0, 0.5, 1.0}), Error);
}

TEST(Sweep, CsvShapes) {
  SweepRanges empty{{3}, {1.4}, {1.0}, {}, {}};
  EXPECT_EQ(sweep_csv(empty), std::string(kSweepCsvHeader) + "\n");
  SweepRanges one{{3}, {1.8}, {0.9}, {2.0}, {}};
  std::istringstream is(sweep_csv(one));
  std::string header, row, extra;
  std::getline(is, header);
  std::getline(is, row);
  EXPECT_FALSE(std::getline(is, extra));
  EXPECT_EQ(header, kSweepCsvHeader);
  EXPECT_EQ(row.rfind("3,1.8,0.9,2,1.25,0.24", 0), 0u) << row;
  EXPECT_EQ(sweep(fig7_ranges(41)).size(), 2u * 5 * 41);
  EXPECT_EQ(sweep(fig8_ranges(41)).size(), 3u * 41);
}

TEST(Sweep, Linspace) {
  EXPECT_TRUE(linspace(0, 1, 0).empty());
  EXPECT_EQ(linspace(2, 5, 1), std::vector<double>{2});
  EXPECT_EQ(linspace(1, 3, 3), (std::vector<double>{1, 2, 3}));
}
