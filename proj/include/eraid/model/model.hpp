#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace eraid {

struct ModelParams {
  int n = 3;
  double alpha_exp = 1.0;
  double beta_util = 1.0;
  double alpha_usr = 1.0;
  double alpha_pty = 1.0;

  // alpha_pty from the (alpha_usr - 1) = 4 (alpha_pty - 1) linkage.
  static ModelParams linked(int n, double alpha_exp, double beta_util, double alpha_usr);
  // Throws ConfigInvalid on ratios below 1, beta outside (0, 1] or n < 2.
  void validate() const;
};

struct CoverageResult {
  double raid10_fraction = 0.0;
  bool feasible = true;
  double alpha_avg = 0.0;    // blended ratio of the all-R5 array, (n+1)/c5
  double alpha_full = 0.0;   // user ratio at which coverage reaches 100 %
  double c5 = 0.0;           // physical strips per stripe as R5
  double c10 = 0.0;          // physical strips per stripe as R10
  double budget = 0.0;       // physical strips available per stored stripe
};

CoverageResult raid10_fraction(const ModelParams& p);

// 2 n beta alpha_exp / (n + 1)
double alpha_full(int n, double beta_util, double alpha_exp);

// min(C_RAID, alpha * n * C_flash) with alpha the all-R5 blended ratio.
double effective_capacity(const ModelParams& p, double flash_bytes);

struct SweepRanges {
  std::vector<int> n;
  std::vector<double> alpha_exp;
  std::vector<double> beta_util;
  std::vector<double> alpha_usr;
  // Empty: alpha_pty follows the linkage.
  std::vector<double> alpha_pty;
};

struct SweepRow {
  ModelParams params;
  CoverageResult result;
};

std::vector<SweepRow> sweep(const SweepRanges& r);
std::string sweep_csv(const SweepRanges& r);
inline constexpr const char* kSweepCsvHeader =
    "n,alpha_exp,beta_util,alpha_usr,alpha_pty,fraction,feasible";

std::vector<double> linspace(double lo, double hi, std::size_t count);
// n in {3, 5}, alpha_exp in {1.0, 1.2, 1.4, 1.6, 1.8}, beta 1, alpha_usr over [1, 3].
SweepRanges fig7_ranges(std::size_t points = 41);
// n 3, alpha_exp 1.8, beta in {1.0, 0.9, 0.8}, alpha_usr over [1, 3].
SweepRanges fig8_ranges(std::size_t points = 41);

}  // namespace eraid
