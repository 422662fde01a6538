#include "eraid/model/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "eraid/czdev/parity_model.hpp"
#include "eraid/error.hpp"

namespace eraid {

ModelParams ModelParams::linked(int n, double alpha_exp, double beta_util, double alpha_usr) {
  return ModelParams{n, alpha_exp, beta_util, alpha_usr, linked_parity_ratio(alpha_usr)};
}

void ModelParams::validate() const {
  if (n < 2) raise(Errc::config_invalid, "n must be at least 2");
  if (alpha_exp < 1.0 || alpha_usr < 1.0 || alpha_pty < 1.0) {
    raise(Errc::config_invalid, "compression ratios must be >= 1");
  }
  if (!(beta_util > 0.0 && beta_util <= 1.0)) {
    raise(Errc::config_invalid, "beta_util must lie in (0, 1]");
  }
}

double alpha_full(int n, double beta_util, double alpha_exp) {
  return 2.0 * n * beta_util * alpha_exp / (n + 1.0);
}

CoverageResult raid10_fraction(const ModelParams& p) {
  p.validate();
  CoverageResult r;
  const double n = p.n;
  // Physical strips per stripe of n user strips under each level, against
  // what the flash can give each stored stripe: S = alpha_exp C_flash / strip
  // stripes exist, beta_util S of them hold data, (n+1) C_flash is available.
  r.c5 = n / p.alpha_usr + 1.0 / p.alpha_pty;
  r.c10 = 2.0 * n / p.alpha_usr;
  r.budget = (n + 1.0) / (p.beta_util * p.alpha_exp);
  r.alpha_avg = (n + 1.0) / r.c5;
  r.alpha_full = alpha_full(p.n, p.beta_util, p.alpha_exp);
  r.feasible = std::min(r.c5, r.c10) <= r.budget;
  if (r.c10 > r.c5) {
    r.raid10_fraction = std::clamp((r.budget - r.c5) / (r.c10 - r.c5), 0.0, 1.0);
  } else {
    // R10 is no costlier than R5: everything can be mirrored if it fits at all.
    r.raid10_fraction = r.budget >= r.c10 ? 1.0 : 0.0;
  }
  return r;
}

double effective_capacity(const ModelParams& p, double flash_bytes) {
  p.validate();
  const double n = p.n;
  const double c5 = n / p.alpha_usr + 1.0 / p.alpha_pty;
  const double alpha = (n + 1.0) / c5;
  const double c_raid = p.alpha_exp * n * flash_bytes;
  return std::min(c_raid, alpha * n * flash_bytes);
}

std::vector<SweepRow> sweep(const SweepRanges& r) {
  std::vector<SweepRow> out;
  for (int n : r.n) {
    for (double ae : r.alpha_exp) {
      for (double b : r.beta_util) {
        for (double au : r.alpha_usr) {
          std::vector<double> ptys = r.alpha_pty;
          if (ptys.empty()) ptys.push_back(linked_parity_ratio(au));
          for (double ap : ptys) {
            ModelParams p{n, ae, b, au, ap};
            out.push_back({p, raid10_fraction(p)});
          }
        }
      }
    }
  }
  return out;
}

std::string sweep_csv(const SweepRanges& r) {
  std::ostringstream os;
  os << kSweepCsvHeader << '\n';
  os.precision(6);
  for (const auto& row : sweep(r)) {
    const auto& p = row.params;
    os << p.n << ',' << p.alpha_exp << ',' << p.beta_util << ',' << p.alpha_usr << ','
       << p.alpha_pty << ',' << row.result.raid10_fraction << ','
       << (row.result.feasible ? 1 : 0) << '\n';
  }
  return os.str();
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> v;
  if (count == 0) return v;
  if (count == 1) return {lo};
  for (std::size_t i = 0; i < count; ++i) {
    v.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1));
  }
  return v;
}

SweepRanges fig7_ranges(std::size_t points) {
  return SweepRanges{{3, 5}, {1.0, 1.2, 1.4, 1.6, 1.8}, {1.0}, linspace(1.0, 3.0, points), {}};
}

SweepRanges fig8_ranges(std::size_t points) {
  return SweepRanges{{3}, {1.8}, {1.0, 0.9, 0.8}, linspace(1.0, 3.0, points), {}};
}

}  // namespace eraid
