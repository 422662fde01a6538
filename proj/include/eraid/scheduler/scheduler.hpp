#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <random>
#include <string_view>
#include <vector>

#include "eraid/convert/convert.hpp"
#include "eraid/iopath/array.hpp"
#include "eraid/util/atomic_bits.hpp"

namespace eraid {

struct SchedulerConfig {
  std::uint64_t c_lower = 0;   // bytes per device
  std::uint64_t c_upper = 0;
  double h = 1.5;
  std::uint64_t sample_period = 1;          // ticks between usage samples
  std::uint64_t v5_reset_period = 1'000'000;  // accesses
  int stability_window = 5;
  double stability_delta = 0.01;
  std::size_t batch_size = 16;
  std::uint64_t min_samples = 10'000;
  std::size_t beta_window = 100'000;
  bool proactive = true;
  bool autonomous = false;
  bool probabilistic = true;
  std::uint64_t seed = 1;

  // C_l = 80 % and C_u = 92 % of the flash capacity.
  static SchedulerConfig defaults_for(std::uint64_t flash_bytes);
  // Throws ConfigInvalid unless C_l < C_u < C_flash and h > 1.
  void validate(std::uint64_t flash_bytes) const;
};

// Per-segment access bits and the RAID-10 hit rate. record_access is
// wait-free so the I/O path can call it directly.
class HotnessState {
 public:
  HotnessState(std::uint64_t segments, std::size_t beta_window);

  void record_access(std::uint64_t seg, bool is_r10);

  AtomicBits& v5() { return v5_; }
  AtomicBits& v10() { return v10_; }
  const AtomicBits& v5() const { return v5_; }
  const AtomicBits& v10() const { return v10_; }

  // Hits over the last beta_window accesses (fewer before the window fills).
  double beta() const;
  std::uint64_t total_accesses() const { return total_.load(); }
  std::uint64_t window_samples() const;
  std::uint64_t accesses_since_reset() const { return total_.load() - reset_mark_.load(); }
  void reset_v5();

  std::uint64_t clock_hand = 0;
  std::uint64_t promote_cursor = 0;

 private:
  AtomicBits v5_;
  AtomicBits v10_;
  std::size_t window_;
  std::unique_ptr<std::atomic<std::uint8_t>[]> ring_;
  std::atomic<std::uint64_t> total_{0};
  std::atomic<std::int64_t> hits_{0};
  std::atomic<std::uint64_t> reset_mark_{0};
};

enum class Decision : std::uint8_t { none, promote, demote };
std::string_view decision_name(Decision d);

// Capacity thresholds with a stability gate on promotion.
class ReactiveTrigger {
 public:
  explicit ReactiveTrigger(const SchedulerConfig& cfg) : cfg_(cfg) {}

  Decision tick(const std::vector<std::uint64_t>& usage, std::uint64_t r10_segments);
  bool stable() const;
  void clear() { history_.clear(); }

 private:
  SchedulerConfig cfg_;
  std::deque<std::vector<std::uint64_t>> history_;
};

// beta < h * |S10| / |S|, only once enough accesses have been sampled.
bool proactive_check(double beta, std::uint64_t r10_segments, std::uint64_t segments, double h,
                     std::uint64_t samples, std::uint64_t min_samples);

// Up to k eligible segments whose bit is set, scanning from the cursor.
std::vector<std::uint64_t> select_promotion_candidates(
    const AtomicBits& v5, const std::function<bool(std::uint64_t)>& eligible, std::size_t k,
    std::uint64_t& cursor);

// Second chance over eligible segments: a set bit is cleared and skipped, the
// first clear bit is taken. The hand persists across calls.
std::vector<std::uint64_t> select_demotion_candidates(
    AtomicBits& v10, const std::function<bool(std::uint64_t)>& eligible, std::size_t k,
    std::uint64_t& hand);

// Promotion: alpha / alpha_max. Demotion: alpha_min / alpha. Clamped to [0, 1].
// A non-positive or non-finite ratio means the ratio is unavailable: p = 1.
double acceptance_probability(Direction dir, double alpha, double alpha_extreme);
bool probabilistic_accept(std::mt19937_64& rng, Direction dir, double alpha,
                          double alpha_extreme);

// Promotes every R5 segment whose data strips take less space than twice
// themselves would, i.e. alpha_usr > n * alpha_pty.
std::vector<std::uint64_t> autonomous_scan(ElasticArray& array);
bool autonomous_candidate(const SegmentRatios& r);

// Physical usage change per device if `seg` were promoted.
std::vector<std::int64_t> promotion_delta(const ElasticArray& array, std::uint64_t seg);

struct SchedulerCounters {
  std::uint64_t ticks = 0;
  std::uint64_t promote_triggers = 0;
  std::uint64_t demote_triggers = 0;
  std::uint64_t proactive_triggers = 0;
  std::uint64_t promoted = 0;
  std::uint64_t demoted = 0;
  std::uint64_t rejected = 0;
  std::uint64_t autonomous = 0;
  std::uint64_t v5_resets = 0;
};

struct TickReport {
  Decision reactive = Decision::none;
  bool proactive = false;
  std::vector<std::uint64_t> promoted;
  std::vector<std::uint64_t> demoted;
  std::vector<std::uint64_t> autonomous;
};

// Single coordinator. Installs itself as the array's access observer.
class Scheduler {
 public:
  Scheduler(ElasticArray& array, const SchedulerConfig& cfg);
  ~Scheduler();
  Scheduler(const Scheduler&) = delete;
  Scheduler& operator=(const Scheduler&) = delete;

  TickReport tick();

  HotnessState& hotness() { return hot_; }
  const SchedulerCounters& counters() const { return counters_; }
  const SchedulerConfig& config() const { return cfg_; }

 private:
  std::vector<std::uint64_t> promote_some(std::size_t k);
  std::vector<std::uint64_t> demote_some(std::size_t k);
  double stripe_ratio(std::uint64_t seg) const;

  ElasticArray& array_;
  SchedulerConfig cfg_;
  HotnessState hot_;
  ReactiveTrigger reactive_;
  std::mt19937_64 rng_;
  SchedulerCounters counters_;
};

}  // namespace eraid
