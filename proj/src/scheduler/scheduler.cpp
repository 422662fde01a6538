#include "eraid/scheduler/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "eraid/error.hpp"

namespace eraid {

SchedulerConfig SchedulerConfig::defaults_for(std::uint64_t flash_bytes) {
  SchedulerConfig c;
  c.c_lower = flash_bytes / 100 * 80;
  c.c_upper = flash_bytes / 100 * 92;
  return c;
}

void SchedulerConfig::validate(std::uint64_t flash_bytes) const {
  if (!(c_upper < flash_bytes)) {
    raise(Errc::config_invalid, "c_upper (" + std::to_string(c_upper) +
                                    ") must be below the flash capacity (" +
                                    std::to_string(flash_bytes) + ")");
  }
  if (!(c_lower < c_upper)) raise(Errc::config_invalid, "c_lower must be below c_upper");
  if (!(h > 1.0)) raise(Errc::config_invalid, "h must be greater than 1");
  if (stability_window < 1) raise(Errc::config_invalid, "stability_window must be >= 1");
  if (beta_window == 0) raise(Errc::config_invalid, "beta_window must be positive");
  if (sample_period == 0) raise(Errc::config_invalid, "sample_period must be positive");
}

HotnessState::HotnessState(std::uint64_t segments, std::size_t beta_window)
    : v5_(segments),
      v10_(segments),
      window_(beta_window == 0 ? 1 : beta_window),
      ring_(std::make_unique<std::atomic<std::uint8_t>[]>(window_)) {
  for (std::size_t i = 0; i < window_; ++i) ring_[i].store(0);
}

void HotnessState::record_access(std::uint64_t seg, bool is_r10) {
  if (is_r10) {
    v10_.set(seg);
  } else {
    v5_.set(seg);
  }
  const std::uint64_t idx = total_.fetch_add(1, std::memory_order_relaxed);
  const std::uint8_t now = is_r10 ? 1 : 0;
  const std::uint8_t old = ring_[idx % window_].exchange(now, std::memory_order_relaxed);
  if (now != old) hits_.fetch_add(static_cast<std::int64_t>(now) - old, std::memory_order_relaxed);
}

std::uint64_t HotnessState::window_samples() const {
  return std::min<std::uint64_t>(total_.load(), window_);
}

double HotnessState::beta() const {
  const std::uint64_t n = window_samples();
  if (n == 0) return 0.0;
  return static_cast<double>(hits_.load()) / static_cast<double>(n);
}

void HotnessState::reset_v5() {
  v5_.clear_all();
  reset_mark_.store(total_.load());
}

std::string_view decision_name(Decision d) {
  switch (d) {
    case Decision::none: return "none";
    case Decision::promote: return "promote";
    case Decision::demote: return "demote";
  }
  return "?";
}

bool ReactiveTrigger::stable() const {
  if (history_.size() < static_cast<std::size_t>(cfg_.stability_window)) return false;
  const std::size_t devices = history_.back().size();
  for (std::size_t d = 0; d < devices; ++d) {
    std::uint64_t lo = std::numeric_limits<std::uint64_t>::max();
    std::uint64_t hi = 0;
    for (const auto& s : history_) {
      lo = std::min(lo, s[d]);
      hi = std::max(hi, s[d]);
    }
    if (hi == 0) continue;
    if (static_cast<double>(hi - lo) / static_cast<double>(hi) >= cfg_.stability_delta) {
      return false;
    }
  }
  return true;
}

Decision ReactiveTrigger::tick(const std::vector<std::uint64_t>& usage,
                               std::uint64_t r10_segments) {
  history_.push_back(usage);
  while (history_.size() > static_cast<std::size_t>(cfg_.stability_window)) history_.pop_front();
  const bool any_high =
      std::any_of(usage.begin(), usage.end(), [&](std::uint64_t u) { return u > cfg_.c_upper; });
  if (any_high && r10_segments > 0) return Decision::demote;
  const bool all_low =
      std::all_of(usage.begin(), usage.end(), [&](std::uint64_t u) { return u < cfg_.c_lower; });
  if (all_low && stable()) return Decision::promote;
  return Decision::none;
}

bool proactive_check(double beta, std::uint64_t r10_segments, std::uint64_t segments, double h,
                     std::uint64_t samples, std::uint64_t min_samples) {
  if (samples <= min_samples || segments == 0) return false;
  return beta < h * static_cast<double>(r10_segments) / static_cast<double>(segments);
}

std::vector<std::uint64_t> select_promotion_candidates(
    const AtomicBits& v5, const std::function<bool(std::uint64_t)>& eligible, std::size_t k,
    std::uint64_t& cursor) {
  std::vector<std::uint64_t> out;
  const std::uint64_t n = v5.size();
  if (n == 0 || k == 0) return out;
  cursor %= n;
  for (std::uint64_t step = 0; step < n && out.size() < k; ++step) {
    const std::uint64_t seg = cursor;
    cursor = (cursor + 1) % n;
    if (v5.test(seg) && eligible(seg)) out.push_back(seg);
  }
  return out;
}

std::vector<std::uint64_t> select_demotion_candidates(
    AtomicBits& v10, const std::function<bool(std::uint64_t)>& eligible, std::size_t k,
    std::uint64_t& hand) {
  std::vector<std::uint64_t> out;
  const std::uint64_t n = v10.size();
  if (n == 0 || k == 0) return out;
  hand %= n;
  // Two revolutions clear every bit; the third can only pick.
  for (std::uint64_t step = 0; step < 3 * n && out.size() < k; ++step) {
    const std::uint64_t seg = hand;
    if (!out.empty() && seg == out.front()) break;
    hand = (hand + 1) % n;
    if (!eligible(seg)) continue;
    if (v10.test(seg)) {
      v10.clear(seg);
      continue;
    }
    out.push_back(seg);
  }
  return out;
}

double acceptance_probability(Direction dir, double alpha, double alpha_extreme) {
  if (!(alpha > 0.0) || !(alpha_extreme > 0.0) || !std::isfinite(alpha) ||
      !std::isfinite(alpha_extreme)) {
    return 1.0;
  }
  const double p = dir == Direction::promote ? alpha / alpha_extreme : alpha_extreme / alpha;
  return std::clamp(p, 0.0, 1.0);
}

bool probabilistic_accept(std::mt19937_64& rng, Direction dir, double alpha,
                          double alpha_extreme) {
  const double p = acceptance_probability(dir, alpha, alpha_extreme);
  if (p >= 1.0) return true;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return u(rng) < p;
}

bool autonomous_candidate(const SegmentRatios& r) {
  return r.data_blocks > 0 && r.data_bytes < r.parity_bytes;
}

std::vector<std::uint64_t> autonomous_scan(ElasticArray& array) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t seg = 0; seg < array.geometry().segment_count(); ++seg) {
    if (array.level(seg) != Level::r5) continue;
    if (!autonomous_candidate(array.segment_ratios(seg))) continue;
    try {
      promote_segment(array, seg);
      out.push_back(seg);
    } catch (const Error&) {
      // Left as R5; the next scan retries it.
    }
  }
  return out;
}

std::vector<std::int64_t> promotion_delta(const ElasticArray& array, std::uint64_t seg) {
  const ArrayGeometry& g = array.geometry();
  const auto& devs = array.devices();
  std::vector<std::int64_t> delta(g.devices(), 0);
  const std::uint64_t s1 = g.slot_lba(seg, 0);
  for (std::uint32_t o = 0; o < g.strip_blocks(); ++o) {
    for (std::uint32_t i = 0; i < static_cast<std::uint32_t>(g.n()); ++i) {
      delta[g.mirror_device(seg, i)] += devs[g.data_device(seg, i)]->stored_len(s1 + o);
    }
    const int p = g.parity_device(seg);
    delta[p] -= devs[p]->stored_len(s1 + o);
  }
  return delta;
}

Scheduler::Scheduler(ElasticArray& array, const SchedulerConfig& cfg)
    : array_(array),
      cfg_(cfg),
      hot_(array.geometry().segment_count(), cfg.beta_window),
      reactive_(cfg),
      rng_(cfg.seed) {
  cfg_.validate(array.geometry().flash_capacity_bytes());
  array_.set_access_observer([this](std::uint64_t seg, Level level, bool) {
    hot_.record_access(seg, level == Level::r10);
  });
}

Scheduler::~Scheduler() { array_.set_access_observer({}); }

double Scheduler::stripe_ratio(std::uint64_t seg) const {
  return array_.segment_ratios(seg).alpha_usr();
}

std::vector<std::uint64_t> Scheduler::promote_some(std::size_t k) {
  std::vector<std::uint64_t> done;
  auto cands = select_promotion_candidates(
      hot_.v5(), [this](std::uint64_t s) { return array_.level(s) == Level::r5; }, k,
      hot_.promote_cursor);
  if (cands.empty()) return done;

  std::vector<double> ratios;
  double alpha_max = 0.0;
  for (auto seg : cands) {
    ratios.push_back(stripe_ratio(seg));
    alpha_max = std::max(alpha_max, ratios.back());
  }
  std::vector<std::uint64_t> usage = array_.device_usage();
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const std::uint64_t seg = cands[i];
    if (cfg_.probabilistic &&
        !probabilistic_accept(rng_, Direction::promote, ratios[i], alpha_max)) {
      ++counters_.rejected;
      continue;
    }
    // Headroom: the batch only grows while every device stays under C_u.
    const auto delta = promotion_delta(array_, seg);
    bool fits = true;
    for (std::size_t d = 0; d < usage.size(); ++d) {
      const std::int64_t next = static_cast<std::int64_t>(usage[d]) + delta[d];
      if (next >= static_cast<std::int64_t>(cfg_.c_upper)) fits = false;
    }
    if (!fits) continue;
    try {
      promote_segment(array_, seg);
    } catch (const Error&) {
      continue;
    }
    for (std::size_t d = 0; d < usage.size(); ++d) {
      usage[d] = static_cast<std::uint64_t>(static_cast<std::int64_t>(usage[d]) + delta[d]);
    }
    hot_.v5().clear(seg);
    done.push_back(seg);
  }
  counters_.promoted += done.size();
  return done;
}

std::vector<std::uint64_t> Scheduler::demote_some(std::size_t k) {
  std::vector<std::uint64_t> done;
  auto cands = select_demotion_candidates(
      hot_.v10(), [this](std::uint64_t s) { return array_.level(s) == Level::r10; }, k,
      hot_.clock_hand);
  if (cands.empty()) return done;
  std::vector<double> ratios;
  double alpha_min = std::numeric_limits<double>::infinity();
  for (auto seg : cands) {
    ratios.push_back(stripe_ratio(seg));
    if (ratios.back() > 0.0) alpha_min = std::min(alpha_min, ratios.back());
  }
  for (std::size_t i = 0; i < cands.size(); ++i) {
    if (cfg_.probabilistic &&
        !probabilistic_accept(rng_, Direction::demote, ratios[i], alpha_min)) {
      ++counters_.rejected;
      continue;
    }
    try {
      demote_segment(array_, cands[i]);
    } catch (const Error&) {
      continue;
    }
    done.push_back(cands[i]);
  }
  counters_.demoted += done.size();
  return done;
}

TickReport Scheduler::tick() {
  TickReport rep;
  ++counters_.ticks;
  if (cfg_.v5_reset_period != 0 && hot_.accesses_since_reset() >= cfg_.v5_reset_period) {
    hot_.reset_v5();
    ++counters_.v5_resets;
  }
  if (array_.mode().degraded()) return rep;

  if (counters_.ticks % cfg_.sample_period == 0) {
    rep.reactive = reactive_.tick(array_.device_usage(), array_.r10_segments());
  }
  if (rep.reactive == Decision::demote) {
    ++counters_.demote_triggers;
    rep.demoted = demote_some(cfg_.batch_size);
  } else if (rep.reactive == Decision::promote) {
    ++counters_.promote_triggers;
    rep.promoted = promote_some(cfg_.batch_size);
  } else if (cfg_.proactive &&
             proactive_check(hot_.beta(), array_.r10_segments(),
                             array_.geometry().segment_count(), cfg_.h,
                             hot_.total_accesses(), cfg_.min_samples)) {
    rep.proactive = true;
    ++counters_.proactive_triggers;
    const std::size_t k =
        std::min<std::size_t>(cfg_.batch_size, static_cast<std::size_t>(array_.r10_segments()));
    rep.demoted = demote_some(k);
    if (!rep.demoted.empty()) rep.promoted = promote_some(rep.demoted.size());
  }
  if (cfg_.autonomous) {
    rep.autonomous = autonomous_scan(array_);
    counters_.autonomous += rep.autonomous.size();
  }
  return rep;
}

}  // namespace eraid
