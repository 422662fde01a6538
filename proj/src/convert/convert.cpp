#include "eraid/convert/convert.hpp"

#include <algorithm>
#include <functional>
#include <mutex>
#include <queue>
#include <shared_mutex>
#include <sstream>

#include "eraid/error.hpp"
#include "eraid/simd/xor_kernels.hpp"

namespace eraid {

std::string_view direction_name(Direction d) {
  return d == Direction::promote ? "promote" : "demote";
}

std::string_view task_state_name(TaskState s) {
  switch (s) {
    case TaskState::pending: return "pending";
    case TaskState::copying: return "copying";
    case TaskState::committed: return "committed";
    case TaskState::trimmed: return "trimmed";
    case TaskState::failed: return "failed";
  }
  return "?";
}

std::uint64_t conversion_bytes(const ArrayGeometry& g) {
  return static_cast<std::uint64_t>(g.n()) * g.strip_bytes();
}

namespace {

void mark(ConversionTask* task, ConversionTrace* trace, TaskState state, const char* phase) {
  if (task != nullptr) task->state = state;
  if (trace != nullptr) trace->phases.emplace_back(phase);
}

void check_convertible(const ElasticArray& array, std::uint64_t seg, Level want) {
  if (seg >= array.geometry().segment_count()) raise(Errc::out_of_range, "no such segment");
  if (array.level(seg) != want) {
    raise(Errc::wrong_level, "segment " + std::to_string(seg) + " is not " +
                                 std::string(level_name(want)));
  }
  if (array.mode().degraded()) {
    raise(Errc::device_offline, "conversions are suspended while a device is offline");
  }
}

// Best-effort trim of strip positions; offline devices are left for the
// lazy cleanup pass.
void trim_positions(ElasticArray& array, const std::vector<Location>& where) {
  const auto sb = array.geometry().strip_blocks();
  for (const auto& l : where) {
    auto& dev = *array.devices()[l.device];
    if (!dev.online()) continue;
    try {
      dev.trim(l.lba, sb, IoClass::background);
    } catch (const Error& e) {
      if (e.code() != Errc::device_offline) throw;
    }
  }
}

}  // namespace

void promote_segment(ElasticArray& array, std::uint64_t seg, ConversionTask* task,
                     ConversionTrace* trace) {
  std::shared_lock al(array.array_lock());
  std::unique_lock sl(array.segment_lock(seg));
  check_convertible(array, seg, Level::r5);
  const ArrayGeometry& g = array.geometry();
  const auto& devs = array.devices();
  const PlacementPlan from = g.segment_locations(seg, Level::r5);
  const PlacementPlan to = g.segment_locations(seg, Level::r10);

  mark(task, trace, TaskState::copying, "copy");
  try {
    Block buf;
    for (std::size_t i = 0; i < from.copy_a.size(); ++i) {
      for (std::uint32_t o = 0; o < g.strip_blocks(); ++o) {
        const Location src{from.copy_a[i].device, from.copy_a[i].lba + o};
        const Location dst{to.copy_b[i].device, to.copy_b[i].lba + o};
        const std::uint32_t len = devs[src.device]->stored_len(src.lba);
        if (len == 0) continue;
        devs[src.device]->read_into(src.lba, buf, IoClass::background);
        WriteOptions opt;
        opt.io_class = IoClass::background;
        opt.hint = SizeHint::of_len(len);
        devs[dst.device]->write(dst.lba, buf, opt);
      }
    }
    mark(task, trace, TaskState::copying, "commit");
    array.commit_level(seg, Level::r10);
  } catch (const Error&) {
    if (task != nullptr) task->state = TaskState::failed;
    std::vector<Location> slot2;
    for (int d = 0; d < g.devices(); ++d) slot2.push_back({d, g.slot_lba(seg, 1)});
    try {
      trim_positions(array, slot2);
    } catch (const Error&) {
      // Recovery's cleanup pass reclaims whatever is left.
    }
    throw;
  }
  mark(task, trace, TaskState::committed, "trim");
  trim_positions(array, {*from.parity});
  mark(task, trace, TaskState::trimmed, "done");
}

void demote_segment(ElasticArray& array, std::uint64_t seg, ConversionTask* task,
                    ConversionTrace* trace) {
  std::shared_lock al(array.array_lock());
  std::unique_lock sl(array.segment_lock(seg));
  check_convertible(array, seg, Level::r10);
  const ArrayGeometry& g = array.geometry();
  const auto& devs = array.devices();
  const PlacementPlan from = g.segment_locations(seg, Level::r10);
  const PlacementPlan to = g.segment_locations(seg, Level::r5);

  mark(task, trace, TaskState::copying, "parity");
  try {
    Block parity;
    Block buf;
    std::vector<std::uint32_t> lens(from.copy_a.size());
    for (std::uint32_t o = 0; o < g.strip_blocks(); ++o) {
      parity.fill(0);
      bool any = false;
      for (std::size_t i = 0; i < from.copy_a.size(); ++i) {
        const Location src{from.copy_a[i].device, from.copy_a[i].lba + o};
        lens[i] = devs[src.device]->stored_len(src.lba);
        if (lens[i] == 0) continue;
        any = true;
        devs[src.device]->read_into(src.lba, buf, IoClass::background);
        simd::xor_into(parity, buf);
      }
      if (!any) continue;
      WriteOptions opt;
      opt.io_class = IoClass::background;
      opt.hint = array.parity_hint_for(lens);
      devs[to.parity->device]->write(to.parity->lba + o, parity, opt);
    }
    mark(task, trace, TaskState::copying, "commit");
    array.commit_level(seg, Level::r5);
  } catch (const Error&) {
    if (task != nullptr) task->state = TaskState::failed;
    try {
      trim_positions(array, {*to.parity});
    } catch (const Error&) {
    }
    throw;
  }
  mark(task, trace, TaskState::committed, "trim");
  trim_positions(array, from.copy_b);
  mark(task, trace, TaskState::trimmed, "done");
}

void run_task(ElasticArray& array, ConversionTask& task, ConversionTrace* trace) {
  if (task.direction == Direction::promote) {
    promote_segment(array, task.seg, &task, trace);
  } else {
    demote_segment(array, task.seg, &task, trace);
  }
}

std::string progress_event_json(const ProgressEvent& e) {
  std::ostringstream os;
  os.precision(9);
  os << "{\"t\":" << e.t << ",\"seg\":" << e.seg << ",\"direction\":\""
     << direction_name(e.direction) << "\",\"ok\":" << (e.ok ? "true" : "false")
     << ",\"bytes\":" << e.bytes;
  if (!e.ok) {
    os << ",\"error\":\"";
    for (char c : e.error) {
      if (c == '"' || c == '\\') os << '\\';
      os << c;
    }
    os << '"';
  }
  os << '}';
  return os.str();
}

namespace {

using MinHeap = std::priority_queue<double, std::vector<double>, std::greater<>>;

// Channel-level device model: each device serves `channels` operations at once.
class DeviceClock {
 public:
  DeviceClock(int devices, int channels) : heaps_(devices) {
    for (auto& h : heaps_) {
      for (int c = 0; c < channels; ++c) h.push(0.0);
    }
  }

  double op(int device, double ready, double latency) {
    auto& h = heaps_[device];
    const double start = std::max(ready, h.top());
    h.pop();
    const double end = start + latency;
    h.push(end);
    return end;
  }

 private:
  std::vector<MinHeap> heaps_;
};

double simulate_task(const ArrayGeometry& g, std::uint64_t seg, Direction dir,
                     const DeviceTimingModel& tm, DeviceClock& clk, double start) {
  const double us = 1e-6;
  const int n = g.n();
  const std::uint32_t sb = g.strip_blocks();
  double t = start;
  double phase_end = t;
  for (int i = 0; i < n; ++i) {
    for (std::uint32_t o = 0; o < sb; ++o) {
      phase_end = std::max(phase_end, clk.op(g.data_device(seg, i), t, tm.read_us * us));
    }
  }
  t = phase_end;
  if (dir == Direction::promote) {
    for (int i = 0; i < n; ++i) {
      for (std::uint32_t o = 0; o < sb; ++o) {
        phase_end = std::max(phase_end, clk.op(g.mirror_device(seg, i), t, tm.write_us * us));
      }
    }
  } else {
    t += tm.xor_us_per_block * us * n * sb;
    phase_end = t;
    for (std::uint32_t o = 0; o < sb; ++o) {
      phase_end = std::max(phase_end, clk.op(g.parity_device(seg), t, tm.write_us * us));
    }
  }
  t = phase_end;
  for (int d = 0; d < g.devices(); ++d) {
    for (std::uint64_t b = 0; b < g.bitmap_blocks(); ++b) {
      phase_end = std::max(phase_end, clk.op(d, t, tm.write_us * us));
    }
  }
  t = phase_end;
  if (dir == Direction::promote) {
    phase_end = std::max(phase_end, clk.op(g.parity_device(seg), t, tm.trim_us * us));
  } else {
    for (int i = 0; i < n; ++i) {
      phase_end = std::max(phase_end, clk.op(g.mirror_device(seg, i), t, tm.trim_us * us));
    }
  }
  return phase_end;
}

double max_window(std::vector<std::pair<double, std::uint64_t>> done, double width) {
  std::sort(done.begin(), done.end());
  double best = 0.0;
  double sum = 0.0;
  std::size_t lo = 0;
  for (std::size_t hi = 0; hi < done.size(); ++hi) {
    sum += static_cast<double>(done[hi].second);
    while (done[hi].first - done[lo].first >= width) {
      sum -= static_cast<double>(done[lo].second);
      ++lo;
    }
    best = std::max(best, sum);
  }
  return best;
}

}  // namespace

ConversionReport run_conversion_workers(ElasticArray& array, std::deque<ConversionTask> queue,
                                        const ThrottleConfig& throttle,
                                        const DeviceTimingModel& timing,
                                        const std::function<void(const ProgressEvent&)>& progress) {
  ConversionReport rep;
  const ArrayGeometry& g = array.geometry();
  const std::uint64_t bytes = conversion_bytes(g);
  const std::size_t workers = std::max<std::size_t>(throttle.worker_count, 1);

  MinHeap free_at;
  for (std::size_t w = 0; w < workers; ++w) free_at.push(0.0);
  DeviceClock clk(g.devices(), timing.channels);

  const double rate = throttle.max_bytes_per_sec;
  const double depth =
      std::max(rate * throttle.bucket_seconds, static_cast<double>(bytes));
  double tokens = 0.0;
  double tokens_at = 0.0;

  double busy_promote = 0.0;
  double busy_demote = 0.0;
  std::vector<std::pair<double, std::uint64_t>> done;
  std::vector<std::uint64_t> retried;

  while (!queue.empty()) {
    ConversionTask task = queue.front();
    queue.pop_front();
    double start = free_at.top();
    free_at.pop();
    if (rate > 0.0) {
      tokens = std::min(depth, tokens + rate * (start - tokens_at));
      tokens_at = start;
      if (tokens < static_cast<double>(bytes)) {
        const double wait = (static_cast<double>(bytes) - tokens) / rate;
        start += wait;
        tokens = static_cast<double>(bytes);
        tokens_at = start;
      }
      tokens -= static_cast<double>(bytes);
    }

    ProgressEvent ev;
    ev.seg = task.seg;
    ev.direction = task.direction;
    try {
      run_task(array, task);
      ev.bytes = bytes;
    } catch (const Error& e) {
      ev.ok = false;
      ev.error = e.what();
    }
    const double end = simulate_task(g, task.seg, task.direction, timing, clk, start);
    free_at.push(end);
    ev.t = end;
    if (ev.ok) {
      ++rep.completed;
      if (task.direction == Direction::promote) {
        rep.bytes_promoted += bytes;
        busy_promote += end - start;
      } else {
        rep.bytes_demoted += bytes;
        busy_demote += end - start;
      }
      done.emplace_back(end, bytes);
    } else {
      ++rep.failed;
      const bool first_failure =
          std::find(retried.begin(), retried.end(), task.seg) == retried.end();
      if (throttle.requeue_failed && first_failure) {
        retried.push_back(task.seg);
        task.state = TaskState::pending;
        queue.push_back(task);
      }
    }
    rep.sim_seconds = std::max(rep.sim_seconds, end);
    if (progress) progress(ev);
    rep.events.push_back(std::move(ev));
  }

  const double w = static_cast<double>(workers);
  if (busy_promote > 0.0) {
    rep.promote_bytes_per_sec = static_cast<double>(rep.bytes_promoted) * w / busy_promote;
  }
  if (busy_demote > 0.0) {
    rep.demote_bytes_per_sec = static_cast<double>(rep.bytes_demoted) * w / busy_demote;
  }
  if (rep.sim_seconds > 0.0) {
    rep.bytes_per_sec =
        static_cast<double>(rep.bytes_promoted + rep.bytes_demoted) / rep.sim_seconds;
  }
  rep.max_window_bytes = max_window(std::move(done), 1.0);
  return rep;
}

}  // namespace eraid
