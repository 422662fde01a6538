#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "eraid/iopath/array.hpp"

namespace eraid {

enum class Direction : std::uint8_t { promote, demote };
std::string_view direction_name(Direction d);

enum class TaskState : std::uint8_t { pending, copying, committed, trimmed, failed };
std::string_view task_state_name(TaskState s);

struct ConversionTask {
  std::uint64_t seg = 0;
  Direction direction = Direction::promote;
  TaskState state = TaskState::pending;
};

// Phase names in the order a conversion passed through them.
struct ConversionTrace {
  std::vector<std::string> phases;
};

// R5 -> R10: copy the data strips skewed into slot 2, flip the level bit
// (commit point), then trim the parity position. Takes the segment lock.
// DeviceOffline or OutOfSpace before the commit trims slot 2 again and leaves
// a valid R5 segment.
void promote_segment(ElasticArray& array, std::uint64_t seg, ConversionTask* task = nullptr,
                     ConversionTrace* trace = nullptr);

// R10 -> R5: XOR copy A into the parity position, flip the bit, trim slot 2.
void demote_segment(ElasticArray& array, std::uint64_t seg, ConversionTask* task = nullptr,
                    ConversionTrace* trace = nullptr);

void run_task(ElasticArray& array, ConversionTask& task, ConversionTrace* trace = nullptr);

// Bytes of user data a conversion moves: n strips.
std::uint64_t conversion_bytes(const ArrayGeometry& g);

struct ThrottleConfig {
  double max_bytes_per_sec = 0.0;   // 0: unthrottled
  std::size_t worker_count = 8;
  double bucket_seconds = 0.1;      // token bucket depth
  bool requeue_failed = false;      // retry a failed task once at the back of the queue
};

// Per-device service model used to place conversions on a simulated clock.
struct DeviceTimingModel {
  double read_us = 80.0;
  double write_us = 25.0;
  double trim_us = 5.0;
  double xor_us_per_block = 1.5;
  int channels = 64;   // concurrent operations per device (8 channels x 8 dies)
};

struct ProgressEvent {
  double t = 0.0;        // simulated seconds at completion
  std::uint64_t seg = 0;
  Direction direction = Direction::promote;
  bool ok = true;
  std::uint64_t bytes = 0;
  std::string error;
};

std::string progress_event_json(const ProgressEvent& e);

struct ConversionReport {
  std::size_t completed = 0;
  std::size_t failed = 0;
  std::uint64_t bytes_promoted = 0;
  std::uint64_t bytes_demoted = 0;
  double sim_seconds = 0.0;
  // Throughput each direction would reach with all workers on it.
  double promote_bytes_per_sec = 0.0;
  double demote_bytes_per_sec = 0.0;
  double bytes_per_sec = 0.0;
  // Largest byte count completed within any 1 s interval.
  double max_window_bytes = 0.0;
  std::vector<ProgressEvent> events;
};

ConversionReport run_conversion_workers(
    ElasticArray& array, std::deque<ConversionTask> queue, const ThrottleConfig& throttle,
    const DeviceTimingModel& timing = {},
    const std::function<void(const ProgressEvent&)>& progress = {});

}  // namespace eraid
